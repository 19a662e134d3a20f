#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "socibench/exact.hpp"

namespace socibench {

// Observations and internal states are flat int vectors; environments and
// policies interpret their own encodings. Exact engines use them as map keys.
using Obs = std::vector<int>;
using State = std::vector<int>;

// Distribution over legal actions; probabilities are exact and sum to 1.
using ActionDist = std::vector<std::pair<int, Exact>>;

// Raised when an evaluation cannot produce a trustworthy value (budget blown,
// singular system, inconclusive stochastic comparison, degenerate inputs).
// Configuration mistakes raise std::invalid_argument instead.
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

struct EnvDescriptor {
  std::string id;
  int slot_count = 0;
  std::vector<std::vector<int>> teams;  // partition of 0-based slots
  std::vector<std::string> action_names;
  Rational reward_min;
  Rational reward_max;
  bool fixed_episode = false;  // true: episode_length steps; false: repeated game
  int episode_length = 0;
  bool zero_sum_per_step = false;
  bool zero_sum_in_teams = false;
};

struct EnvStep {
  State state;
  std::vector<Rational> rewards;
  bool terminal = false;
};

// Deterministic simultaneous-move environment; all stochasticity lives in
// policies. States are immutable values.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvDescriptor& descriptor() const = 0;
  virtual State initial_state() const = 0;
  virtual Obs observation(const State& s, int slot) const = 0;
  virtual EnvStep step(const State& s, const std::vector<int>& actions) const = 0;

  const std::string& id() const { return descriptor().id; }
  int slots() const { return descriptor().slot_count; }
  int actions() const { return static_cast<int>(descriptor().action_names.size()); }
  int team_of(int slot) const {
    const auto& ts = descriptor().teams;
    for (int t = 0; t < static_cast<int>(ts.size()); ++t)
      for (int s : ts[t])
        if (s == slot) return t;
    throw std::logic_error("slot not in any team");
  }
};

using EnvPtr = std::shared_ptr<const Environment>;

// Policy as a value-state machine. Per step: act(state, obs) yields an exact
// action distribution; after the environment resolves, advance folds in the
// observation acted on, the chosen action, and the received reward.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual const std::string& id() const = 0;
  virtual bool deterministic() const = 0;
  // Environment ids this policy is compatible with.
  virtual std::vector<std::string> compatible() const = 0;
  // horizon_k = 0 means unbounded (limit evaluation).
  virtual State reset(int horizon_k) const = 0;
  virtual ActionDist act(const State& s, const Obs& obs) const = 0;
  virtual State advance(const State& s, const Obs& obs, int action,
                        const Rational& reward) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

inline void check_compatible(const Policy& p, const Environment& env) {
  auto tags = p.compatible();
  if (std::find(tags.begin(), tags.end(), env.id()) == tags.end())
    throw std::invalid_argument("incompatible-policy: " + p.id() + " vs " + env.id());
}

struct LineUp {
  std::vector<PolicyPtr> slots;
};

// nullptr marks a FREE position.
struct LineUpPattern {
  std::vector<PolicyPtr> slots;

  std::vector<int> free_slots() const {
    std::vector<int> f;
    for (int i = 0; i < static_cast<int>(slots.size()); ++i)
      if (!slots[i]) f.push_back(i);
    return f;
  }
};

// Fills free positions of the pattern in slot order.
inline LineUp instantiate(const LineUpPattern& pattern,
                          const std::vector<PolicyPtr>& fills) {
  LineUp l;
  l.slots = pattern.slots;
  size_t next = 0;
  for (auto& s : l.slots) {
    if (!s) {
      if (next >= fills.size()) throw std::invalid_argument("not enough fill policies");
      s = fills[next++];
    }
  }
  if (next != fills.size()) throw std::invalid_argument("too many fill policies");
  return l;
}

// All |pool|^(length-|free|) patterns with the given free positions, ordered
// lexicographically by pool index so downstream sums are reproducible.
inline std::vector<LineUpPattern> enumerate_patterns(
    int length, const std::vector<int>& free_positions,
    const std::vector<PolicyPtr>& pool) {
  std::vector<bool> is_free(length, false);
  for (int f : free_positions) {
    if (f < 0 || f >= length) throw std::invalid_argument("free position out of range");
    is_free[f] = true;
  }
  int filled = length - static_cast<int>(free_positions.size());
  if (filled > 0 && pool.empty())
    throw std::invalid_argument("empty-pool-with-filled-positions");
  std::vector<LineUpPattern> out;
  std::vector<int> idx(filled, 0);
  while (true) {
    LineUpPattern p;
    p.slots.assign(length, nullptr);
    int j = 0;
    for (int i = 0; i < length; ++i)
      if (!is_free[i]) p.slots[i] = pool[idx[j++]];
    out.push_back(std::move(p));
    if (filled == 0) break;
    int carry = filled - 1;
    while (carry >= 0 && ++idx[carry] == static_cast<int>(pool.size())) {
      idx[carry] = 0;
      --carry;
    }
    if (carry < 0) break;
  }
  return out;
}

// Weight families; every family is normalized (checked to 1e-12 equivalent:
// exact rational equality to 1).
struct WeightScheme {
  std::map<std::string, Rational> policy_weights;           // w_Pi by policy id
  std::map<std::string, Rational> env_weights;              // w_M by env id
  std::map<std::string, std::vector<Rational>> slot_weights;  // w_S by env id

  const Rational& policy_weight(const std::string& id) const {
    auto it = policy_weights.find(id);
    if (it == policy_weights.end()) throw std::invalid_argument("unknown-policy: " + id);
    return it->second;
  }
};

inline WeightScheme uniform_weights(const std::vector<PolicyPtr>& pool,
                                    const std::vector<EnvPtr>& envs) {
  WeightScheme w;
  if (!pool.empty()) {
    Rational u(1, static_cast<long>(pool.size()));
    for (auto& p : pool) w.policy_weights[p->id()] = u;
  }
  if (!envs.empty()) {
    Rational u(1, static_cast<long>(envs.size()));
    for (auto& e : envs) {
      w.env_weights[e->id()] = u;
      w.slot_weights[e->id()] =
          std::vector<Rational>(e->slots(), Rational(1, e->slots()));
    }
  }
  return w;
}

// Product-form pattern weight over instantiated positions.
inline Rational pattern_weight(const WeightScheme& scheme, const LineUpPattern& p) {
  Rational w(1);
  for (auto& s : p.slots)
    if (s) w *= scheme.policy_weight(s->id());
  return w;
}

// Uniform policy weights over a pool given only the pool (the common case in
// property queries where the pool is local to the query).
inline std::vector<Rational> uniform_pool_weights(size_t n) {
  return std::vector<Rational>(n, n ? Rational(1, static_cast<long>(n)) : Rational(0));
}

// A policy pool with per-member weights. Empty weights mean uniform; weights
// are normalized at the point of use.
struct WeightedPool {
  std::vector<PolicyPtr> members;
  std::vector<Rational> weights;

  bool uniform() const {
    if (weights.empty()) return true;
    for (size_t i = 1; i < weights.size(); ++i)
      if (weights[i] != weights[0]) return false;
    return true;
  }
};

// Normalizes a weight vector to total mass 1. Empty input means uniform over
// n entries. Negative weights are configuration errors; an all-zero family
// cannot be normalized at all.
inline std::vector<Rational> normalized_weights(std::vector<Rational> w, size_t n,
                                                const std::string& what) {
  if (w.empty()) return uniform_pool_weights(n);
  if (w.size() != n)
    throw std::invalid_argument(what + ": expected " + std::to_string(n) +
                                " weights, got " + std::to_string(w.size()));
  Rational sum(0);
  for (const auto& x : w) {
    if (x < 0) throw std::invalid_argument(what + ": negative weight");
    sum += x;
  }
  if (sum == 0) throw EvalError("all-zero-weights: " + what);
  for (auto& x : w) x /= sum;
  return w;
}

inline std::vector<Rational> normalized_pool(const WeightedPool& pool, const std::string& what) {
  return normalized_weights(pool.weights, pool.members.size(), what);
}

// Id-indexed weight lookup for pattern products. Pools must not carry two
// members under one id ("#k" clones exist precisely to avoid that).
inline std::map<std::string, Rational> weight_map(const std::vector<PolicyPtr>& members,
                                                  const std::vector<Rational>& weights) {
  std::map<std::string, Rational> m;
  for (size_t i = 0; i < members.size(); ++i)
    if (!m.emplace(members[i]->id(), weights[i]).second)
      throw std::invalid_argument("duplicate-policy-id: " + members[i]->id());
  return m;
}

inline Rational pattern_weight_by_id(const LineUpPattern& p,
                                     const std::map<std::string, Rational>& w) {
  Rational out(1);
  for (const auto& s : p.slots)
    if (s) {
      auto it = w.find(s->id());
      if (it == w.end()) throw std::invalid_argument("unknown-policy: " + s->id());
      out *= it->second;
    }
  return out;
}

}  // namespace socibench

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "socibench/core.hpp"
#include "socibench/exact.hpp"

namespace socibench {

// Budget or definedness failures that callers may want to catch and downgrade.
enum class EvalMethod { exact_rollout, exact_enumeration, exact_limit, monte_carlo };

inline const char* method_name(EvalMethod m) {
  switch (m) {
    case EvalMethod::exact_rollout: return "exact-rollout";
    case EvalMethod::exact_enumeration: return "exact-enumeration";
    case EvalMethod::exact_limit: return "exact-limit";
    case EvalMethod::monte_carlo: return "monte-carlo";
  }
  return "unknown";
}

struct EvalOptions {
  // 0 selects the limit average (full episode for fixed-episode environments).
  int horizon_k = 0;
  bool allow_monte_carlo = true;
  int mc_samples = 2000;
  std::uint64_t seed = 1;
  // Support cap for exact forward enumeration (distribution atoms).
  std::size_t max_exact_states = 20000;
  // Monte Carlo truncation for limit averages of repeated games.
  int mc_burn_in = 64;
  int mc_horizon = 256;
};

struct RewardProfile {
  std::vector<Exact> values;   // per-slot expected average rewards, exact methods only
  std::vector<double> approx;  // per-slot double view, always filled
  EvalMethod method = EvalMethod::exact_rollout;
  long samples = 0;            // Monte Carlo rollouts used
  double ci_halfwidth = 0.0;   // 95% CI halfwidth (max over slots); 0 when exact
  bool exact() const { return method != EvalMethod::monte_carlo && values.size() == approx.size(); }

  const Exact& exact_value(int slot) const {
    if (!exact()) throw EvalError("exact-value-unavailable");
    return values.at(static_cast<size_t>(slot));
  }
};

namespace detail {

// Joint configuration key: environment state plus every policy state, with
// explicit lengths so variable-size states cannot alias.
inline std::vector<int> joint_key(const State& env_s, const std::vector<State>& pol_s) {
  std::vector<int> k;
  size_t total = env_s.size() + 2;
  for (auto& p : pol_s) total += p.size() + 1;
  k.reserve(total);
  k.push_back(static_cast<int>(env_s.size()));
  k.insert(k.end(), env_s.begin(), env_s.end());
  k.push_back(static_cast<int>(pol_s.size()));
  for (auto& p : pol_s) {
    k.push_back(static_cast<int>(p.size()));
    k.insert(k.end(), p.begin(), p.end());
  }
  return k;
}

// Counter-split seeding: one root seed, one independent stream per counter.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline int sample_action(const ActionDist& dist, std::mt19937_64& rng) {
  if (dist.empty()) throw std::logic_error("empty action distribution");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng);
  double acc = 0.0;
  for (auto& [a, p] : dist) {
    acc += to_double(p);
    if (u < acc) return a;
  }
  return dist.back().first;
}

inline int point_action(const ActionDist& dist) {
  if (dist.size() != 1 || !(dist[0].second == Exact(1)))
    throw std::logic_error("deterministic policy returned a spread distribution");
  return dist[0].first;
}

struct Branch {
  std::vector<int> actions;
  Exact prob;
};

// Cartesian product of per-slot action distributions.
inline std::vector<Branch> expand_joint_actions(const std::vector<ActionDist>& dists) {
  std::vector<Branch> out;
  out.push_back({{}, Exact(1)});
  for (auto& d : dists) {
    std::vector<Branch> next;
    next.reserve(out.size() * d.size());
    for (auto& b : out)
      for (auto& [a, p] : d) {
        Branch nb = b;
        nb.actions.push_back(a);
        nb.prob *= p;
        next.push_back(std::move(nb));
      }
    out = std::move(next);
  }
  return out;
}

// Gaussian elimination over the exact scalar field, multiple right-hand
// sides. A is n x n, B is n x m; both are consumed. Solution lands in B.
inline void solve_linear_exact(std::vector<std::vector<Exact>>& A,
                               std::vector<std::vector<Exact>>& B) {
  const size_t n = A.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    while (piv < n && A[piv][col].sign() == 0) ++piv;
    if (piv == n) throw EvalError("singular-linear-system");
    std::swap(A[piv], A[col]);
    std::swap(B[piv], B[col]);
    Exact inv = Exact(1);
    inv /= A[col][col];
    for (size_t j = col; j < n; ++j) A[col][j] *= inv;
    for (auto& b : B[col]) b *= inv;
    for (size_t row = 0; row < n; ++row) {
      if (row == col) continue;
      Exact f = A[row][col];
      if (f.sign() == 0) continue;
      for (size_t j = col; j < n; ++j) {
        Exact t = A[col][j];
        t *= f;
        A[row][j] -= t;
      }
      for (size_t j = 0; j < B[row].size(); ++j) {
        Exact t = B[col][j];
        t *= f;
        B[row][j] -= t;
      }
    }
  }
}

}  // namespace detail

// Memo for reward profiles. Keys fold in every option that can change the
// result; clone ids ("name#2") collapse to their base policy.
struct RewardCache {
  std::map<std::string, RewardProfile> memo;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

namespace detail {

inline std::string canonical_id(const std::string& id) {
  auto pos = id.find('#');
  return pos == std::string::npos ? id : id.substr(0, pos);
}

inline std::string cache_key(const Environment& env, const LineUp& l, int k_eff,
                             const EvalOptions& o, bool any_stochastic) {
  std::string key = env.id();
  for (auto& p : l.slots) {
    key += '|';
    key += canonical_id(p->id());
  }
  key += "|k=" + std::to_string(k_eff);
  key += "|cap=" + std::to_string(o.max_exact_states);
  if (any_stochastic) {
    key += "|mc=" + std::to_string(o.allow_monte_carlo ? 1 : 0);
    key += "," + std::to_string(o.mc_samples);
    key += "," + std::to_string(o.seed);
    key += "," + std::to_string(o.mc_burn_in);
    key += "," + std::to_string(o.mc_horizon);
  }
  return key;
}

struct StepOutcome {
  State env_state;
  std::vector<State> pol_states;
  std::vector<Rational> rewards;
  bool terminal = false;
};

// One synchronous step: observe, act (action supplied), step, advance.
inline StepOutcome advance_joint(const Environment& env, const std::vector<PolicyPtr>& pols,
                                 const State& env_s, const std::vector<State>& pol_s,
                                 const std::vector<Obs>& obs, const std::vector<int>& actions) {
  EnvStep st = env.step(env_s, actions);
  StepOutcome out;
  out.pol_states.reserve(pols.size());
  for (size_t i = 0; i < pols.size(); ++i)
    out.pol_states.push_back(
        pols[i]->advance(pol_s[i], obs[i], actions[i], st.rewards[i]));
  out.env_state = std::move(st.state);
  out.rewards = std::move(st.rewards);
  out.terminal = st.terminal;
  return out;
}

inline std::vector<Obs> observe_all(const Environment& env, const State& s, size_t n) {
  std::vector<Obs> obs;
  obs.reserve(n);
  for (size_t i = 0; i < n; ++i) obs.push_back(env.observation(s, static_cast<int>(i)));
  return obs;
}

inline RewardProfile finish_exact(std::vector<Exact> vals, EvalMethod method) {
  RewardProfile rp;
  rp.method = method;
  rp.approx.reserve(vals.size());
  for (auto& v : vals) rp.approx.push_back(to_double(v));
  rp.values = std::move(vals);
  return rp;
}

// All-deterministic line-ups: plain rollout. Finite horizons average the
// first k rewards; the limit average comes from cycle detection on the joint
// configuration. If no cycle shows up within the step cap the truncated
// average is returned with an honest error bound in ci_halfwidth.
inline RewardProfile eval_deterministic(const Environment& env,
                                        const std::vector<PolicyPtr>& pols, int k_eff,
                                        const EvalOptions& opts) {
  const int n = env.slots();
  State s = env.initial_state();
  std::vector<State> ps;
  ps.reserve(pols.size());
  for (auto& p : pols) ps.push_back(p->reset(k_eff));

  const int cap = k_eff > 0 ? k_eff : 1000;
  std::map<std::vector<int>, int> seen;  // joint key -> step index
  std::vector<std::vector<Rational>> prefix;  // prefix[t][i] = sum of first t rewards
  prefix.push_back(std::vector<Rational>(n, Rational(0)));

  for (int t = 0; t < cap; ++t) {
    if (k_eff == 0) {
      auto key = joint_key(s, ps);
      auto [it, fresh] = seen.emplace(std::move(key), t);
      if (!fresh) {
        const int start = it->second;
        const int len = t - start;
        std::vector<Exact> vals;
        vals.reserve(n);
        for (int i = 0; i < n; ++i) {
          Rational cycle_sum = prefix[t][i] - prefix[start][i];
          vals.emplace_back(Rational(cycle_sum / len));
        }
        return finish_exact(std::move(vals), EvalMethod::exact_rollout);
      }
    }
    auto obs = observe_all(env, s, pols.size());
    std::vector<int> actions(pols.size());
    for (size_t i = 0; i < pols.size(); ++i)
      actions[i] = point_action(pols[i]->act(ps[i], obs[i]));
    auto out = advance_joint(env, pols, s, ps, obs, actions);
    std::vector<Rational> row = prefix.back();
    for (int i = 0; i < n; ++i) row[i] += out.rewards[i];
    prefix.push_back(std::move(row));
    s = std::move(out.env_state);
    ps = std::move(out.pol_states);
    if (out.terminal) {
      const int steps = t + 1;
      std::vector<Exact> vals;
      vals.reserve(n);
      for (int i = 0; i < n; ++i) vals.emplace_back(Rational(prefix[steps][i] / steps));
      return finish_exact(std::move(vals), EvalMethod::exact_rollout);
    }
  }

  std::vector<Exact> vals;
  vals.reserve(n);
  for (int i = 0; i < n; ++i) vals.emplace_back(Rational(prefix[cap][i] / cap));
  auto rp = finish_exact(std::move(vals), EvalMethod::exact_rollout);
  if (k_eff == 0) {
    // No cycle within the cap: truncated average, bounded drift.
    const auto& d = env.descriptor();
    rp.ci_halfwidth = to_double(Rational(d.reward_max - d.reward_min)) / cap;
  }
  return rp;
}

// Exact finite-horizon evaluation for stochastic line-ups: evolve the full
// joint distribution forward k steps and accumulate expected rewards.
inline RewardProfile eval_enumeration(const Environment& env,
                                      const std::vector<PolicyPtr>& pols, int k_eff,
                                      const EvalOptions& opts, bool* blown) {
  const int n = env.slots();
  struct Node {
    State env_state;
    std::vector<State> pol_states;
  };
  std::map<std::vector<int>, std::pair<Node, Exact>> dist;
  {
    Node init;
    init.env_state = env.initial_state();
    for (auto& p : pols) init.pol_states.push_back(p->reset(k_eff));
    auto key = joint_key(init.env_state, init.pol_states);
    dist.emplace(std::move(key), std::make_pair(std::move(init), Exact(1)));
  }

  std::vector<Exact> total(n, Exact(0));  // sum over steps of E[r_t]
  int steps_done = 0;
  for (int t = 0; t < k_eff; ++t) {
    std::map<std::vector<int>, std::pair<Node, Exact>> next;
    bool all_terminal = true;
    for (auto& [key, entry] : dist) {
      auto& [node, mass] = entry;
      auto obs = observe_all(env, node.env_state, pols.size());
      std::vector<ActionDist> dists;
      dists.reserve(pols.size());
      for (size_t i = 0; i < pols.size(); ++i)
        dists.push_back(pols[i]->act(node.pol_states[i], obs[i]));
      for (auto& br : expand_joint_actions(dists)) {
        auto out = advance_joint(env, pols, node.env_state, node.pol_states, obs, br.actions);
        Exact w = mass;
        w *= br.prob;
        for (int i = 0; i < n; ++i) {
          Exact r(out.rewards[i]);
          r *= w;
          total[i] += r;
        }
        if (!out.terminal) {
          all_terminal = false;
          Node nn;
          nn.env_state = std::move(out.env_state);
          nn.pol_states = std::move(out.pol_states);
          auto nkey = joint_key(nn.env_state, nn.pol_states);
          auto it = next.find(nkey);
          if (it == next.end())
            next.emplace(std::move(nkey), std::make_pair(std::move(nn), w));
          else
            it->second.second += w;
        }
        if (next.size() > opts.max_exact_states) {
          if (blown) *blown = true;
          return {};
        }
      }
    }
    ++steps_done;
    if (all_terminal || next.empty()) break;
    dist = std::move(next);
  }

  std::vector<Exact> vals;
  vals.reserve(n);
  for (int i = 0; i < n; ++i) {
    Exact v = total[i];
    v /= Exact(steps_done);
    vals.push_back(std::move(v));
  }
  return finish_exact(std::move(vals), EvalMethod::exact_enumeration);
}

// Exact limit average for stochastic line-ups. The reachable joint chain is
// finite and explicit: recurrent classes are bottom strongly connected
// components; each contributes its stationary average (Cesaro limit, valid
// for periodic classes too); transient mass is routed by absorption
// probabilities, all solved exactly.
constexpr std::size_t kLimitChainCap = 256;

inline RewardProfile eval_exact_limit(const Environment& env,
                                      const std::vector<PolicyPtr>& pols,
                                      const EvalOptions& opts, bool* blown) {
  const int n = env.slots();
  struct Node {
    State env_state;
    std::vector<State> pol_states;
  };
  std::vector<Node> nodes;
  std::map<std::vector<int>, int> index;
  std::vector<std::map<int, Exact>> edges;       // node -> successor -> prob
  std::vector<std::vector<Exact>> step_reward;   // node -> per-slot E[r]

  const std::size_t chain_cap = std::min(kLimitChainCap, opts.max_exact_states);
  {
    Node init;
    init.env_state = env.initial_state();
    for (auto& p : pols) init.pol_states.push_back(p->reset(0));
    index.emplace(joint_key(init.env_state, init.pol_states), 0);
    nodes.push_back(std::move(init));
  }
  for (size_t cur = 0; cur < nodes.size(); ++cur) {
    auto obs = observe_all(env, nodes[cur].env_state, pols.size());
    std::vector<ActionDist> dists;
    dists.reserve(pols.size());
    for (size_t i = 0; i < pols.size(); ++i)
      dists.push_back(pols[i]->act(nodes[cur].pol_states[i], obs[i]));
    std::map<int, Exact> out_edges;
    std::vector<Exact> er(n, Exact(0));
    for (auto& br : expand_joint_actions(dists)) {
      auto out = advance_joint(env, pols, nodes[cur].env_state, nodes[cur].pol_states,
                               obs, br.actions);
      for (int i = 0; i < n; ++i) {
        Exact r(out.rewards[i]);
        r *= br.prob;
        er[i] += r;
      }
      Node nn;
      nn.env_state = std::move(out.env_state);
      nn.pol_states = std::move(out.pol_states);
      auto key = joint_key(nn.env_state, nn.pol_states);
      auto [it, fresh] = index.emplace(std::move(key), static_cast<int>(nodes.size()));
      if (fresh) {
        nodes.push_back(std::move(nn));
        if (nodes.size() > chain_cap) {
          if (blown) *blown = true;
          return {};
        }
      }
      auto [eit, enew] = out_edges.emplace(it->second, br.prob);
      if (!enew) eit->second += br.prob;
    }
    edges.push_back(std::move(out_edges));
    step_reward.push_back(std::move(er));
  }

  const int m = static_cast<int>(nodes.size());

  // Tarjan, iterative.
  std::vector<int> comp(m, -1), low(m, 0), num(m, -1), stk;
  std::vector<bool> on_stack(m, false);
  int counter = 0, ncomp = 0;
  struct Frame {
    int v;
    std::map<int, Exact>::const_iterator it;
  };
  for (int root = 0; root < m; ++root) {
    if (num[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, edges[root].begin()});
    num[root] = low[root] = counter++;
    stk.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& fr = call.back();
      if (fr.it != edges[fr.v].end()) {
        int w = fr.it->first;
        ++fr.it;
        if (num[w] == -1) {
          num[w] = low[w] = counter++;
          stk.push_back(w);
          on_stack[w] = true;
          call.push_back({w, edges[w].begin()});
        } else if (on_stack[w]) {
          low[fr.v] = std::min(low[fr.v], num[w]);
        }
      } else {
        int v = fr.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        if (low[v] == num[v]) {
          while (true) {
            int w = stk.back();
            stk.pop_back();
            on_stack[w] = false;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
      }
    }
  }

  std::vector<bool> bottom(ncomp, true);
  for (int v = 0; v < m; ++v)
    for (auto& [w, p] : edges[v])
      if (comp[w] != comp[v]) bottom[comp[v]] = false;

  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < m; ++v) members[comp[v]].push_back(v);

  // Stationary average reward of every bottom class.
  std::vector<int> classes;
  for (int c = 0; c < ncomp; ++c)
    if (bottom[c]) classes.push_back(c);
  std::map<int, std::vector<Exact>> class_avg;  // comp id -> per-slot average
  for (int c : classes) {
    auto& mem = members[c];
    const size_t sz = mem.size();
    std::vector<int> pos(m, -1);
    for (size_t i = 0; i < sz; ++i) pos[mem[i]] = static_cast<int>(i);
    std::vector<std::vector<Exact>> A(sz, std::vector<Exact>(sz, Exact(0)));
    std::vector<std::vector<Exact>> B(sz, std::vector<Exact>(1, Exact(0)));
    // x^T P = x^T with sum(x) = 1, written as (P^T - I) x = 0.
    for (size_t j = 0; j < sz; ++j) {
      for (auto& [w, p] : edges[mem[j]]) A[pos[w]][j] += p;
      A[j][j] -= Exact(1);
    }
    for (size_t j = 0; j < sz; ++j) A[sz - 1][j] = Exact(1);
    B[sz - 1][0] = Exact(1);
    solve_linear_exact(A, B);
    std::vector<Exact> avg(n, Exact(0));
    for (size_t i = 0; i < sz; ++i)
      for (int slot = 0; slot < n; ++slot) {
        Exact t = step_reward[mem[i]][slot];
        t *= B[i][0];
        avg[slot] += t;
      }
    class_avg[c] = std::move(avg);
  }

  // Absorption probabilities from the initial node.
  std::vector<Exact> absorb(classes.size(), Exact(0));
  if (bottom[comp[0]]) {
    for (size_t k = 0; k < classes.size(); ++k)
      if (classes[k] == comp[0]) absorb[k] = Exact(1);
  } else {
    std::vector<int> transient;
    std::vector<int> tpos(m, -1);
    for (int v = 0; v < m; ++v)
      if (!bottom[comp[v]]) {
        tpos[v] = static_cast<int>(transient.size());
        transient.push_back(v);
      }
    const size_t tn = transient.size();
    std::vector<std::vector<Exact>> A(tn, std::vector<Exact>(tn, Exact(0)));
    std::vector<std::vector<Exact>> B(tn, std::vector<Exact>(classes.size(), Exact(0)));
    for (size_t i = 0; i < tn; ++i) {
      A[i][i] = Exact(1);
      for (auto& [w, p] : edges[transient[i]]) {
        if (tpos[w] >= 0) {
          A[i][tpos[w]] -= p;
        } else {
          for (size_t k = 0; k < classes.size(); ++k)
            if (classes[k] == comp[w]) B[i][k] += p;
        }
      }
    }
    solve_linear_exact(A, B);
    absorb = B[tpos[0]];
  }

  std::vector<Exact> vals(n, Exact(0));
  for (size_t k = 0; k < classes.size(); ++k) {
    auto& avg = class_avg[classes[k]];
    for (int i = 0; i < n; ++i) {
      Exact t = avg[i];
      t *= absorb[k];
      vals[i] += t;
    }
  }
  return finish_exact(std::move(vals), EvalMethod::exact_limit);
}

inline RewardProfile eval_monte_carlo(const Environment& env,
                                      const std::vector<PolicyPtr>& pols, int k_eff,
                                      const EvalOptions& opts) {
  const int n = env.slots();
  const long runs = std::max(1, opts.mc_samples);
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  const int horizon = k_eff > 0 ? k_eff : opts.mc_burn_in + opts.mc_horizon;
  const int skip = k_eff > 0 ? 0 : opts.mc_burn_in;

  for (long run = 0; run < runs; ++run) {
    std::mt19937_64 rng(mix_seed(opts.seed, static_cast<std::uint64_t>(run)));
    State s = env.initial_state();
    std::vector<State> ps;
    ps.reserve(pols.size());
    for (auto& p : pols) ps.push_back(p->reset(k_eff));
    std::vector<double> acc(n, 0.0);
    int counted = 0;
    for (int t = 0; t < horizon; ++t) {
      auto obs = observe_all(env, s, pols.size());
      std::vector<int> actions(pols.size());
      for (size_t i = 0; i < pols.size(); ++i)
        actions[i] = sample_action(pols[i]->act(ps[i], obs[i]), rng);
      auto out = advance_joint(env, pols, s, ps, obs, actions);
      if (t >= skip) {
        for (int i = 0; i < n; ++i) acc[i] += to_double(out.rewards[i]);
        ++counted;
      }
      s = std::move(out.env_state);
      ps = std::move(out.pol_states);
      if (out.terminal) break;
    }
    for (int i = 0; i < n; ++i) {
      double x = counted ? acc[i] / counted : 0.0;
      double d = x - mean[i];
      mean[i] += d / static_cast<double>(run + 1);
      m2[i] += d * (x - mean[i]);
    }
  }

  RewardProfile rp;
  rp.method = EvalMethod::monte_carlo;
  rp.samples = runs;
  rp.approx = mean;
  double worst = 0.0;
  if (runs > 1)
    for (int i = 0; i < n; ++i) {
      double var = m2[i] / static_cast<double>(runs - 1);
      worst = std::max(worst, 1.96 * std::sqrt(var / static_cast<double>(runs)));
    }
  rp.ci_halfwidth = worst;
  return rp;
}

}  // namespace detail

// Expected average reward of a complete line-up, one value per slot.
// Deterministic line-ups always resolve exactly (finite horizon or cycle
// limit). Stochastic ones resolve exactly while the joint support or chain
// fits the budget, then fall back to seeded Monte Carlo when allowed.
inline RewardProfile expected_average_reward(const Environment& env, const LineUp& lineup,
                                             const EvalOptions& opts = {},
                                             RewardCache* cache = nullptr) {
  const auto& d = env.descriptor();
  if (static_cast<int>(lineup.slots.size()) != d.slot_count)
    throw std::invalid_argument("lineup-size-mismatch");
  for (auto& p : lineup.slots) {
    if (!p) throw std::invalid_argument("lineup-has-free-slot");
    check_compatible(*p, env);
  }

  int k_eff = opts.horizon_k;
  if (d.fixed_episode)
    k_eff = k_eff > 0 ? std::min(k_eff, d.episode_length) : d.episode_length;

  bool any_stochastic = false;
  for (auto& p : lineup.slots)
    if (!p->deterministic()) any_stochastic = true;

  std::string key;
  if (cache) {
    key = detail::cache_key(env, lineup, k_eff, opts, any_stochastic);
    auto it = cache->memo.find(key);
    if (it != cache->memo.end()) {
      ++cache->hits;
      return it->second;
    }
    ++cache->misses;
  }

  RewardProfile rp;
  if (!any_stochastic) {
    rp = detail::eval_deterministic(env, lineup.slots, k_eff, opts);
  } else {
    bool blown = false;
    if (k_eff > 0)
      rp = detail::eval_enumeration(env, lineup.slots, k_eff, opts, &blown);
    else
      rp = detail::eval_exact_limit(env, lineup.slots, opts, &blown);
    if (blown) {
      if (!opts.allow_monte_carlo) throw EvalError("exact-budget-exceeded");
      rp = detail::eval_monte_carlo(env, lineup.slots, k_eff, opts);
    }
  }

  if (cache) cache->memo.emplace(std::move(key), rp);
  return rp;
}

// Distribution over the length-k action sequences one slot emits, exact.
// Keys are the action sequences; values sum to 1.
inline std::map<std::vector<int>, Exact> action_distribution(const Environment& env,
                                                             const LineUp& lineup, int slot,
                                                             int k,
                                                             std::size_t max_states = 20000) {
  const auto& d = env.descriptor();
  if (static_cast<int>(lineup.slots.size()) != d.slot_count)
    throw std::invalid_argument("lineup-size-mismatch");
  if (slot < 0 || slot >= d.slot_count) throw std::invalid_argument("slot out of range");
  if (k <= 0) throw std::invalid_argument("horizon must be positive");
  if (d.fixed_episode) k = std::min(k, d.episode_length);
  for (auto& p : lineup.slots) {
    if (!p) throw std::invalid_argument("lineup-has-free-slot");
    check_compatible(*p, env);
  }

  struct Node {
    State env_state;
    std::vector<State> pol_states;
    std::vector<int> seq;
    bool done = false;
  };
  std::vector<std::pair<Node, Exact>> dist;
  {
    Node init;
    init.env_state = env.initial_state();
    for (auto& p : lineup.slots) init.pol_states.push_back(p->reset(k));
    dist.emplace_back(std::move(init), Exact(1));
  }
  for (int t = 0; t < k; ++t) {
    std::vector<std::pair<Node, Exact>> next;
    for (auto& [node, mass] : dist) {
      if (node.done) {
        next.emplace_back(std::move(node), std::move(mass));
        continue;
      }
      auto obs = detail::observe_all(env, node.env_state, lineup.slots.size());
      std::vector<ActionDist> dists;
      for (size_t i = 0; i < lineup.slots.size(); ++i)
        dists.push_back(lineup.slots[i]->act(node.pol_states[i], obs[i]));
      for (auto& br : detail::expand_joint_actions(dists)) {
        auto out = detail::advance_joint(env, lineup.slots, node.env_state,
                                         node.pol_states, obs, br.actions);
        Node nn;
        nn.env_state = std::move(out.env_state);
        nn.pol_states = std::move(out.pol_states);
        nn.seq = node.seq;
        nn.seq.push_back(br.actions[static_cast<size_t>(slot)]);
        nn.done = out.terminal;
        Exact w = mass;
        w *= br.prob;
        next.emplace_back(std::move(nn), std::move(w));
      }
      if (next.size() > max_states) throw EvalError("exact-budget-exceeded");
    }
    dist = std::move(next);
  }

  std::map<std::vector<int>, Exact> out;
  for (auto& [node, mass] : dist) {
    auto [it, fresh] = out.emplace(node.seq, mass);
    if (!fresh) it->second += mass;
  }
  return out;
}

// Distribution divergence: 1 when the two action-sequence distributions
// differ, 0 when they coincide (exact comparison).
inline Exact divergence_actions(const std::map<std::vector<int>, Exact>& a,
                                const std::map<std::vector<int>, Exact>& b) {
  if (a.size() != b.size()) return Exact(1);
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return Exact(1);
    if (!(ia->second == ib->second)) return Exact(1);
  }
  return Exact(0);
}

enum class RewardDivergence { kronecker, relative };

// Reward divergence: the exact-comparison form is 1 unless the rewards
// coincide; the relative form is |a-b| / (|a|+|b|) with 0/0 -> 0.
inline Exact divergence_rewards(const Exact& a, const Exact& b,
                                RewardDivergence mode = RewardDivergence::kronecker) {
  Exact diff = a;
  diff -= b;
  if (mode == RewardDivergence::kronecker) return diff.sign() == 0 ? Exact(0) : Exact(1);
  if (diff.sign() == 0) return Exact(0);
  Exact num = diff.sign() < 0 ? -diff : diff;
  Exact aa = a.sign() < 0 ? -a : a;
  Exact bb = b.sign() < 0 ? -b : b;
  Exact den = aa;
  den += bb;
  num /= den;
  return num;
}

// Degenerate-correlation policy: what a zero-variance point cloud means.
// Reward clouds on the y = x diagonal read as +1, on y = -x as -1; the
// all-zero cloud takes the caller's preference (same-team pairs lean +1,
// rival pairs -1). Anything else is undefined.
enum class DegeneratePreference { none, plus, minus };

struct CorrelationResult {
  bool is_exact = false;
  Exact exact;          // valid when is_exact
  double value = 0.0;   // always valid
};

struct WeightedPoint {
  Exact x;
  Exact y;
  Rational w;
};

inline CorrelationResult weighted_correlation(const std::vector<WeightedPoint>& pts,
                                              DegeneratePreference pref =
                                                  DegeneratePreference::none) {
  if (pts.empty()) throw EvalError("undefined-correlation");
  Exact wsum(0), mx(0), my(0);
  for (auto& p : pts) {
    Exact w{p.w};
    wsum += w;
    Exact tx = p.x;
    tx *= w;
    mx += tx;
    Exact ty = p.y;
    ty *= w;
    my += ty;
  }
  if (wsum.sign() <= 0) throw EvalError("undefined-correlation");
  mx /= wsum;
  my /= wsum;
  Exact nsum(0), dx(0), dy(0);
  for (auto& p : pts) {
    Exact w{p.w};
    Exact ex = p.x;
    ex -= mx;
    Exact ey = p.y;
    ey -= my;
    Exact t = ex;
    t *= ey;
    t *= w;
    nsum += t;
    Exact tx = ex;
    tx *= ex;
    tx *= w;
    dx += tx;
    Exact ty = ey;
    ty *= ey;
    ty *= w;
    dy += ty;
  }

  if (dx.sign() == 0 || dy.sign() == 0) {
    bool diag_plus = true, diag_minus = true, all_zero = true, any_nonzero = false;
    for (auto& p : pts) {
      Exact dpl = p.x;
      dpl -= p.y;
      if (dpl.sign() != 0) diag_plus = false;
      Exact dmi = p.x;
      dmi += p.y;
      if (dmi.sign() != 0) diag_minus = false;
      if (p.x.sign() != 0 || p.y.sign() != 0) {
        all_zero = false;
        any_nonzero = true;
      }
    }
    CorrelationResult r;
    r.is_exact = true;
    if (diag_plus && any_nonzero) {
      r.exact = Exact(1);
      r.value = 1.0;
      return r;
    }
    if (diag_minus && any_nonzero) {
      r.exact = Exact(-1);
      r.value = -1.0;
      return r;
    }
    if (all_zero && pref != DegeneratePreference::none) {
      r.exact = pref == DegeneratePreference::plus ? Exact(1) : Exact(-1);
      r.value = pref == DegeneratePreference::plus ? 1.0 : -1.0;
      return r;
    }
    throw EvalError("undefined-correlation");
  }

  Exact denom = dx;
  denom *= dy;
  Exact rho2 = nsum;
  rho2 *= nsum;
  rho2 /= denom;

  CorrelationResult r;
  if (rho2.is_rational()) {
    // Exact when rho^2 is a perfect rational square.
    Rational q = rho2.as_rational();
    BigInt num = boost::multiprecision::numerator(q);
    BigInt den = boost::multiprecision::denominator(q);
    BigInt sn = boost::multiprecision::sqrt(num);
    BigInt sd = boost::multiprecision::sqrt(den);
    if (sn * sn == num && sd * sd == den) {
      Rational root(sn, sd);
      r.is_exact = true;
      r.exact = Exact(nsum.sign() < 0 ? Rational(-root) : root);
      r.value = to_double(r.exact);
      return r;
    }
  }
  double rho = std::sqrt(to_double(rho2));
  r.value = nsum.sign() < 0 ? -rho : rho;
  return r;
}

}  // namespace socibench

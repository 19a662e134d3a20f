#pragma once

// The social-intelligence measure: per-slot and full aggregates over
// (environment, slot, line-up pattern) triples, the reordered
// patterns-first summation, sampled tests, and reliability reporting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "socibench/engine.hpp"

namespace socibench {

// A value that stays exact (in Q adjoin sqrt2) whenever every ingredient was
// computed exactly; otherwise a float with a propagated confidence halfwidth.
struct Valuation {
  bool is_exact = true;
  Exact exact;
  double value = 0.0;
  double ci = 0.0;
};

inline Valuation exact_valuation(Exact x) {
  Valuation v;
  v.is_exact = true;
  v.value = to_double(x);
  v.exact = std::move(x);
  return v;
}

namespace detail {

// Linear accumulator over Valuations / reward profiles that tracks exactness.
struct ValuationAccum {
  Exact ex;
  double val = 0.0;
  double ci = 0.0;
  bool exact = true;

  void add_parts(const Rational& w, const Exact& ex_part, double val_part,
                 double ci_part, bool part_exact) {
    double wd = to_double(w);
    val += wd * val_part;
    ci += std::abs(wd) * ci_part;
    if (part_exact && exact)
      ex = ex + Exact(w) * ex_part;
    else
      exact = false;
  }

  void add_profile(const Rational& w, const RewardProfile& prof, int slot) {
    if (prof.exact())
      add_parts(w, prof.values[slot], prof.approx[slot], 0.0, true);
    else
      add_parts(w, Exact(0), prof.approx[slot], prof.ci_halfwidth, false);
  }

  void add_valuation(const Rational& w, const Valuation& v) {
    add_parts(w, v.exact, v.value, v.ci, v.is_exact);
  }

  Valuation done() const {
    Valuation out;
    out.is_exact = exact;
    if (exact) {
      out.exact = ex;
      out.value = to_double(ex);
      out.ci = 0.0;
    } else {
      out.value = val;
      out.ci = ci;
    }
    return out;
  }
};

// Scales a valuation by an exact factor (normalizers).
inline Valuation scale_valuation(const Valuation& v, const Rational& f) {
  Valuation out = v;
  if (v.is_exact) {
    out.exact = v.exact * Exact(f);
    out.value = to_double(out.exact);
  } else {
    double fd = to_double(f);
    out.value = v.value * fd;
    out.ci = v.ci * std::abs(fd);
  }
  return out;
}

// 53-bit uniform in [0,1) from the engine-specified generator; written out
// explicitly so results do not depend on the standard library's distribution
// implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0) return static_cast<int>(i);
  throw EvalError("empty-support: sampling distribution has zero mass");
}

inline std::vector<double> normalized_probs(std::vector<double> p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (x < 0 || !std::isfinite(x))
      throw std::invalid_argument(what + ": invalid probability");
    sum += x;
  }
  if (sum <= 0) throw EvalError("empty-support: " + what);
  for (double& x : p) x /= sum;
  return p;
}

inline std::vector<double> probs_from_weights(const std::vector<Rational>& w) {
  std::vector<double> p;
  p.reserve(w.size());
  for (const auto& x : w) p.push_back(to_double(x));
  return p;
}

// SOCIBENCH_THREADS caps worker threads (default 1 = sequential).
inline int thread_cap() {
  const char* v = std::getenv("SOCIBENCH_THREADS");
  if (!v) return 1;
  int n = std::atoi(v);
  return n < 1 ? 1 : n;
}

inline std::string pattern_signature(const LineUpPattern& p) {
  std::string out;
  for (size_t i = 0; i < p.slots.size(); ++i) {
    if (i) out += '|';
    out += p.slots[i] ? p.slots[i]->id() : std::string("*");
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Measure specification: agent pi, environments M with w_M, interaction pool
// Pi with product-form line-up weights derived from w_Pi, and slot weights
// w_S per environment. Line-up weights may be overridden per pattern
// signature ("a|*|b"), which breaks the product-form assumption.
// ---------------------------------------------------------------------------

struct UpsilonSpec {
  PolicyPtr agent;
  std::vector<EnvPtr> envs;                                   // M
  std::vector<Rational> env_weights;                          // w_M; empty = uniform
  WeightedPool pool;                                          // Pi with w_Pi
  std::map<std::string, std::vector<Rational>> slot_weights;  // w_S per env id; missing = uniform
  std::map<std::string, Rational> pattern_weight_override;    // non-product w_L by signature
  EvalOptions eval;
};

namespace detail {

struct CheckedSpec {
  std::vector<Rational> env_w;                      // normalized
  std::vector<Rational> pool_w;                     // normalized
  std::map<std::string, Rational> pool_map;         // id -> normalized weight
  std::map<std::string, std::vector<Rational>> slot_w;  // per env id, normalized
};

inline CheckedSpec check_spec(const UpsilonSpec& spec) {
  if (!spec.agent) throw std::invalid_argument("precondition-violation: no agent");
  if (spec.envs.empty())
    throw std::invalid_argument("precondition-violation: empty environment set");
  bool needs_pool = false;
  for (const auto& e : spec.envs) {
    if (!e) throw std::invalid_argument("precondition-violation: null environment");
    if (e->slots() > 1) needs_pool = true;
    check_compatible(*spec.agent, *e);
  }
  if (needs_pool && spec.pool.members.empty())
    throw std::invalid_argument(
        "precondition-violation: multi-slot environment needs a non-empty pool");
  for (const auto& e : spec.envs)
    for (const auto& p : spec.pool.members) check_compatible(*p, *e);

  CheckedSpec out;
  out.env_w = normalized_weights(spec.env_weights, spec.envs.size(), "environment weights");
  out.pool_w = normalized_pool(spec.pool, "pool weights");
  out.pool_map = weight_map(spec.pool.members, out.pool_w);
  for (const auto& e : spec.envs) {
    auto it = spec.slot_weights.find(e->id());
    std::vector<Rational> w = it == spec.slot_weights.end() ? std::vector<Rational>{} : it->second;
    out.slot_w[e->id()] =
        normalized_weights(std::move(w), static_cast<size_t>(e->slots()),
                           "slot weights for " + e->id());
  }
  return out;
}

// Pattern weight: product form by default, explicit override otherwise.
// Overrides are normalized over the enumerated pattern set of one (env, slot)
// context so they stay comparable with the product form.
inline std::vector<Rational> pattern_weights_for(
    const UpsilonSpec& spec, const CheckedSpec& ck,
    const std::vector<LineUpPattern>& pats) {
  std::vector<Rational> w;
  w.reserve(pats.size());
  if (spec.pattern_weight_override.empty()) {
    for (const auto& p : pats) w.push_back(pattern_weight_by_id(p, ck.pool_map));
    return w;
  }
  Rational sum(0);
  for (const auto& p : pats) {
    auto it = spec.pattern_weight_override.find(pattern_signature(p));
    if (it == spec.pattern_weight_override.end())
      throw std::invalid_argument("pattern weight override misses: " + pattern_signature(p));
    if (it->second < 0) throw std::invalid_argument("negative pattern weight");
    w.push_back(it->second);
    sum += it->second;
  }
  if (sum == 0) throw EvalError("all-zero-weights: pattern weight override");
  for (auto& x : w) x /= sum;
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Restricted entry points.
// ---------------------------------------------------------------------------

// Performance of a full line-up l across environments: sum over mu of
// w_M(mu) R_i(mu[l_1..N(mu)]) (the line-up is truncated to each arity).
inline Valuation upsilon_lineup(const LineUp& lineup, const std::vector<EnvPtr>& envs,
                                std::vector<Rational> env_weights, int slot,
                                const EvalOptions& eval = {}, RewardCache* cache = nullptr) {
  if (envs.empty()) throw std::invalid_argument("precondition-violation: empty environment set");
  auto ew = normalized_weights(std::move(env_weights), envs.size(), "environment weights");
  detail::ValuationAccum acc;
  for (size_t m = 0; m < envs.size(); ++m) {
    const Environment& env = *envs[m];
    size_t n = static_cast<size_t>(env.slots());
    if (lineup.slots.size() < n)
      throw std::invalid_argument("line-up shorter than environment arity");
    if (slot < 0 || slot >= env.slots())
      throw std::invalid_argument("slot out of range for " + env.id());
    LineUp prefix;
    prefix.slots.assign(lineup.slots.begin(), lineup.slots.begin() + n);
    acc.add_profile(ew[m], expected_average_reward(env, prefix, eval, cache), slot);
  }
  return acc.done();
}

// Performance of agent pi at slot i of one environment against the pattern
// set generated by the pool: sum over patterns of w_L R_i(mu[pattern <- pi]).
inline Valuation upsilon_in_env(const EnvPtr& env, const PolicyPtr& agent, int slot,
                                const WeightedPool& pool, const EvalOptions& eval = {},
                                RewardCache* cache = nullptr) {
  UpsilonSpec spec;
  spec.agent = agent;
  spec.envs = {env};
  spec.pool = pool;
  spec.eval = eval;
  auto ck = detail::check_spec(spec);
  if (slot < 0 || slot >= env->slots()) throw std::invalid_argument("slot out of range");
  auto pats = enumerate_patterns(env->slots(), {slot}, pool.members);
  auto pw = detail::pattern_weights_for(spec, ck, pats);
  detail::ValuationAccum acc;
  for (size_t p = 0; p < pats.size(); ++p) {
    if (pw[p] == 0) continue;
    acc.add_profile(pw[p], expected_average_reward(*env, instantiate(pats[p], {agent}), eval, cache),
                    slot);
  }
  return acc.done();
}

// ---------------------------------------------------------------------------
// Slot-level and full measure.
// ---------------------------------------------------------------------------

// Social intelligence of the agent pinned to one slot across all
// environments (the slot must exist in every environment of the set).
inline Valuation upsilon_slot(const UpsilonSpec& spec, int slot, RewardCache* cache = nullptr) {
  auto ck = detail::check_spec(spec);
  detail::ValuationAccum acc;
  for (size_t m = 0; m < spec.envs.size(); ++m) {
    const EnvPtr& env = spec.envs[m];
    if (slot < 0 || slot >= env->slots())
      throw std::invalid_argument("precondition-violation: slot " + std::to_string(slot) +
                                  " missing in " + env->id());
    auto pats = enumerate_patterns(env->slots(), {slot}, spec.pool.members);
    auto pw = detail::pattern_weights_for(spec, ck, pats);
    for (size_t p = 0; p < pats.size(); ++p) {
      if (pw[p] == 0) continue;
      acc.add_profile(ck.env_w[m] * pw[p],
                      expected_average_reward(*env, instantiate(pats[p], {spec.agent}), spec.eval, cache),
                      slot);
    }
  }
  return acc.done();
}

// Full measure: environments outer, slots next, patterns inner.
inline Valuation upsilon(const UpsilonSpec& spec, RewardCache* cache = nullptr) {
  auto ck = detail::check_spec(spec);
  detail::ValuationAccum acc;
  for (size_t m = 0; m < spec.envs.size(); ++m) {
    const EnvPtr& env = spec.envs[m];
    const auto& sw = ck.slot_w.at(env->id());
    for (int i = 0; i < env->slots(); ++i) {
      auto pats = enumerate_patterns(env->slots(), {i}, spec.pool.members);
      auto pw = detail::pattern_weights_for(spec, ck, pats);
      for (size_t p = 0; p < pats.size(); ++p) {
        if (pw[p] == 0) continue;
        acc.add_profile(ck.env_w[m] * sw[i] * pw[p],
                        expected_average_reward(*env, instantiate(pats[p], {spec.agent}), spec.eval, cache),
                        i);
      }
    }
  }
  return acc.done();
}

// The same measure summed patterns-first: arity groups outer, slot and
// pattern next, environments of that arity inner. Valid only for
// product-form line-up weights; agrees with upsilon() identically.
inline Valuation inside_out_upsilon(const UpsilonSpec& spec, RewardCache* cache = nullptr) {
  if (!spec.pattern_weight_override.empty())
    throw EvalError("assumption-violated: patterns-first order needs product-form line-up weights");
  auto ck = detail::check_spec(spec);
  std::vector<int> arities;
  for (const auto& e : spec.envs) arities.push_back(e->slots());
  std::sort(arities.begin(), arities.end());
  arities.erase(std::unique(arities.begin(), arities.end()), arities.end());

  detail::ValuationAccum acc;
  for (int j : arities) {
    for (int i = 0; i < j; ++i) {
      auto pats = enumerate_patterns(j, {i}, spec.pool.members);
      for (const auto& pat : pats) {
        Rational wl = pattern_weight_by_id(pat, ck.pool_map);
        if (wl == 0) continue;
        LineUp l = instantiate(pat, {spec.agent});
        for (size_t m = 0; m < spec.envs.size(); ++m) {
          if (spec.envs[m]->slots() != j) continue;
          const EnvPtr& env = spec.envs[m];
          acc.add_profile(wl * ck.env_w[m] * ck.slot_w.at(env->id())[i],
                          expected_average_reward(*env, l, spec.eval, cache), i);
        }
      }
    }
  }
  return acc.done();
}

// ---------------------------------------------------------------------------
// Sampled tests.
// ---------------------------------------------------------------------------

struct TestPlan {
  std::vector<double> p_env;                        // empty = follow w_M
  std::map<std::string, std::vector<double>> p_slot;  // per env id; missing = follow w_S
  std::vector<double> p_pool;                       // empty = follow w_Pi
  std::vector<std::pair<int, double>> p_k = {{100, 1.0}};  // horizon draw; 0 = exact limit
  int episodes = 100;                               // n_E
  std::uint64_t seed = 1;
  bool without_replacement_when_deterministic = true;
};

struct EpisodeRecord {
  int run = 0;
  int episode = 0;
  std::string env;
  int slot = 0;
  std::string pattern;   // "a|*|b" with * at the evaluated slot
  int k = 0;
  std::uint64_t seed = 0;
  double reward = 0.0;   // observed average reward of the evaluated slot
  double weight = 0.0;   // w_M * w_S * w_L, before eta normalization
};

struct TestResult {
  Valuation estimate;
  std::vector<EpisodeRecord> log;
  long long env_steps = 0;
  double wall_seconds = 0.0;
};

inline void write_episode_log(std::ostream& os, const std::vector<EpisodeRecord>& log) {
  os << "run,episode,env,slot,pattern,K,seed,reward,weight\n";
  for (const auto& r : log)
    os << r.run << ',' << r.episode << ',' << r.env << ',' << r.slot << ',' << r.pattern
       << ',' << r.k << ',' << r.seed << ',' << r.reward << ',' << r.weight << '\n';
}

namespace detail {

// One observed episode: K synchronous steps, returns the slot's running
// average reward (exact rational; a single trace never leaves Q).
inline std::pair<Rational, int> observed_episode(const Environment& env, const LineUp& lineup,
                                                 int slot, int k, std::mt19937_64& rng) {
  size_t n = lineup.slots.size();
  State s = env.initial_state();
  std::vector<State> ps;
  ps.reserve(n);
  for (const auto& p : lineup.slots) ps.push_back(p->reset(k));
  Rational total(0);
  int steps = 0;
  for (int t = 0; t < k; ++t) {
    auto obs = observe_all(env, s, n);
    std::vector<int> acts(n);
    for (size_t i = 0; i < n; ++i) acts[i] = sample_action(lineup.slots[i]->act(ps[i], obs[i]), rng);
    auto out = advance_joint(env, lineup.slots, s, ps, obs, acts);
    total += out.rewards[slot];
    ++steps;
    s = std::move(out.env_state);
    ps = std::move(out.pol_states);
    if (out.terminal) break;
  }
  if (steps == 0) return {Rational(0), 0};
  return {total / steps, steps};
}

}  // namespace detail

inline TestResult run_test(const UpsilonSpec& spec, const TestPlan& plan,
                           RewardCache* cache = nullptr) {
  auto start = std::chrono::steady_clock::now();
  auto ck = detail::check_spec(spec);
  if (plan.episodes < 1) throw std::invalid_argument("precondition-violation: n_E >= 1");

  // Sampling distributions; a positive-weight element with zero sampling
  // probability would bias the estimate silently, so it is rejected.
  auto p_env = detail::normalized_probs(
      plan.p_env.empty() ? detail::probs_from_weights(ck.env_w) : plan.p_env,
      "environment sampling distribution");
  if (p_env.size() != spec.envs.size())
    throw std::invalid_argument("environment sampling distribution size mismatch");
  for (size_t m = 0; m < p_env.size(); ++m)
    if (ck.env_w[m] > 0 && p_env[m] <= 0)
      throw EvalError("empty-support: environment " + spec.envs[m]->id() + " unreachable");

  std::vector<double> p_pool;
  if (!spec.pool.members.empty()) {
    p_pool = detail::normalized_probs(
        plan.p_pool.empty() ? detail::probs_from_weights(ck.pool_w) : plan.p_pool,
        "pool sampling distribution");
    if (p_pool.size() != spec.pool.members.size())
      throw std::invalid_argument("pool sampling distribution size mismatch");
    for (size_t i = 0; i < p_pool.size(); ++i)
      if (ck.pool_w[i] > 0 && p_pool[i] <= 0)
        throw EvalError("empty-support: pool member " + spec.pool.members[i]->id() +
                        " unreachable");
  }

  std::map<std::string, std::vector<double>> p_slot;
  for (const auto& e : spec.envs) {
    auto it = plan.p_slot.find(e->id());
    auto probs = detail::normalized_probs(
        it == plan.p_slot.end() ? detail::probs_from_weights(ck.slot_w.at(e->id())) : it->second,
        "slot sampling distribution for " + e->id());
    if (probs.size() != static_cast<size_t>(e->slots()))
      throw std::invalid_argument("slot sampling distribution size mismatch for " + e->id());
    p_slot[e->id()] = std::move(probs);
  }

  std::vector<double> kp;
  std::vector<int> kv;
  for (const auto& [k, p] : plan.p_k) {
    if (k < 0) throw std::invalid_argument("negative horizon in p_K");
    kv.push_back(k);
    kp.push_back(p);
  }
  kp = detail::normalized_probs(kp, "horizon distribution");

  bool agent_det = spec.agent->deterministic();

  TestResult out;
  detail::ValuationAccum num;
  Rational weight_sum(0);
  double weight_sum_d = 0.0;
  std::set<std::string> seen;
  long long attempts = 0;
  const long long attempt_cap =
      64LL * plan.episodes + 256;  // stops without-replacement plans on a small support
  int collected = 0;

  while (collected < plan.episodes && attempts < attempt_cap) {
    std::mt19937_64 rng(detail::mix_seed(plan.seed, static_cast<std::uint64_t>(attempts)));
    std::uint64_t episode_seed = rng();
    ++attempts;

    int m = detail::sample_index(p_env, rng);
    const EnvPtr& env = spec.envs[m];
    int slot = detail::sample_index(p_slot.at(env->id()), rng);
    LineUpPattern pat;
    pat.slots.assign(env->slots(), nullptr);
    bool det = agent_det;
    for (int pos = 0; pos < env->slots(); ++pos) {
      if (pos == slot) continue;
      const PolicyPtr& member = spec.pool.members[detail::sample_index(p_pool, rng)];
      pat.slots[pos] = member;
      det = det && member->deterministic();
    }
    std::string sig = env->id() + "/" + std::to_string(slot) + "/" + detail::pattern_signature(pat);
    if (plan.without_replacement_when_deterministic && det && !seen.insert(sig).second)
      continue;  // a repeated deterministic episode carries no new information

    int k = kv[detail::sample_index(kp, rng)];
    Rational w = ck.env_w[m] * ck.slot_w.at(env->id())[slot] * pattern_weight_by_id(pat, ck.pool_map);
    LineUp lineup = instantiate(pat, {spec.agent});

    EpisodeRecord rec;
    rec.episode = collected;
    rec.env = env->id();
    rec.slot = slot;
    rec.pattern = detail::pattern_signature(pat);
    rec.k = k;
    rec.seed = episode_seed;
    rec.weight = to_double(w);

    if (k == 0) {
      EvalOptions opts = spec.eval;
      opts.horizon_k = 0;
      opts.allow_monte_carlo = false;
      RewardProfile prof = expected_average_reward(*env, lineup, opts, cache);
      num.add_profile(w, prof, slot);
      rec.reward = prof.approx[slot];
    } else {
      std::mt19937_64 ep_rng(episode_seed);
      auto [avg, steps] = detail::observed_episode(*env, lineup, slot, k, ep_rng);
      num.add_parts(w, Exact(avg), to_double(avg), 0.0, true);
      rec.reward = to_double(avg);
      out.env_steps += steps;
    }
    weight_sum += w;
    weight_sum_d += to_double(w);
    out.log.push_back(std::move(rec));
    ++collected;
  }

  if (collected == 0) throw EvalError("empty-support: no episodes could be sampled");
  if (weight_sum == 0) throw EvalError("all-zero-weights: sampled episodes");
  Valuation raw = num.done();
  out.estimate = detail::scale_valuation(raw, Rational(1) / weight_sum);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  (void)weight_sum_d;
  return out;
}

// ---------------------------------------------------------------------------
// Reliability and efficiency.
// ---------------------------------------------------------------------------

struct ReliabilityReport {
  double upsilon_exact = 0.0;   // ground truth
  double mean_estimate = 0.0;
  double te = 0.0;              // mean squared test error
  double rel = 0.0;             // e^{-te}
  double bias2 = 0.0;
  double variance = 0.0;
  double eff = 0.0;             // rel / time, time in environment steps
  double mean_steps = 0.0;
  double wall_seconds = 0.0;
  int repetitions = 0;
};

inline ReliabilityReport reliability(const UpsilonSpec& spec, const TestPlan& plan,
                                     int repetitions, RewardCache* cache = nullptr) {
  if (repetitions < 1) throw std::invalid_argument("precondition-violation: repetitions >= 1");
  auto start = std::chrono::steady_clock::now();

  double truth;
  {
    UpsilonSpec exact_spec = spec;
    exact_spec.eval.allow_monte_carlo = false;
    try {
      truth = upsilon(exact_spec, cache).value;
    } catch (const EvalError& e) {
      throw EvalError(std::string("ground-truth-infeasible: ") + e.what());
    }
  }

  std::vector<double> estimates(repetitions);
  std::vector<long long> steps(repetitions);
  auto worker = [&](int begin, int stride) {
    for (int r = begin; r < repetitions; r += stride) {
      TestPlan p = plan;
      p.seed = detail::mix_seed(plan.seed, static_cast<std::uint64_t>(r) + 1);
      TestResult t = run_test(spec, p, stride == 1 ? cache : nullptr);
      estimates[r] = t.estimate.value;
      steps[r] = t.env_steps;
    }
  };
  int threads = std::min(detail::thread_cap(), repetitions);
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> ts;
    ts.reserve(threads);
    for (int t = 0; t < threads; ++t) ts.emplace_back(worker, t, threads);
    for (auto& t : ts) t.join();
  }

  ReliabilityReport rep;
  rep.repetitions = repetitions;
  rep.upsilon_exact = truth;
  double mean = 0.0, mean_sq_err = 0.0, mean_steps = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    mean += estimates[r];
    mean_sq_err += (estimates[r] - truth) * (estimates[r] - truth);
    mean_steps += static_cast<double>(steps[r]);
  }
  mean /= repetitions;
  mean_sq_err /= repetitions;
  mean_steps /= repetitions;
  double var = 0.0;
  for (int r = 0; r < repetitions; ++r) var += (estimates[r] - mean) * (estimates[r] - mean);
  var /= repetitions;
  rep.mean_estimate = mean;
  rep.te = mean_sq_err;
  rep.bias2 = (mean - truth) * (mean - truth);
  rep.variance = var;
  rep.rel = std::exp(-rep.te);
  rep.mean_steps = mean_steps;
  rep.eff = rep.rel / std::max(1.0, mean_steps);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace socibench

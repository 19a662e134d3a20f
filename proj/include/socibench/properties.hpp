#pragma once

// Testbed properties: action/reward/slot-reward dependency, fine and coarse
// discrimination, strict-total and partial grading, and competitive and
// cooperative anticipation, each at agent, set and environment level, plus
// range search over candidate pools.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "socibench/policies.hpp"
#include "socibench/upsilon.hpp"

namespace socibench {

enum class SocialProperty {
  action_dependency,
  reward_dependency,
  slot_reward_dependency,
  fine_discrimination,
  coarse_discrimination,
  strict_total_grading,
  partial_grading,
  anticipation_competitive,
  anticipation_cooperative,
};

inline const char* property_name(SocialProperty p) {
  switch (p) {
    case SocialProperty::action_dependency: return "action_dependency";
    case SocialProperty::reward_dependency: return "reward_dependency";
    case SocialProperty::slot_reward_dependency: return "slot_reward_dependency";
    case SocialProperty::fine_discrimination: return "fine_discrimination";
    case SocialProperty::coarse_discrimination: return "coarse_discrimination";
    case SocialProperty::strict_total_grading: return "strict_total_grading";
    case SocialProperty::partial_grading: return "partial_grading";
    case SocialProperty::anticipation_competitive: return "anticipation_competitive";
    case SocialProperty::anticipation_cooperative: return "anticipation_cooperative";
  }
  throw std::logic_error("unreachable");
}

inline const char* property_code(SocialProperty p) {
  switch (p) {
    case SocialProperty::action_dependency: return "AD";
    case SocialProperty::reward_dependency: return "RD";
    case SocialProperty::slot_reward_dependency: return "SRD";
    case SocialProperty::fine_discrimination: return "FD";
    case SocialProperty::coarse_discrimination: return "CD";
    case SocialProperty::strict_total_grading: return "STG";
    case SocialProperty::partial_grading: return "PG";
    case SocialProperty::anticipation_competitive: return "AComp";
    case SocialProperty::anticipation_cooperative: return "ACoop";
  }
  throw std::logic_error("unreachable");
}

inline SocialProperty property_from_name(const std::string& s) {
  static const std::array<SocialProperty, 9> all = {
      SocialProperty::action_dependency,     SocialProperty::reward_dependency,
      SocialProperty::slot_reward_dependency, SocialProperty::fine_discrimination,
      SocialProperty::coarse_discrimination, SocialProperty::strict_total_grading,
      SocialProperty::partial_grading,       SocialProperty::anticipation_competitive,
      SocialProperty::anticipation_cooperative};
  for (auto p : all)
    if (s == property_name(p) || s == property_code(p)) return p;
  throw std::invalid_argument("unknown-property: " + s);
}

// Codomain of the environment-level value.
inline std::pair<int, int> property_codomain(SocialProperty p) {
  switch (p) {
    case SocialProperty::slot_reward_dependency:
    case SocialProperty::anticipation_competitive:
    case SocialProperty::anticipation_cooperative:
      return {-1, 1};
    default:
      return {0, 1};
  }
}

// ---------------------------------------------------------------------------
// Queries.
// ---------------------------------------------------------------------------

struct PropertyQuery {
  SocialProperty property = SocialProperty::action_dependency;
  EnvPtr env;
  WeightedPool evaluated;                 // Pi_e with w_{Pi_e}
  WeightedPool opponents;                 // Pi_o; line-up weights are the product of w_Pi_o
  std::vector<Rational> slot_weights;     // w_S; empty = uniform
  EvalOptions eval;
  int action_horizon = 3;                 // action-string length for action dependency
  RewardDivergence reward_divergence = RewardDivergence::kronecker;
  PolicyPtr baseline;                     // anticipation reference; null = "<env>.rand"
};

// Direct agent-level evaluation: the evaluated tuple and slots are explicit
// (the query's evaluated pool is ignored). Tuple arity per property:
// AD/RD/SRD take one agent, FD/CD/AComp/ACoop two, STG/PG three. Slot j is
// used by SRD, STG, PG, AComp and ACoop.
struct AgentQuery {
  std::vector<PolicyPtr> agents;
  int slot_i = 0;
  int slot_j = -1;
};

enum class Order { less, equal, greater };

namespace detail {

inline Valuation slot_value(const RewardProfile& prof, int slot) {
  if (prof.exact()) return exact_valuation(prof.values[slot]);
  Valuation v;
  v.is_exact = false;
  v.value = prof.approx[slot];
  v.ci = prof.ci_halfwidth;
  return v;
}

// Order between two slots of one profile. Team members share step rewards,
// so same-team slots tie structurally; stochastic estimates order only when
// their confidence intervals are disjoint.
inline Order slot_order(const Environment& env, const RewardProfile& prof, int i, int j) {
  if (env.team_of(i) == env.team_of(j)) return Order::equal;
  if (prof.exact()) {
    const Exact& a = prof.values[i];
    const Exact& b = prof.values[j];
    if (a == b) return Order::equal;
    return a < b ? Order::less : Order::greater;
  }
  double a = prof.approx[i], b = prof.approx[j];
  if (std::abs(a - b) > 2.0 * prof.ci_halfwidth) return a < b ? Order::less : Order::greater;
  throw EvalError("inconclusive-order: stochastic reward estimates overlap");
}

// Divergence between two reward valuations. In the default 0/1 mode two
// stochastic estimates count as different only when their intervals are
// disjoint; overlap cannot distinguish equal from close, so it is an error.
inline Valuation reward_gap(const Valuation& a, const Valuation& b, RewardDivergence mode) {
  if (a.is_exact && b.is_exact)
    return exact_valuation(divergence_rewards(a.exact, b.exact, mode));
  if (mode == RewardDivergence::relative) {
    Valuation v;
    v.is_exact = false;
    double denom = std::abs(a.value) + std::abs(b.value);
    v.value = denom == 0.0 ? 0.0 : std::abs(a.value - b.value) / denom;
    v.ci = denom == 0.0 ? 0.0 : (a.ci + b.ci) / denom;
    return v;
  }
  if (std::abs(a.value - b.value) > a.ci + b.ci) return exact_valuation(Exact(1));
  throw EvalError("inconclusive-order: stochastic reward estimates overlap");
}

inline bool valuation_less(const Valuation& a, const Valuation& b) {
  if (a.is_exact && b.is_exact) return a.exact < b.exact;
  return a.value < b.value;
}

// ---------------------------------------------------------------------------
// Evaluator. One instance per query; `naive` switches to a literal
// transcription of the definition sums (ordered tuples, no symmetry reuse,
// no zero-weight skipping) used as an independent cross-check.
// ---------------------------------------------------------------------------

class PropertyEval {
 public:
  PropertyEval(const PropertyQuery& q, RewardCache* cache, bool naive)
      : q_(q), cache_(cache ? cache : &local_cache_), naive_(naive) {
    if (!q_.env) throw std::invalid_argument("precondition-violation: no environment");
    for (const auto& p : q_.evaluated.members) {
      if (!p) throw std::invalid_argument("precondition-violation: null policy");
      check_compatible(*p, *q_.env);
    }
    for (const auto& p : q_.opponents.members) {
      if (!p) throw std::invalid_argument("precondition-violation: null policy");
      check_compatible(*p, *q_.env);
    }
    ow_ = normalized_pool(q_.opponents, "opponent pool weights");
    omap_ = weight_map(q_.opponents.members, ow_);
    sw_ = normalized_weights(q_.slot_weights, static_cast<size_t>(q_.env->slots()),
                             "slot weights");
  }

  Valuation env_level() {
    switch (q_.property) {
      case SocialProperty::action_dependency:
      case SocialProperty::reward_dependency:
        return per_slot_env([&](int i) { return dependency_set(i); });
      case SocialProperty::fine_discrimination:
      case SocialProperty::coarse_discrimination:
        return per_slot_env([&](int i) { return discrimination_set(i); });
      case SocialProperty::slot_reward_dependency:
        return slot_pair_env([&](int i, int j) { return srd_set(i, j); });
      case SocialProperty::strict_total_grading:
      case SocialProperty::partial_grading:
        return slot_pair_env([&](int i, int j) { return grading_set(i, j); });
      case SocialProperty::anticipation_competitive:
        return acomp_env();
      case SocialProperty::anticipation_cooperative:
        return acoop_env();
    }
    throw std::logic_error("unreachable");
  }

  Valuation agent_level(const AgentQuery& a) {
    auto need = [&](size_t n, bool pair_slots) {
      if (a.agents.size() != n)
        throw std::invalid_argument("expected " + std::to_string(n) + " evaluated agents");
      for (const auto& p : a.agents) {
        if (!p) throw std::invalid_argument("precondition-violation: null policy");
        check_compatible(*p, *q_.env);
      }
      check_slot(a.slot_i);
      if (pair_slots) {
        check_slot(a.slot_j);
        if (a.slot_i == a.slot_j)
          throw std::invalid_argument("slot pair must use two distinct slots");
      }
    };
    switch (q_.property) {
      case SocialProperty::action_dependency:
        need(1, false);
        return ad_agent(a.agents[0], a.slot_i);
      case SocialProperty::reward_dependency:
        need(1, false);
        return rd_agent(a.agents[0], a.slot_i);
      case SocialProperty::slot_reward_dependency:
        need(1, true);
        return srd_agent(a.agents[0], a.slot_i, a.slot_j);
      case SocialProperty::fine_discrimination:
        need(2, false);
        return fd_pair(a.agents[0], a.agents[1], a.slot_i);
      case SocialProperty::coarse_discrimination:
        need(2, false);
        return cd_pair(a.agents[0], a.agents[1], a.slot_i);
      case SocialProperty::strict_total_grading:
        need(3, true);
        return grading_triple(a.agents[0], a.agents[1], a.agents[2], a.slot_i, a.slot_j, true);
      case SocialProperty::partial_grading:
        need(3, true);
        return grading_triple(a.agents[0], a.agents[1], a.agents[2], a.slot_i, a.slot_j, false);
      case SocialProperty::anticipation_competitive:
        need(2, true);
        return acomp_pair(a.agents[0], a.agents[1], a.slot_i, a.slot_j);
      case SocialProperty::anticipation_cooperative:
        need(2, true);
        return acoop_pair(a.agents[0], a.agents[1], a.slot_i, a.slot_j);
    }
    throw std::logic_error("unreachable");
  }

 private:
  struct PatternSet {
    std::vector<LineUpPattern> pats;
    std::vector<Rational> w;
  };

  const Environment& env() const { return *q_.env; }
  int slots() const { return env().slots(); }

  void check_slot(int i) const {
    if (i < 0 || i >= slots()) throw std::invalid_argument("slot out of range");
  }

  // Evaluated pool, normalized lazily (agent-level calls do not need it).
  const std::vector<Rational>& evaluated_weights() {
    if (ew_.empty()) {
      if (q_.evaluated.members.empty())
        throw EvalError("pool-too-small: evaluated pool is empty");
      ew_ = normalized_pool(q_.evaluated, "evaluated pool weights");
    }
    return ew_;
  }

  const PolicyPtr& baseline() {
    if (!baseline_) {
      baseline_ = q_.baseline ? q_.baseline : canonical_policy(env().id() + ".rand");
      check_compatible(*baseline_, env());
    }
    return baseline_;
  }

  const PatternSet& patterns_minus(std::vector<int> freed) {
    std::sort(freed.begin(), freed.end());
    std::string key;
    for (int f : freed) key += std::to_string(f) + ",";
    auto it = patterns_.find(key);
    if (it != patterns_.end()) return it->second;
    int filled = slots() - static_cast<int>(freed.size());
    if (filled > 0 && q_.opponents.members.empty())
      throw EvalError("pool-too-small: opponent pool is empty but the environment has slots to fill");
    PatternSet ps;
    auto pats = enumerate_patterns(slots(), freed, q_.opponents.members);
    for (auto& p : pats) {
      Rational w = pattern_weight_by_id(p, omap_);
      if (w == 0 && !naive_) continue;  // zero-weight patterns contribute nothing
      ps.w.push_back(std::move(w));
      ps.pats.push_back(std::move(p));
    }
    return patterns_.emplace(std::move(key), std::move(ps)).first->second;
  }

  RewardProfile profile(const LineUp& l, bool force_exact = false) {
    EvalOptions opts = q_.eval;
    if (force_exact) opts.allow_monte_carlo = false;
    return expected_average_reward(env(), l, opts, cache_);
  }

  std::vector<PolicyPtr> pair_fills(int i, int j, const PolicyPtr& x, const PolicyPtr& y) const {
    return i < j ? std::vector<PolicyPtr>{x, y} : std::vector<PolicyPtr>{y, x};
  }

  // --- action dependency ---------------------------------------------------

  int action_horizon() const {
    int k = q_.action_horizon;
    const auto& d = env().descriptor();
    if (d.fixed_episode && d.episode_length > 0) k = std::min(k, d.episode_length);
    if (k <= 0) throw std::invalid_argument("action horizon must be positive");
    return k;
  }

  Valuation ad_agent(const PolicyPtr& pi, int slot) {
    check_slot(slot);
    check_compatible(*pi, env());
    const PatternSet& ps = patterns_minus({slot});
    int k = action_horizon();
    std::vector<std::map<std::vector<int>, Exact>> dists;
    dists.reserve(ps.pats.size());
    for (const auto& pat : ps.pats)
      dists.push_back(
          action_distribution(env(), instantiate(pat, {pi}), slot, k, q_.eval.max_exact_states));
    Exact num(0);
    Rational denom(0);
    size_t n = ps.pats.size();
    if (naive_) {
      for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          Rational w = ps.w[a] * ps.w[b];
          denom += w;
          num = num + Exact(w) * divergence_actions(dists[a], dists[b]);
        }
    } else {
      for (size_t a = 0; a < n; ++a)
        for (size_t b = a + 1; b < n; ++b) {
          Rational w = ps.w[a] * ps.w[b] * 2;  // the divergence is symmetric
          denom += w;
          num = num + Exact(w) * divergence_actions(dists[a], dists[b]);
        }
    }
    if (denom == 0)
      throw EvalError(
          "pool-too-small: action dependency needs two line-up patterns with positive weight");
    return exact_valuation(num * Exact(Rational(1) / denom));
  }

  // --- reward dependency ---------------------------------------------------

  Valuation rd_agent(const PolicyPtr& pi, int slot) {
    check_slot(slot);
    check_compatible(*pi, env());
    const PatternSet& ps = patterns_minus({slot});
    std::vector<Valuation> vals;
    vals.reserve(ps.pats.size());
    for (const auto& pat : ps.pats)
      vals.push_back(slot_value(profile(instantiate(pat, {pi})), slot));
    ValuationAccum acc;
    Rational denom(0);
    size_t n = ps.pats.size();
    if (naive_) {
      for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          Rational w = ps.w[a] * ps.w[b];
          denom += w;
          acc.add_valuation(w, reward_gap(vals[a], vals[b], q_.reward_divergence));
        }
    } else {
      for (size_t a = 0; a < n; ++a)
        for (size_t b = a + 1; b < n; ++b) {
          Rational w = ps.w[a] * ps.w[b] * 2;
          denom += w;
          acc.add_valuation(w, reward_gap(vals[a], vals[b], q_.reward_divergence));
        }
    }
    if (denom == 0)
      throw EvalError(
          "pool-too-small: reward dependency needs two line-up patterns with positive weight");
    return scale_valuation(acc.done(), Rational(1) / denom);
  }

  // AD and RD share their set/environment aggregation.
  Valuation dependency_agent(const PolicyPtr& pi, int slot) {
    if (q_.property == SocialProperty::action_dependency) return ad_agent(pi, slot);
    return rd_agent(pi, slot);
  }

  Valuation dependency_set(int slot) {
    const auto& ew = evaluated_weights();
    ValuationAccum acc;
    for (size_t a = 0; a < q_.evaluated.members.size(); ++a) {
      if (ew[a] == 0 && !naive_) continue;
      acc.add_valuation(ew[a], dependency_agent(q_.evaluated.members[a], slot));
    }
    return acc.done();
  }

  // --- slot-reward dependency ----------------------------------------------

  Valuation srd_agent(const PolicyPtr& pi, int i, int j) {
    check_slot(i);
    check_slot(j);
    if (i == j) throw std::invalid_argument("slot pair must use two distinct slots");
    check_compatible(*pi, env());
    const PatternSet& ps = patterns_minus({i});
    std::vector<WeightedPoint> points;
    points.reserve(ps.pats.size());
    for (size_t p = 0; p < ps.pats.size(); ++p) {
      if (ps.w[p] == 0) continue;  // zero weight never moves a weighted correlation
      RewardProfile prof = profile(instantiate(ps.pats[p], {pi}), /*force_exact=*/true);
      points.push_back({prof.values[i], prof.values[j], ps.w[p]});
    }
    DegeneratePreference pref = env().team_of(i) == env().team_of(j)
                                    ? DegeneratePreference::plus
                                    : DegeneratePreference::minus;
    CorrelationResult corr = weighted_correlation(points, pref);
    if (corr.is_exact) return exact_valuation(corr.exact);
    Valuation v;
    v.is_exact = false;
    v.value = corr.value;
    return v;
  }

  Valuation srd_set(int i, int j) {
    const auto& ew = evaluated_weights();
    ValuationAccum acc;
    for (size_t a = 0; a < q_.evaluated.members.size(); ++a) {
      if (ew[a] == 0 && !naive_) continue;
      acc.add_valuation(ew[a], srd_agent(q_.evaluated.members[a], i, j));
    }
    return acc.done();
  }

  // --- fine and coarse discrimination ---------------------------------------

  Valuation fd_pair(const PolicyPtr& p1, const PolicyPtr& p2, int slot) {
    check_slot(slot);
    check_compatible(*p1, env());
    check_compatible(*p2, env());
    const PatternSet& ps = patterns_minus({slot});
    ValuationAccum acc;
    for (size_t p = 0; p < ps.pats.size(); ++p) {
      Valuation va = slot_value(profile(instantiate(ps.pats[p], {p1})), slot);
      Valuation vb = slot_value(profile(instantiate(ps.pats[p], {p2})), slot);
      acc.add_valuation(ps.w[p], reward_gap(va, vb, q_.reward_divergence));
    }
    return acc.done();
  }

  Valuation cd_pair(const PolicyPtr& p1, const PolicyPtr& p2, int slot) {
    check_slot(slot);
    Valuation ua = upsilon_of(p1, slot);
    Valuation ub = upsilon_of(p2, slot);
    return reward_gap(ua, ub, q_.reward_divergence);
  }

  Valuation upsilon_of(const PolicyPtr& pi, int slot) {
    std::string key = pi->id() + "@" + std::to_string(slot);
    if (!naive_) {
      auto it = upsilon_memo_.find(key);
      if (it != upsilon_memo_.end()) return it->second;
    }
    Valuation v = upsilon_in_env(q_.env, pi, slot, q_.opponents, q_.eval, cache_);
    if (!naive_) upsilon_memo_.emplace(std::move(key), v);
    return v;
  }

  Valuation discrimination_pair(const PolicyPtr& p1, const PolicyPtr& p2, int slot) {
    if (q_.property == SocialProperty::fine_discrimination) return fd_pair(p1, p2, slot);
    return cd_pair(p1, p2, slot);
  }

  Valuation discrimination_set(int slot) {
    const auto& ew = evaluated_weights();
    size_t n = q_.evaluated.members.size();
    ValuationAccum acc;
    Rational denom(0);
    if (naive_) {
      for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          Rational w = ew[a] * ew[b];
          denom += w;
          acc.add_valuation(w, discrimination_pair(q_.evaluated.members[a],
                                                   q_.evaluated.members[b], slot));
        }
    } else {
      // The divergence is symmetric in the pair, so each unordered pair is
      // evaluated once with doubled weight.
      for (size_t a = 0; a < n; ++a)
        for (size_t b = a + 1; b < n; ++b) {
          Rational w = ew[a] * ew[b] * 2;
          if (w == 0) continue;
          denom += w;
          acc.add_valuation(w, discrimination_pair(q_.evaluated.members[a],
                                                   q_.evaluated.members[b], slot));
        }
    }
    if (denom == 0)
      throw EvalError("pool-too-small: discrimination needs two evaluated agents with positive weight");
    return scale_valuation(acc.done(), Rational(1) / denom);
  }

  // --- grading ---------------------------------------------------------------

  Order pair_order(const LineUpPattern& pat, const PolicyPtr& x, const PolicyPtr& y,
                   int i, int j) {
    RewardProfile prof = profile(instantiate(pat, pair_fills(i, j, x, y)));
    return slot_order(env(), prof, i, j);
  }

  // 1 when some arrangement of the three agents makes the slot-i player lose
  // to the slot-j player in all three head-to-head placements.
  Rational graded(const LineUpPattern& pat, const PolicyPtr& a, const PolicyPtr& b,
                  const PolicyPtr& c, int i, int j, bool strict) {
    std::map<std::pair<const Policy*, const Policy*>, Order> memo;
    auto holds = [&](const PolicyPtr& x, const PolicyPtr& y) {
      Order o;
      auto key = std::make_pair(x.get(), y.get());
      auto it = memo.find(key);
      if (it != memo.end()) {
        o = it->second;
      } else {
        o = pair_order(pat, x, y, i, j);
        memo.emplace(key, o);
      }
      return strict ? o == Order::less : o != Order::greater;
    };
    std::array<std::array<const PolicyPtr*, 3>, 6> perms = {{{&a, &b, &c},
                                                             {&a, &c, &b},
                                                             {&b, &a, &c},
                                                             {&b, &c, &a},
                                                             {&c, &a, &b},
                                                             {&c, &b, &a}}};
    for (const auto& pm : perms) {
      const PolicyPtr &x = *pm[0], &y = *pm[1], &z = *pm[2];
      if (holds(x, y) && holds(y, z) && holds(x, z)) return Rational(1);
    }
    return Rational(0);
  }

  Valuation grading_triple(const PolicyPtr& a, const PolicyPtr& b, const PolicyPtr& c,
                           int i, int j, bool strict) {
    check_slot(i);
    check_slot(j);
    if (i == j) throw std::invalid_argument("slot pair must use two distinct slots");
    for (const auto& p : {a, b, c}) check_compatible(*p, env());
    const PatternSet& ps = patterns_minus({i, j});
    Rational total(0);
    for (size_t p = 0; p < ps.pats.size(); ++p) {
      if (ps.w[p] == 0 && !naive_) continue;
      total += ps.w[p] * graded(ps.pats[p], a, b, c, i, j, strict);
    }
    return exact_valuation(Exact(total));
  }

  Valuation grading_set(int i, int j) {
    bool strict = q_.property == SocialProperty::strict_total_grading;
    const auto& ew = evaluated_weights();
    size_t n = q_.evaluated.members.size();
    ValuationAccum acc;
    Rational denom(0);
    std::map<std::array<size_t, 3>, Valuation> memo;
    for (size_t a = 0; a < n; ++a)
      for (size_t b = 0; b < n; ++b) {
        if (b == a) continue;
        for (size_t c = 0; c < n; ++c) {
          if (c == a || c == b) continue;
          Rational w = ew[a] * ew[b] * ew[c];
          denom += w;
          if (w == 0 && !naive_) continue;
          if (naive_) {
            acc.add_valuation(w, grading_triple(q_.evaluated.members[a], q_.evaluated.members[b],
                                                q_.evaluated.members[c], i, j, strict));
            continue;
          }
          // The arrangement quantifier makes the value symmetric in the
          // triple, so one evaluation per index set suffices.
          std::array<size_t, 3> key = {a, b, c};
          std::sort(key.begin(), key.end());
          auto it = memo.find(key);
          if (it == memo.end())
            it = memo
                     .emplace(key, grading_triple(q_.evaluated.members[key[0]],
                                                  q_.evaluated.members[key[1]],
                                                  q_.evaluated.members[key[2]], i, j, strict))
                     .first;
          acc.add_valuation(w, it->second);
        }
      }
    if (denom == 0)
      throw EvalError("pool-too-small: grading needs three evaluated agents with positive weight");
    return scale_valuation(acc.done(), Rational(1) / denom);
  }

  // --- anticipation -----------------------------------------------------------

  Valuation acomp_pair(const PolicyPtr& p1, const PolicyPtr& p2, int i, int j) {
    check_slot(i);
    check_slot(j);
    if (env().team_of(i) == env().team_of(j))
      throw EvalError("no-eligible-slot-pair: competitive anticipation needs slots in opposed teams");
    check_compatible(*p1, env());
    check_compatible(*p2, env());
    const PatternSet& ps = patterns_minus({i, j});
    ValuationAccum acc;
    Rational half(1, 2);
    for (size_t p = 0; p < ps.pats.size(); ++p) {
      RewardProfile with_partner = profile(instantiate(ps.pats[p], pair_fills(i, j, p1, p2)));
      RewardProfile with_reference =
          profile(instantiate(ps.pats[p], pair_fills(i, j, p1, baseline())));
      acc.add_valuation(ps.w[p] * half, slot_value(with_partner, i));
      acc.add_valuation(-(ps.w[p] * half), slot_value(with_reference, i));
    }
    return acc.done();
  }

  Valuation acoop_pair(const PolicyPtr& p1, const PolicyPtr& p2, int i, int j) {
    check_slot(i);
    check_slot(j);
    if (i == j) throw std::invalid_argument("slot pair must use two distinct slots");
    bool same_team = env().team_of(i) == env().team_of(j);
    if (!same_team && env().descriptor().teams.size() < 3)
      throw EvalError("no-eligible-slot-pair: cooperative anticipation needs team partners");
    check_compatible(*p1, env());
    check_compatible(*p2, env());
    const PatternSet& ps = patterns_minus({i, j});
    ValuationAccum acc;
    Rational quarter(1, 4);
    for (size_t p = 0; p < ps.pats.size(); ++p) {
      RewardProfile both = profile(instantiate(ps.pats[p], pair_fills(i, j, p1, p2)));
      RewardProfile ref_j = profile(instantiate(ps.pats[p], pair_fills(i, j, p1, baseline())));
      RewardProfile ref_i = profile(instantiate(ps.pats[p], pair_fills(i, j, baseline(), p2)));
      Rational w = ps.w[p] * quarter;
      acc.add_valuation(w, slot_value(both, i));
      acc.add_valuation(w, slot_value(both, j));
      acc.add_valuation(-w, slot_value(ref_j, i));
      acc.add_valuation(-w, slot_value(ref_i, j));
    }
    return acc.done();
  }

  // Set level: each evaluated agent pairs with its best candidate partner.
  Valuation anticipation_set(int i, int j, bool competitive) {
    if (q_.opponents.members.empty())
      throw EvalError("pool-too-small: anticipation needs a non-empty partner pool");
    const auto& ew = evaluated_weights();
    ValuationAccum acc;
    for (size_t a = 0; a < q_.evaluated.members.size(); ++a) {
      if (ew[a] == 0 && !naive_) continue;
      std::optional<Valuation> best;
      for (const auto& cand : q_.opponents.members) {
        Valuation v = competitive ? acomp_pair(q_.evaluated.members[a], cand, i, j)
                                  : acoop_pair(q_.evaluated.members[a], cand, i, j);
        if (!best || valuation_less(*best, v)) best = v;
      }
      acc.add_valuation(ew[a], *best);
    }
    return acc.done();
  }

  Valuation acomp_env() {
    const auto& teams = env().descriptor().teams;
    ValuationAccum acc;
    Rational mass(0);
    for (size_t t1 = 0; t1 < teams.size(); ++t1)
      for (size_t t2 = 0; t2 < teams.size(); ++t2) {
        if (t1 == t2) continue;
        for (int i : teams[t1])
          for (int j : teams[t2]) {
            Rational w = sw_[i] * sw_[j];
            mass += w;
            if (w == 0 && !naive_) continue;
            acc.add_valuation(w, anticipation_set(i, j, /*competitive=*/true));
          }
      }
    if (mass == 0)
      throw EvalError("no-eligible-slot-pair: competitive anticipation needs opposed teams");
    return scale_valuation(acc.done(), Rational(1) / mass);
  }

  Valuation acoop_env() {
    const auto& teams = env().descriptor().teams;
    ValuationAccum acc;
    Rational mass(0);
    for (const auto& team : teams)
      for (int i : team)
        for (int j : team) {
          if (i == j) continue;
          Rational w = sw_[i] * sw_[j];
          mass += w;
          if (w == 0 && !naive_) continue;
          acc.add_valuation(w, anticipation_set(i, j, /*competitive=*/false));
        }
    // With three or more teams, two slots from different teams can still
    // cooperate against the rest; each ordered team pair counts once per
    // remaining third team.
    for (size_t t1 = 0; t1 < teams.size(); ++t1)
      for (size_t t2 = 0; t2 < teams.size(); ++t2) {
        if (t1 == t2) continue;
        for (size_t t3 = 0; t3 < teams.size(); ++t3) {
          if (t3 == t1 || t3 == t2) continue;
          for (int i : teams[t1])
            for (int j : teams[t2]) {
              Rational w = sw_[i] * sw_[j];
              mass += w;
              if (w == 0 && !naive_) continue;
              acc.add_valuation(w, anticipation_set(i, j, /*competitive=*/false));
            }
        }
      }
    if (mass == 0)
      throw EvalError("no-eligible-slot-pair: cooperative anticipation needs team partners");
    return scale_valuation(acc.done(), Rational(1) / mass);
  }

  // --- environment-level shells ----------------------------------------------

  template <typename SetFn>
  Valuation per_slot_env(SetFn set_fn) {
    ValuationAccum acc;
    for (int i = 0; i < slots(); ++i) {
      if (sw_[i] == 0 && !naive_) continue;
      acc.add_valuation(sw_[i], set_fn(i));
    }
    return acc.done();
  }

  template <typename SetFn>
  Valuation slot_pair_env(SetFn set_fn) {
    if (slots() < 2)
      throw EvalError("no-eligible-slot-pair: the environment has a single slot");
    ValuationAccum acc;
    Rational mass(0);
    for (int i = 0; i < slots(); ++i)
      for (int j = 0; j < slots(); ++j) {
        if (i == j) continue;
        Rational w = sw_[i] * sw_[j];
        mass += w;
        if (w == 0 && !naive_) continue;
        acc.add_valuation(w, set_fn(i, j));
      }
    if (mass == 0)
      throw EvalError("no-eligible-slot-pair: slot weights leave no usable slot pair");
    return scale_valuation(acc.done(), Rational(1) / mass);
  }

  const PropertyQuery& q_;
  RewardCache local_cache_;
  RewardCache* cache_;
  bool naive_;
  std::vector<Rational> ew_;  // evaluated weights, normalized lazily
  std::vector<Rational> ow_;  // opponent weights, normalized
  std::map<std::string, Rational> omap_;
  std::vector<Rational> sw_;  // slot weights, normalized
  PolicyPtr baseline_;
  std::map<std::string, PatternSet> patterns_;
  std::map<std::string, Valuation> upsilon_memo_;
};

}  // namespace detail

// Environment-level property value (the figure quantity).
inline Valuation evaluate_property(const PropertyQuery& q, RewardCache* cache = nullptr) {
  detail::PropertyEval ev(q, cache, /*naive=*/false);
  return ev.env_level();
}

// Literal transcription of the definition sums; used to cross-check the
// optimized evaluator.
inline Valuation evaluate_property_naive(const PropertyQuery& q, RewardCache* cache = nullptr) {
  detail::PropertyEval ev(q, cache, /*naive=*/true);
  return ev.env_level();
}

// Agent-level value with explicit evaluated tuple and slots.
inline Valuation evaluate_property_agents(const PropertyQuery& q, const AgentQuery& a,
                                          RewardCache* cache = nullptr) {
  detail::PropertyEval ev(q, cache, /*naive=*/false);
  return ev.agent_level(a);
}

// ---------------------------------------------------------------------------
// Range search over candidate pools.
// ---------------------------------------------------------------------------

enum class RangeRegime { general, left, right };

inline const char* regime_name(RangeRegime r) {
  switch (r) {
    case RangeRegime::general: return "general";
    case RangeRegime::left: return "left";
    case RangeRegime::right: return "right";
  }
  throw std::logic_error("unreachable");
}

inline RangeRegime regime_from_name(const std::string& s) {
  for (auto r : {RangeRegime::general, RangeRegime::left, RangeRegime::right})
    if (s == regime_name(r)) return r;
  throw std::invalid_argument("unknown-regime: " + s);
}

struct RangeWitness {
  int evaluated_index = -1;
  int opponent_index = -1;
  WeightedPool evaluated;
  WeightedPool opponents;
  Valuation value;
};

struct PropertyRange {
  SocialProperty property = SocialProperty::action_dependency;
  RangeRegime regime = RangeRegime::general;
  Valuation lo, hi;
  RangeWitness lo_witness, hi_witness;
  bool non_paper_regime = false;  // one-sided regime with non-uniform weights
  int feasible = 0;               // candidate pairs that evaluated
  int skipped = 0;                // candidate pairs rejected by preconditions
};

namespace detail {

inline bool range_precondition_skip(const std::string& msg) {
  for (const char* prefix :
       {"pool-too-small", "no-eligible-slot-pair", "undefined-correlation"})
    if (msg.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace detail

// Evaluates the property over the cross product of candidate pools and
// reports the requested interval. All endpoints are relative to the
// candidate sets. General: (min, max) over all pairs. Left: lower endpoint
// from General, upper endpoint min over opponent pools of the max over
// evaluated pools. Right: mirrored. Candidates whose preconditions fail are
// skipped; if nothing evaluates the search fails.
inline PropertyRange range_search(SocialProperty property, const EnvPtr& env,
                                  const std::vector<WeightedPool>& evaluated_candidates,
                                  const std::vector<WeightedPool>& opponent_candidates,
                                  RangeRegime regime,
                                  const std::vector<Rational>& slot_weights = {},
                                  const EvalOptions& eval = {}, int action_horizon = 3,
                                  RewardCache* cache = nullptr) {
  if (evaluated_candidates.empty() || opponent_candidates.empty())
    throw EvalError("no-eligible-candidates: empty candidate pool list");

  PropertyRange out;
  out.property = property;
  out.regime = regime;

  std::vector<std::vector<std::optional<Valuation>>> value(
      evaluated_candidates.size(),
      std::vector<std::optional<Valuation>>(opponent_candidates.size()));
  for (size_t e = 0; e < evaluated_candidates.size(); ++e)
    for (size_t o = 0; o < opponent_candidates.size(); ++o) {
      PropertyQuery q;
      q.property = property;
      q.env = env;
      q.evaluated = evaluated_candidates[e];
      q.opponents = opponent_candidates[o];
      q.slot_weights = slot_weights;
      q.eval = eval;
      q.action_horizon = action_horizon;
      try {
        value[e][o] = evaluate_property(q, cache);
        ++out.feasible;
      } catch (const EvalError& err) {
        if (!detail::range_precondition_skip(err.what())) throw;
        ++out.skipped;
      }
    }
  if (out.feasible == 0)
    throw EvalError("no-eligible-candidates: every candidate pair fails the property preconditions");

  auto witness = [&](size_t e, size_t o) {
    RangeWitness w;
    w.evaluated_index = static_cast<int>(e);
    w.opponent_index = static_cast<int>(o);
    w.evaluated = evaluated_candidates[e];
    w.opponents = opponent_candidates[o];
    w.value = *value[e][o];
    return w;
  };

  // General endpoints are always needed (they bound one side of each regime).
  std::optional<std::pair<size_t, size_t>> gmin, gmax;
  for (size_t e = 0; e < evaluated_candidates.size(); ++e)
    for (size_t o = 0; o < opponent_candidates.size(); ++o) {
      if (!value[e][o]) continue;
      if (!gmin || detail::valuation_less(*value[e][o], *value[gmin->first][gmin->second]))
        gmin = {e, o};
      if (!gmax || detail::valuation_less(*value[gmax->first][gmax->second], *value[e][o]))
        gmax = {e, o};
    }

  if (regime == RangeRegime::general) {
    out.lo = *value[gmin->first][gmin->second];
    out.hi = *value[gmax->first][gmax->second];
    out.lo_witness = witness(gmin->first, gmin->second);
    out.hi_witness = witness(gmax->first, gmax->second);
    return out;
  }

  // One-sided regimes: the opponent side is adversarial. For each opponent
  // pool take the best (left) or worst (right) evaluated pool, then take the
  // worst (left) or best (right) opponent pool.
  bool left = regime == RangeRegime::left;
  std::optional<std::pair<size_t, size_t>> pick;
  for (size_t o = 0; o < opponent_candidates.size(); ++o) {
    std::optional<size_t> inner;
    for (size_t e = 0; e < evaluated_candidates.size(); ++e) {
      if (!value[e][o]) continue;
      if (!inner || (left ? detail::valuation_less(*value[*inner][o], *value[e][o])
                          : detail::valuation_less(*value[e][o], *value[*inner][o])))
        inner = e;
    }
    if (!inner) continue;
    if (!pick || (left ? detail::valuation_less(*value[*inner][o], *value[pick->first][pick->second])
                       : detail::valuation_less(*value[pick->first][pick->second], *value[*inner][o])))
      pick = {*inner, o};
  }

  if (left) {
    out.lo = *value[gmin->first][gmin->second];
    out.lo_witness = witness(gmin->first, gmin->second);
    out.hi = *value[pick->first][pick->second];
    out.hi_witness = witness(pick->first, pick->second);
  } else {
    out.lo = *value[pick->first][pick->second];
    out.lo_witness = witness(pick->first, pick->second);
    out.hi = *value[gmax->first][gmax->second];
    out.hi_witness = witness(gmax->first, gmax->second);
  }

  auto uniform_slots = [&] {
    if (slot_weights.empty()) return true;
    for (size_t i = 1; i < slot_weights.size(); ++i)
      if (slot_weights[i] != slot_weights[0]) return false;
    return true;
  };
  bool uniform = uniform_slots();
  for (const auto& c : evaluated_candidates) uniform = uniform && c.uniform();
  for (const auto& c : opponent_candidates) uniform = uniform && c.uniform();
  out.non_paper_regime = !uniform;
  return out;
}

}  // namespace socibench

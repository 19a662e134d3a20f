#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "socibench/engine.hpp"
#include "socibench/envs.hpp"
#include "socibench/policies.hpp"

using namespace socibench;

namespace {

LineUp lineup2(const std::string& a, const std::string& b) {
  return LineUp{{canonical_policy(a), canonical_policy(b)}};
}

LineUp lineup4(const std::string& a, const std::string& b, const std::string& c,
               const std::string& d) {
  return LineUp{{canonical_policy(a), canonical_policy(b), canonical_policy(c),
                 canonical_policy(d)}};
}

std::string seq_str(const std::vector<int>& seq) {
  std::string s;
  for (int a : seq) s += (a == 0 ? 'H' : 'T');
  return s;
}

}  // namespace

TEST_CASE("deterministic rollout reproduces fixed matrix-game values") {
  auto mp = make_env("mp");
  auto rp = expected_average_reward(*mp, lineup2("mp.tail", "mp.head"));
  CHECK(rp.method == EvalMethod::exact_rollout);
  CHECK(rp.values[0] == Exact(-1));
  CHECK(rp.values[1] == Exact(1));
  CHECK(rp.ci_halfwidth == 0.0);

  auto rp2 = expected_average_reward(*mp, lineup2("mp.head", "mp.head"));
  CHECK(rp2.values[0] == Exact(1));
  CHECK(rp2.values[1] == Exact(-1));

  auto pd = make_env("pd");
  auto rp3 = expected_average_reward(*pd, lineup2("pd.blame", "pd.blame"));
  CHECK(rp3.values[0] == Exact(Rational(-1, 3)));
  CHECK(rp3.values[1] == Exact(Rational(-1, 3)));
  auto rp4 = expected_average_reward(*pd, lineup2("pd.coop", "pd.blame"));
  CHECK(rp4.values[0] == Exact(-1));
  CHECK(rp4.values[1] == Exact(1));
}

TEST_CASE("random opponents in matching pennies force zero exactly") {
  auto mp = make_env("mp");
  // Limit (chain) evaluation, both orders, several partners.
  for (const std::string& other : {"mp.head", "mp.tail", "mp.mimic", "mp.rand"}) {
    auto a = expected_average_reward(*mp, lineup2("mp.rand", other));
    CHECK(a.method == EvalMethod::exact_limit);
    CHECK(a.values[0] == Exact(0));
    CHECK(a.values[1] == Exact(0));
    auto b = expected_average_reward(*mp, lineup2(other, "mp.rand"));
    CHECK(b.values[0] == Exact(0));
    CHECK(b.values[1] == Exact(0));
  }
  // Finite-horizon enumeration agrees for every K up to 8.
  for (int k = 1; k <= 8; ++k) {
    EvalOptions o;
    o.horizon_k = k;
    for (const std::string& other : {"mp.head", "mp.tail", "mp.mimic"}) {
      auto rp = expected_average_reward(*mp, lineup2("mp.rand", other), o);
      CHECK(rp.method == EvalMethod::exact_enumeration);
      CHECK(rp.values[0] == Exact(0));
      CHECK(rp.values[1] == Exact(0));
    }
  }
}

TEST_CASE("stochastic limit solver matches hand-computed values") {
  auto pd = make_env("pd");
  // Blame-then-cooperate vs random: once the other side blames, the
  // evaluated agent cooperates forever against a coin.
  auto rp = expected_average_reward(*pd, lineup2("pd.blame_coop", "pd.rand"));
  CHECK(rp.method == EvalMethod::exact_limit);
  CHECK(rp.values[0] == Exact(Rational(-1, 3)));
  CHECK(rp.values[1] == Exact(Rational(2, 3)));

  auto rr = expected_average_reward(*pd, lineup2("pd.rand", "pd.rand"));
  CHECK(rr.values[0] == Exact(0));
  CHECK(rr.values[1] == Exact(0));

  // Mimic locks onto a constant partner after one stochastic step.
  auto rm = expected_average_reward(*pd, lineup2("pd.mimic", "pd.coop"));
  CHECK(rm.values[0] == Exact(Rational(1, 3)));
  CHECK(rm.values[1] == Exact(Rational(1, 3)));
}

TEST_CASE("limit chain solver agrees with rollout cycle detection") {
  // The chain solver also accepts deterministic line-ups; both exact
  // methods must produce identical values on every deterministic pair.
  auto mp = make_env("mp");
  auto pd = make_env("pd");
  const std::vector<std::string> mp_pool = {"mp.head", "mp.tail", "mp.head_tail",
                                            "mp.tail_head", "mp.mimic_opp"};
  const std::vector<std::string> pd_pool = {"pd.coop", "pd.blame", "pd.coop_blame",
                                            "pd.blame_coop"};
  EvalOptions o;
  for (auto& a : mp_pool)
    for (auto& b : mp_pool) {
      LineUp l = lineup2(a, b);
      auto roll = expected_average_reward(*mp, l, o);
      bool blown = false;
      auto chain = detail::eval_exact_limit(*mp, l.slots, o, &blown);
      REQUIRE(!blown);
      CHECK(roll.values[0] == chain.values[0]);
      CHECK(roll.values[1] == chain.values[1]);
    }
  for (auto& a : pd_pool)
    for (auto& b : pd_pool) {
      LineUp l = lineup2(a, b);
      auto roll = expected_average_reward(*pd, l, o);
      bool blown = false;
      auto chain = detail::eval_exact_limit(*pd, l.slots, o, &blown);
      REQUIRE(!blown);
      CHECK(roll.values[0] == chain.values[0]);
      CHECK(roll.values[1] == chain.values[1]);
    }
}

TEST_CASE("pure-cycle line-ups make the truncated average equal the limit") {
  auto mp = make_env("mp");
  auto pd = make_env("pd");
  // These pairs cycle from the first step, so any horizon that is a
  // multiple of the cycle length reproduces the limit exactly.
  struct Case {
    EnvPtr env;
    LineUp l;
  };
  std::vector<Case> cases;
  cases.push_back({mp, lineup2("mp.tail", "mp.head")});
  cases.push_back({mp, lineup2("mp.head", "mp.head")});
  cases.push_back({pd, lineup2("pd.blame", "pd.blame")});
  cases.push_back({pd, lineup2("pd.coop", "pd.blame")});
  for (auto& c : cases) {
    auto lim = expected_average_reward(*c.env, c.l);
    EvalOptions o;
    o.horizon_k = 10;
    auto fin = expected_average_reward(*c.env, c.l, o);
    CHECK(lim.values[0] == fin.values[0]);
    CHECK(lim.values[1] == fin.values[1]);
  }
}

TEST_CASE("finite-horizon cycle rationals for the horizon-aware blame scripts") {
  auto pd = make_env("pd");
  EvalOptions o;
  o.horizon_k = 10;
  // Three pairwise match-ups whose final-step gambits produce a strict
  // cyclic beat order: ccb beats mimic, bbc beats ccb, mimic beats bbc.
  auto a = expected_average_reward(*pd, lineup2("pd.blame_ccb", "pd.blame_bbc"), o);
  CHECK(a.values[0] == Exact(Rational(-1, 3)));
  CHECK(a.values[1] == Exact(Rational(-2, 15)));
  auto b = expected_average_reward(*pd, lineup2("pd.blame_ccb", "pd.mimic"), o);
  CHECK(b.values[0] == Exact(Rational(-2, 15)));
  CHECK(b.values[1] == Exact(Rational(-7, 30)));
  auto c = expected_average_reward(*pd, lineup2("pd.mimic", "pd.blame_bbc"), o);
  CHECK(c.values[0] == Exact(Rational(-7, 30)));
  CHECK(c.values[1] == Exact(Rational(-1, 3)));

  // The beat cycle survives at longer horizons.
  EvalOptions o2;
  o2.horizon_k = 100;
  auto a2 = expected_average_reward(*pd, lineup2("pd.blame_ccb", "pd.blame_bbc"), o2);
  CHECK(a2.values[0] < a2.values[1]);
  auto b2 = expected_average_reward(*pd, lineup2("pd.blame_ccb", "pd.mimic"), o2);
  CHECK(b2.values[0] > b2.values[1]);
  auto c2 = expected_average_reward(*pd, lineup2("pd.mimic", "pd.blame_bbc"), o2);
  CHECK(c2.values[0] > c2.values[1]);
}

TEST_CASE("episodic pursuit evaluation pays the episode average") {
  auto pp = make_env("pp");
  auto rp = expected_average_reward(*pp, lineup4("pp.stay", "pp.chase", "pp.chase",
                                                 "pp.chase"));
  CHECK(rp.method == EvalMethod::exact_rollout);
  CHECK(rp.values[0] == Exact(-1));
  CHECK(rp.values[1] == Exact(1));
  CHECK(rp.values[2] == Exact(1));
  CHECK(rp.values[3] == Exact(1));

  // Stochastic prey, exhaustively certain capture: exact enumeration.
  auto rx = expected_average_reward(*pp, lineup4("pp.x_avoid", "pp.chase", "pp.chase",
                                                 "pp.chase"));
  CHECK(rx.method == EvalMethod::exact_enumeration);
  CHECK(rx.values[0] == Exact(-1));
  CHECK(rx.values[1] == Exact(1));

  // Horizons beyond the episode clamp to it.
  EvalOptions o;
  o.horizon_k = 50;
  auto rc = expected_average_reward(*pp, lineup4("pp.stay", "pp.chase", "pp.chase",
                                                 "pp.chase"), o);
  CHECK(rc.values[0] == rp.values[0]);

  // Slots on the same team always receive the same reward.
  auto rw = expected_average_reward(*pp, lineup4("pp.win", "pp.win", "pp.lose",
                                                 "pp.chase"));
  CHECK(rw.values[1] == rw.values[2]);
  CHECK(rw.values[2] == rw.values[3]);
  CHECK(rw.values[0] == -rw.values[1]);
}

TEST_CASE("action distributions enumerate exact sequence atoms") {
  auto mp = make_env("mp");
  // Mimic against a head-player: the first action is a fair coin, every
  // later action copies Head.
  auto ad = action_distribution(*mp, lineup2("mp.mimic", "mp.head"), 0, 3);
  REQUIRE(ad.size() == 2);
  std::map<std::string, Rational> got;
  Exact total(0);
  for (auto& [seq, p] : ad) {
    got[seq_str(seq)] = p.as_rational();
    total += p;
  }
  CHECK(total == Exact(1));
  CHECK(got.at("HHH") == Rational(1, 2));
  CHECK(got.at("THH") == Rational(1, 2));

  // A random agent spreads uniformly over all length-2 sequences.
  auto ar = action_distribution(*mp, lineup2("mp.rand", "mp.head"), 0, 2);
  REQUIRE(ar.size() == 4);
  for (auto& [seq, p] : ar) CHECK(p == Exact(Rational(1, 4)));

  // The observed partner of a deterministic pair is a point mass.
  auto ah = action_distribution(*mp, lineup2("mp.tail", "mp.head"), 1, 4);
  REQUIRE(ah.size() == 1);
  CHECK(seq_str(ah.begin()->first) == "HHHH");
  CHECK(ah.begin()->second == Exact(1));
}

TEST_CASE("divergences compare exactly") {
  auto mp = make_env("mp");
  auto d1 = action_distribution(*mp, lineup2("mp.mimic", "mp.head"), 0, 3);
  auto d2 = action_distribution(*mp, lineup2("mp.mimic", "mp.head"), 0, 3);
  auto d3 = action_distribution(*mp, lineup2("mp.mimic", "mp.tail"), 0, 3);
  CHECK(divergence_actions(d1, d2) == Exact(0));
  CHECK(divergence_actions(d1, d3) == Exact(1));

  CHECK(divergence_rewards(Exact(Rational(1, 3)), Exact(Rational(1, 3))) == Exact(0));
  CHECK(divergence_rewards(Exact(Rational(1, 3)), Exact(Rational(-1, 3))) == Exact(1));
  CHECK(divergence_rewards(Exact(0), Exact(0), RewardDivergence::relative) == Exact(0));
  CHECK(divergence_rewards(Exact(1), Exact(-1), RewardDivergence::relative) == Exact(1));
  CHECK(divergence_rewards(Exact(3), Exact(1), RewardDivergence::relative) ==
        Exact(Rational(1, 2)));
  // The sqrt2 coin survives the relative form exactly.
  Exact a = Exact::inv_sqrt2();
  CHECK(divergence_rewards(a, a, RewardDivergence::relative) == Exact(0));
}

TEST_CASE("weighted correlation recovers exact endpoints and degenerates") {
  using P = WeightedPoint;
  std::vector<P> anti = {{Exact(1), Exact(-1), Rational(1, 2)},
                         {Exact(-1), Exact(1), Rational(1, 2)}};
  auto c1 = weighted_correlation(anti);
  CHECK(c1.is_exact);
  CHECK(c1.exact == Exact(-1));

  std::vector<P> same = {{Exact(1), Exact(1), Rational(1, 3)},
                         {Exact(0), Exact(0), Rational(1, 3)},
                         {Exact(-2), Exact(-2), Rational(1, 3)}};
  auto c2 = weighted_correlation(same);
  CHECK(c2.is_exact);
  CHECK(c2.exact == Exact(1));

  // Non-degenerate, non-unit correlation falls back to a double value.
  std::vector<P> mixed = {{Exact(0), Exact(0), Rational(1, 3)},
                          {Exact(1), Exact(0), Rational(1, 3)},
                          {Exact(2), Exact(3), Rational(1, 3)}};
  auto c3 = weighted_correlation(mixed);
  CHECK(c3.value > 0.0);
  CHECK(c3.value < 1.0);

  // Zero-variance clouds: diagonal reads, then the stated preference.
  std::vector<P> diag = {{Exact(Rational(1, 3)), Exact(Rational(1, 3)), Rational(1)}};
  CHECK(weighted_correlation(diag).exact == Exact(1));
  std::vector<P> anti_diag = {{Exact(1), Exact(-1), Rational(1)}};
  CHECK(weighted_correlation(anti_diag).exact == Exact(-1));
  std::vector<P> zero = {{Exact(0), Exact(0), Rational(1)}};
  CHECK(weighted_correlation(zero, DegeneratePreference::minus).exact == Exact(-1));
  CHECK(weighted_correlation(zero, DegeneratePreference::plus).exact == Exact(1));
  CHECK_THROWS_AS(weighted_correlation(zero), EvalError);
  std::vector<P> skew = {{Exact(1), Exact(2), Rational(1)}};
  CHECK_THROWS_AS(weighted_correlation(skew, DegeneratePreference::plus), EvalError);
}

TEST_CASE("monte carlo fallback stays within its confidence interval") {
  auto mp = make_env("mp");
  EvalOptions o;
  o.max_exact_states = 1;  // force the sampler
  o.mc_samples = 4000;
  o.seed = 11;
  auto rp = expected_average_reward(*mp, lineup2("mp.rand", "mp.head"), o);
  CHECK(rp.method == EvalMethod::monte_carlo);
  CHECK(rp.samples == 4000);
  REQUIRE(rp.ci_halfwidth > 0.0);
  CHECK(std::abs(rp.approx[0]) <= 3.0 * rp.ci_halfwidth);
  CHECK(std::abs(rp.approx[1]) <= 3.0 * rp.ci_halfwidth);

  auto pd = make_env("pd");
  auto rq = expected_average_reward(*pd, lineup2("pd.blame_coop", "pd.rand"), o);
  CHECK(std::abs(rq.approx[0] - (-1.0 / 3.0)) <= 3.0 * rq.ci_halfwidth + 1e-9);
  CHECK(std::abs(rq.approx[1] - 2.0 / 3.0) <= 3.0 * rq.ci_halfwidth + 1e-9);

  // Same seed, same estimate; the sampler is counter-split deterministic.
  auto rp2 = expected_average_reward(*mp, lineup2("mp.rand", "mp.head"), o);
  CHECK(rp.approx[0] == rp2.approx[0]);
  CHECK(rp.approx[1] == rp2.approx[1]);

  // Exact values are unavailable for sampled profiles.
  CHECK(!rp.exact());
  CHECK_THROWS_AS(rp.exact_value(0), EvalError);

  // With sampling disallowed the budget failure surfaces.
  EvalOptions strict = o;
  strict.allow_monte_carlo = false;
  CHECK_THROWS_AS(expected_average_reward(*mp, lineup2("mp.rand", "mp.head"), strict),
                  EvalError);
}

TEST_CASE("reward cache collapses clones and repeated queries") {
  auto mp = make_env("mp");
  RewardCache cache;
  auto base = expected_average_reward(*mp, lineup2("mp.tail", "mp.head"), {}, &cache);
  CHECK(cache.misses == 1);
  auto again = expected_average_reward(*mp, lineup2("mp.tail", "mp.head"), {}, &cache);
  CHECK(cache.hits == 1);
  CHECK(again.values[0] == base.values[0]);
  // Clone ids share behaviour with their base policy, so they share entries.
  LineUp clones{{canonical_policy("mp.tail#2"), canonical_policy("mp.head#3")}};
  auto cl = expected_average_reward(*mp, clones, {}, &cache);
  CHECK(cache.hits == 2);
  CHECK(cl.values[0] == base.values[0]);
}

TEST_CASE("line-up validation rejects misuse") {
  auto mp = make_env("mp");
  auto pp = make_env("pp");
  LineUp wrong_size{{canonical_policy("mp.head")}};
  CHECK_THROWS_AS(expected_average_reward(*mp, wrong_size), std::invalid_argument);
  LineUp wrong_env{{canonical_policy("pp.stay"), canonical_policy("mp.head")}};
  CHECK_THROWS_AS(expected_average_reward(*mp, wrong_env), std::invalid_argument);
  LineUp hole{{canonical_policy("mp.head"), nullptr}};
  CHECK_THROWS_AS(expected_average_reward(*mp, hole), std::invalid_argument);
}

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "socibench/core.hpp"
#include "socibench/grid.hpp"

namespace socibench {

// ---------------------------------------------------------------------------
// Two-player repeated matrix games. State = {last_a1, last_a2}, -1 before the
// first step. Observation = the opponent's last action.
// ---------------------------------------------------------------------------

class MatrixGame : public Environment {
 public:
  State initial_state() const override { return {-1, -1}; }

  // Public payoff access for slot inference.
  std::vector<Rational> payoff_of(int a1, int a2) const { return payoff(a1, a2); }

  Obs observation(const State& s, int slot) const override {
    return {s[1 - slot]};
  }

  EnvStep step(const State& s, const std::vector<int>& actions) const override {
    if (actions.size() != 2) throw std::invalid_argument("need 2 actions");
    for (int a : actions)
      if (a < 0 || a > 1) throw std::invalid_argument("illegal-action");
    EnvStep out;
    out.state = {actions[0], actions[1]};
    out.rewards = payoff(actions[0], actions[1]);
    out.terminal = false;
    return out;
  }

 protected:
  virtual std::vector<Rational> payoff(int a1, int a2) const = 0;
};

// Matching pennies: actions Head/Tail; slot 1 wins +1 on a match.
class MatchingPennies final : public MatrixGame {
 public:
  static constexpr int kHead = 0, kTail = 1;

  const EnvDescriptor& descriptor() const override {
    static const EnvDescriptor d{
        "mp", 2, {{0}, {1}}, {"H", "T"}, Rational(-1), Rational(1),
        false, 0, true, false};
    return d;
  }

 protected:
  std::vector<Rational> payoff(int a1, int a2) const override {
    Rational r = (a1 == a2) ? Rational(1) : Rational(-1);
    return {r, -r};
  }
};

// Prisoner's dilemma normalized to [-1,1]: actions Cooperate/Blame.
// (C,C) -> (1/3,1/3); (C,B) -> (-1,1); (B,C) -> (1,-1); (B,B) -> (-1/3,-1/3).
class PrisonersDilemma final : public MatrixGame {
 public:
  static constexpr int kCoop = 0, kBlame = 1;

  const EnvDescriptor& descriptor() const override {
    static const EnvDescriptor d{
        "pd", 2, {{0}, {1}}, {"C", "B"}, Rational(-1), Rational(1),
        false, 0, false, false};
    return d;
  }

 protected:
  std::vector<Rational> payoff(int a1, int a2) const override {
    if (a1 == kCoop && a2 == kCoop) return {Rational(1, 3), Rational(1, 3)};
    if (a1 == kCoop) return {Rational(-1), Rational(1)};
    if (a2 == kCoop) return {Rational(1), Rational(-1)};
    return {Rational(-1, 3), Rational(-1, 3)};
  }
};

// ---------------------------------------------------------------------------
// Predator-prey pursuit on the 4x4 board. Slot 0 is the prey (team 0); slots
// 1..3 are predators (team 1). Episode is exactly 6 simultaneous iterations;
// rewards are 0 until the final iteration, which pays the prey +6 when never
// caught and -6 when caught (predators the opposite), so the episode average
// is exactly +/-1. Capture = sharing a cell after a move resolves (latched);
// swapping cells in one step is not capture.
//
// State layout: {t, captured, r0,c0, r1,c1, r2,c2, r3,c3, la0..la3} where laX
// is slot X's previous action (-1 on the first step).
// Observation for a slot: {own_r, own_c, own_team, then per other slot in
// ascending order: r, c, team, last_action}.
// ---------------------------------------------------------------------------

class PursuitGame final : public Environment {
 public:
  static constexpr int kIterations = 6;

  const EnvDescriptor& descriptor() const override {
    static const EnvDescriptor d{
        "pp", 4, {{0}, {1, 2, 3}}, {"U", "R", "D", "L"}, Rational(-kIterations),
        Rational(kIterations), true, kIterations, false, true};
    return d;
  }

  State initial_state() const override {
    // Prey top-left; predators at the three remaining corners.
    return {0, 0, /*prey*/ 0, 0, /*preds*/ 0, 3, 3, 0, 3, 3, -1, -1, -1, -1};
  }

  static grid::Cell pos(const State& s, int slot) {
    return {s[2 + 2 * slot], s[3 + 2 * slot]};
  }
  static int time_of(const State& s) { return s[0]; }
  static bool captured(const State& s) { return s[1] != 0; }

  Obs observation(const State& s, int slot) const override {
    Obs o;
    grid::Cell me = pos(s, slot);
    o.push_back(me.r);
    o.push_back(me.c);
    o.push_back(slot == 0 ? 0 : 1);
    for (int j = 0; j < 4; ++j) {
      if (j == slot) continue;
      grid::Cell p = pos(s, j);
      o.push_back(p.r);
      o.push_back(p.c);
      o.push_back(j == 0 ? 0 : 1);
      o.push_back(s[10 + j]);
    }
    return o;
  }

  EnvStep step(const State& s, const std::vector<int>& actions) const override {
    if (actions.size() != 4) throw std::invalid_argument("need 4 actions");
    for (int a : actions)
      if (a < 0 || a > 3) throw std::invalid_argument("illegal-action");
    int t = time_of(s);
    if (t >= kIterations) throw std::domain_error("step-after-terminal");
    EnvStep out;
    out.state = s;
    out.state[0] = t + 1;
    for (int i = 0; i < 4; ++i) {
      grid::Cell n = grid::resolve(pos(s, i), actions[i]);
      out.state[2 + 2 * i] = n.r;
      out.state[3 + 2 * i] = n.c;
      out.state[10 + i] = actions[i];
    }
    bool cap = captured(s);
    if (!cap) {
      grid::Cell prey = pos(out.state, 0);
      for (int j = 1; j < 4 && !cap; ++j) cap = pos(out.state, j) == prey;
    }
    out.state[1] = cap ? 1 : 0;
    out.terminal = (t + 1 == kIterations);
    if (out.terminal) {
      Rational prey_r = cap ? Rational(-kIterations) : Rational(kIterations);
      out.rewards = {prey_r, -prey_r, -prey_r, -prey_r};
    } else {
      out.rewards.assign(4, Rational(0));
    }
    return out;
  }
};

inline EnvPtr make_env(const std::string& id) {
  if (id == "mp") return std::make_shared<MatchingPennies>();
  if (id == "pd") return std::make_shared<PrisonersDilemma>();
  if (id == "pp") return std::make_shared<PursuitGame>();
  throw std::invalid_argument("unknown environment: " + id);
}

}  // namespace socibench

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "socibench/core.hpp"
#include "socibench/envs.hpp"
#include "socibench/grid.hpp"
#include "socibench/pursuit.hpp"

namespace socibench {

namespace detail {

inline ActionDist point_mass(int a) { return {{a, Exact(Rational(1))}}; }

inline ActionDist uniform_actions(int n) {
  ActionDist d;
  Exact p{Rational(1, n)};
  for (int a = 0; a < n; ++a) d.emplace_back(a, p);
  return d;
}

// Rewards in the matrix games are multiples of 1/3; encode exactly in an int.
inline int reward_code(const Rational& r) {
  Rational t = r * 3;
  if (boost::multiprecision::denominator(t) != 1)
    throw std::logic_error("reward not a multiple of 1/3");
  return static_cast<int>(boost::multiprecision::numerator(t));
}

inline Rational reward_from_code(int code) { return Rational(code, 3); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Slot inference for two-player matrix games: which slot is consistent with
// (own action, opponent action, own reward)? nullopt = both (ambiguous).
// ---------------------------------------------------------------------------

inline std::optional<int> infer_slot(const MatrixGame& env, int own, int opp,
                                     const Rational& reward) {
  bool slot0 = env.payoff_of(own, opp)[0] == reward;
  bool slot1 = env.payoff_of(opp, own)[1] == reward;
  if (slot0 && slot1) return std::nullopt;
  if (slot0) return 0;
  if (slot1) return 1;
  throw std::logic_error("inconsistent-observation");
}

// ---------------------------------------------------------------------------
// Matrix-game policies.
// ---------------------------------------------------------------------------

class MatrixPolicyBase : public Policy {
 public:
  const std::string& id() const override { return id_; }
  std::vector<std::string> compatible() const override { return {env_->id()}; }
  State reset(int) const override { return {}; }
  State advance(const State& s, const Obs&, int, const Rational&) const override {
    return s;
  }

 protected:
  MatrixPolicyBase(std::string id, const std::string& env_id)
      : id_(std::move(id)),
        env_(std::dynamic_pointer_cast<const MatrixGame>(make_env(env_id))) {
    if (!env_) throw std::logic_error("matrix policy needs a matrix game");
  }

  std::string id_;
  std::shared_ptr<const MatrixGame> env_;
};

// Always plays one fixed action.
class ConstantMatrixPolicy final : public MatrixPolicyBase {
 public:
  ConstantMatrixPolicy(std::string id, const std::string& env_id, int action)
      : MatrixPolicyBase(std::move(id), env_id), action_(action) {}

  bool deterministic() const override { return true; }
  ActionDist act(const State&, const Obs&) const override {
    return detail::point_mass(action_);
  }

 private:
  int action_;
};

// Uniform random over both actions.
class RandomMatrixPolicy final : public MatrixPolicyBase {
 public:
  RandomMatrixPolicy(std::string id, const std::string& env_id)
      : MatrixPolicyBase(std::move(id), env_id) {}

  bool deterministic() const override { return false; }
  ActionDist act(const State&, const Obs& obs) const override {
    (void)obs;
    return detail::uniform_actions(2);
  }
};

// Random first action, then repeats the opponent's last action.
class MimicPolicy final : public MatrixPolicyBase {
 public:
  MimicPolicy(std::string id, const std::string& env_id)
      : MatrixPolicyBase(std::move(id), env_id) {}

  bool deterministic() const override { return false; }
  ActionDist act(const State&, const Obs& obs) const override {
    if (obs[0] < 0) return detail::uniform_actions(2);
    return detail::point_mass(obs[0]);
  }
};

// Starts with start_action; once the opponent is seen playing trigger_action,
// switches to switched_action forever. The opponent's action each step is
// decoded from (own action, own reward), which is unambiguous in the
// prisoner's dilemma payoffs.
class TriggerMatrixPolicy final : public MatrixPolicyBase {
 public:
  TriggerMatrixPolicy(std::string id, const std::string& env_id, int start,
                      int trigger, int switched)
      : MatrixPolicyBase(std::move(id), env_id),
        start_(start),
        trigger_(trigger),
        switched_(switched) {}

  bool deterministic() const override { return true; }
  State reset(int) const override { return {0}; }

  ActionDist act(const State& s, const Obs&) const override {
    return detail::point_mass(s[0] ? switched_ : start_);
  }

  State advance(const State& s, const Obs&, int action,
                const Rational& reward) const override {
    if (s[0]) return s;
    return {decode_opponent(action, reward) == trigger_ ? 1 : 0};
  }

 private:
  int decode_opponent(int own, const Rational& r) const {
    std::optional<int> found;
    for (int o = 0; o < 2; ++o) {
      if (env_->payoff_of(own, o)[0] == r || env_->payoff_of(o, own)[1] == r) {
        if (found && *found != o)
          throw std::logic_error("opponent action not decodable");
        found = o;
      }
    }
    if (!found) throw std::logic_error("inconsistent-observation");
    return *found;
  }

  int start_, trigger_, switched_;
};

// Probes with uniform random actions until (own action, opponent action, own
// reward) pins down the slot, then plays a per-slot rule. State machine:
// {0} fresh, {1, own_action, reward_code} probe pending, {2, slot} resolved.
class SlotInferringPolicy final : public MatrixPolicyBase {
 public:
  using SlotRule = std::function<int(const Obs&)>;

  SlotInferringPolicy(std::string id, const std::string& env_id, SlotRule slot0,
                      SlotRule slot1)
      : MatrixPolicyBase(std::move(id), env_id),
        rules_{std::move(slot0), std::move(slot1)} {}

  bool deterministic() const override { return false; }
  State reset(int) const override { return {0}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    if (s[0] == 2) return detail::point_mass(rules_[s[1]](obs));
    if (s[0] == 1) {
      auto slot = infer_slot(*env_, s[1], obs[0], detail::reward_from_code(s[2]));
      if (slot) return detail::point_mass(rules_[*slot](obs));
    }
    return detail::uniform_actions(2);
  }

  State advance(const State& s, const Obs& obs, int action,
                const Rational& reward) const override {
    if (s[0] == 2) return s;
    if (s[0] == 1) {
      auto slot = infer_slot(*env_, s[1], obs[0], detail::reward_from_code(s[2]));
      if (slot) return {2, *slot};
    }
    return {1, action, detail::reward_code(reward)};
  }

 private:
  std::array<SlotRule, 2> rules_;
};

// Blame, except for the last three steps of a bounded run, which play a fixed
// tail (the final entries when the horizon is shorter than the tail).
class BlameTailPolicy final : public MatrixPolicyBase {
 public:
  BlameTailPolicy(std::string id, const std::string& env_id,
                  std::array<int, 3> tail)
      : MatrixPolicyBase(std::move(id), env_id), tail_(tail) {}

  bool deterministic() const override { return true; }
  State reset(int horizon_k) const override { return {0, horizon_k}; }

  ActionDist act(const State& s, const Obs&) const override {
    int t = s[0], k = s[1];
    if (k > 0 && t >= k - 3) return detail::point_mass(tail_[t - k + 3]);
    return detail::point_mass(PrisonersDilemma::kBlame);
  }

  State advance(const State& s, const Obs&, int, const Rational&) const override {
    return {s[0] + 1, s[1]};
  }

 private:
  std::array<int, 3> tail_;
};

// ---------------------------------------------------------------------------
// Grid policies. Observations are parsed into a view: own cell and team plus
// the other agents' cells, teams, and last actions in slot order.
// ---------------------------------------------------------------------------

struct GridView {
  grid::Cell me;
  int my_team = 0;
  struct Other {
    grid::Cell at;
    int team;
    int last_action;
  };
  std::vector<Other> others;

  static GridView parse(const Obs& o) {
    GridView v;
    v.me = {o[0], o[1]};
    v.my_team = o[2];
    for (size_t i = 3; i + 4 <= o.size(); i += 4)
      v.others.push_back({{o[i], o[i + 1]}, o[i + 2], o[i + 3]});
    return v;
  }

  bool is_prey() const { return my_team == 0; }

  // The prey's cell (own cell when playing as the prey).
  grid::Cell prey() const {
    if (is_prey()) return me;
    for (const auto& a : others)
      if (a.team == 0) return a.at;
    throw std::logic_error("no prey in view");
  }

  // Cells of the other predators (all predators when playing as the prey).
  std::vector<grid::Cell> other_predators() const {
    std::vector<grid::Cell> out;
    for (const auto& a : others)
      if (a.team == 1) out.push_back(a.at);
    return out;
  }
};

namespace detail {

// Nearest predator by walk distance, ties to the lexicographically smallest
// cell; there is always at least one predator in view.
inline grid::Cell nearest_predator(const GridView& v) {
  auto preds = v.other_predators();
  if (preds.empty()) throw std::logic_error("no predators in view");
  grid::Cell best = preds[0];
  int best_d = grid::bfs_dist(v.me, best);
  for (size_t i = 1; i < preds.size(); ++i) {
    int d = grid::bfs_dist(v.me, preds[i]);
    if (d < best_d || (d == best_d && preds[i] < best)) {
      best = preds[i];
      best_d = d;
    }
  }
  return best;
}

inline int min_pred_dist(const grid::Cell& from, const std::vector<grid::Cell>& preds) {
  int best = 1 << 20;
  for (const auto& p : preds) best = std::min(best, grid::bfs_dist(from, p));
  return best;
}

// One-step lookahead over the four moves; maximize (sign=+1) or minimize
// (sign=-1) the distance score, ties in move order Up < Right < Down < Left.
template <typename Score>
int lookahead_move(const grid::Cell& me, Score score, int sign) {
  int best_move = grid::kUp;
  int best = sign * score(grid::resolve(me, grid::kUp));
  for (int m = grid::kRight; m <= grid::kLeft; ++m) {
    int v = sign * score(grid::resolve(me, m));
    if (v > best) {
      best = v;
      best_move = m;
    }
  }
  return best_move;
}

// Number of free neighbor cells.
inline int mobility(const grid::Cell& c) {
  int n = 0;
  for (int m = 0; m < 4; ++m)
    if (!(grid::resolve(c, m) == c)) ++n;
  return n;
}

// My component of the coordinated pursuit move; predators are identified by
// sorted cell order, which identical policies reconstruct identically.
inline int coordinated_component(const grid::Cell& prey, const grid::Cell& me,
                                 const grid::Cell& o1, const grid::Cell& o2) {
  std::array<grid::Cell, 3> preds{me, o1, o2};
  std::sort(preds.begin(), preds.end());
  int me_idx = 0;
  while (!(preds[static_cast<size_t>(me_idx)] == me)) ++me_idx;
  return pursuit::coordinated_move(prey, preds, me_idx);
}

inline int coordinated_pred_move(const GridView& v) {
  auto others = v.other_predators();
  return coordinated_component(v.prey(), v.me, others[0], others[1]);
}

}  // namespace detail

class GridPolicyBase : public Policy {
 public:
  const std::string& id() const override { return id_; }
  std::vector<std::string> compatible() const override { return {"pp"}; }
  State reset(int) const override { return {}; }
  State advance(const State& s, const Obs&, int, const Rational&) const override {
    return s;
  }

 protected:
  explicit GridPolicyBase(std::string id) : id_(std::move(id)) {}
  std::string id_;
};

// Always plays one fixed move.
class ConstantGridPolicy final : public GridPolicyBase {
 public:
  ConstantGridPolicy(std::string id, int move)
      : GridPolicyBase(std::move(id)), move_(move) {}

  bool deterministic() const override { return true; }
  ActionDist act(const State&, const Obs&) const override {
    return detail::point_mass(move_);
  }

 private:
  int move_;
};

// Stays put by bumping into a wall or block.
class StayPolicy final : public GridPolicyBase {
 public:
  explicit StayPolicy(std::string id) : GridPolicyBase(std::move(id)) {}

  bool deterministic() const override { return true; }
  ActionDist act(const State&, const Obs& obs) const override {
    return detail::point_mass(grid::stay_move(GridView::parse(obs).me));
  }
};

class RandomGridPolicy final : public GridPolicyBase {
 public:
  explicit RandomGridPolicy(std::string id) : GridPolicyBase(std::move(id)) {}

  bool deterministic() const override { return false; }
  ActionDist act(const State&, const Obs&) const override {
    return detail::uniform_actions(4);
  }
};

// Seeks contact as the prey and chases as a predator. The prey walks toward
// the nearest predator; one step away it first waits one step (letting an
// approaching predator close the gap instead of swapping cells), then steps
// onto it. State = {waited}.
class ChasePolicy final : public GridPolicyBase {
 public:
  explicit ChasePolicy(std::string id) : GridPolicyBase(std::move(id)) {}

  bool deterministic() const override { return true; }
  State reset(int) const override { return {0}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    if (!v.is_prey()) return detail::point_mass(detail::coordinated_pred_move(v));
    return detail::point_mass(seek_move(v, s[0]));
  }

  State advance(const State& s, const Obs& obs, int, const Rational&) const override {
    GridView v = GridView::parse(obs);
    if (!v.is_prey()) return s;
    grid::Cell target = detail::nearest_predator(v);
    bool wait_now = grid::bfs_dist(v.me, target) == 1 && s[0] == 0;
    return {wait_now ? 1 : 0};
  }

  static int seek_move(const GridView& v, int waited) {
    grid::Cell target = detail::nearest_predator(v);
    if (grid::bfs_dist(v.me, target) == 1 && !waited)
      return grid::stay_move(v.me);
    return grid::step_toward(v.me, target);
  }
};

// Plays to lose: the prey seeks contact exactly like the chasing prey; a
// predator runs away from the prey. State = {waited}.
class LosePolicy final : public GridPolicyBase {
 public:
  explicit LosePolicy(std::string id) : GridPolicyBase(std::move(id)) {}

  bool deterministic() const override { return true; }
  State reset(int) const override { return {0}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    if (v.is_prey()) return detail::point_mass(ChasePolicy::seek_move(v, s[0]));
    return detail::point_mass(flee_move(v));
  }

  State advance(const State& s, const Obs& obs, int, const Rational&) const override {
    GridView v = GridView::parse(obs);
    if (!v.is_prey()) return s;
    grid::Cell target = detail::nearest_predator(v);
    bool wait_now = grid::bfs_dist(v.me, target) == 1 && s[0] == 0;
    return {wait_now ? 1 : 0};
  }

  static int flee_move(const GridView& v) {
    grid::Cell prey = v.prey();
    return detail::lookahead_move(
        v.me, [&](grid::Cell c) { return grid::bfs_dist(c, prey); }, +1);
  }
};

// Plays to win by watching everyone else. Every agent sees the same cells and
// actions, so agents running this policy keep identical books on who has
// followed which rule, and any peer's past decision can be replayed exactly.
//
// As a predator the pack walks a fixed six-move plan against a compliant
// prey: close to holding cells two steps out, mount the final approach on the
// fifth move and land on every cell the prey can reach on the sixth, a strike
// that only works with all three predators aboard. The books decide
// everything else. A prey off the evasion rule is careless and gets hunted
// outright. A teammate whose actions replay as the coordinated chase is
// joined, converting the pack to plain chasing. A teammate off both rules
// cancels the strike for good: the others hold their places rather than
// blunder in short-handed.
//
// As the prey it holds still while every predator sticks to the plan, which
// never puts a predator beside it before the unavoidable final strike, and
// otherwise dodges: it replays what each still-planned or chasing predator is
// about to do, refuses cells they will land on, keeps a gap from rule
// breakers it cannot predict, and prefers cells the certified pursuit cannot
// convert within the remaining iterations.
//
// The breaks_off variant stops chasing as a predator from the fifth iteration
// and runs from the prey instead, which the books of everyone else record as
// a rule breaker.
//
// State layout: iteration, own slot (-1 before the first store), careless
// prey flag, per-predator class for slots 1..3, then last iteration's cells
// by slot.
class WinFamilyPolicy final : public GridPolicyBase {
 public:
  WinFamilyPolicy(std::string id, bool breaks_off)
      : GridPolicyBase(std::move(id)), breaks_off_(breaks_off) {}

  bool deterministic() const override { return true; }
  State reset(int) const override {
    return {0, -1, 0, kPlanned, kPlanned, kPlanned, 0, 0, 0, 0, 0, 0, 0, 0};
  }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    SlotView now = slots_of(v, s[1]);
    Books b = eval_books(s, now);
    if (v.is_prey()) return detail::point_mass(prey_rule(b, now.at, s[0]));
    if (breaks_off_ && s[0] >= 4)
      return detail::point_mass(LosePolicy::flee_move(v));
    return detail::point_mass(pred_rule(b, now.at, now.me, s[0]));
  }

  State advance(const State& s, const Obs& obs, int, const Rational&) const override {
    GridView v = GridView::parse(obs);
    SlotView now = slots_of(v, s[1]);
    Books b = eval_books(s, now);
    State next = s;
    next[0] = s[0] + 1;
    next[1] = now.me;
    next[2] = b.careless;
    for (int i = 0; i < 3; ++i)
      next[static_cast<size_t>(3 + i)] = b.cls[static_cast<size_t>(i)];
    for (int slot = 0; slot < 4; ++slot) {
      next[static_cast<size_t>(6 + 2 * slot)] = now.at[static_cast<size_t>(slot)].r;
      next[static_cast<size_t>(7 + 2 * slot)] = now.at[static_cast<size_t>(slot)].c;
    }
    return next;
  }

  // Predator classes. Planned covers the whole predator rule, hunting and
  // holds included; chasing means plain coordinated pursuit; rogue is sticky.
  static constexpr int kPlanned = 0;
  static constexpr int kChasing = 1;
  static constexpr int kRogue = 2;

  struct Books {
    int careless = 0;
    std::array<int, 3> cls{{kPlanned, kPlanned, kPlanned}};
  };

  // A view reassembled into absolute slots. Observations list the others in
  // slot order; the own slot is the stored one, or on the first iteration
  // the slot owning the own start corner.
  struct SlotView {
    int me = 0;
    std::array<grid::Cell, 4> at{};
    std::array<int, 4> last{};
  };

  static SlotView slots_of(const GridView& v, int stored_slot) {
    SlotView sv;
    if (stored_slot >= 0)
      sv.me = stored_slot;
    else if (v.is_prey())
      sv.me = 0;
    else if (v.me == grid::Cell{0, 3})
      sv.me = 1;
    else if (v.me == grid::Cell{3, 0})
      sv.me = 2;
    else
      sv.me = 3;
    sv.at[static_cast<size_t>(sv.me)] = v.me;
    sv.last[static_cast<size_t>(sv.me)] = -1;
    size_t j = 0;
    for (int slot = 0; slot < 4; ++slot) {
      if (slot == sv.me) continue;
      sv.at[static_cast<size_t>(slot)] = v.others[j].at;
      sv.last[static_cast<size_t>(slot)] = v.others[j].last_action;
      ++j;
    }
    return sv;
  }

  // Books brought up to date with the actions visible now. Each check replays
  // a peer's last decision from the cells and books stored then, so a
  // compliant peer always passes; demotions are sticky. The own slot is
  // skipped (own actions are not observed), which never desynchronizes a
  // compliant watcher because its own check would have passed anyway.
  static Books eval_books(const State& s, const SlotView& now) {
    Books b;
    b.careless = s[2];
    for (size_t i = 0; i < 3; ++i) b.cls[i] = s[3 + i];
    if (s[1] < 0 || s[0] < 1) return b;
    Books old = b;
    int t0 = s[0] - 1;
    std::array<grid::Cell, 4> at0;
    for (size_t slot = 0; slot < 4; ++slot)
      at0[slot] = {s[6 + 2 * slot], s[7 + 2 * slot]};
    if (now.me != 0 && old.careless == 0 &&
        now.last[0] != prey_rule(old, at0, t0))
      b.careless = 1;
    for (int p = 1; p <= 3; ++p) {
      if (p == now.me || old.cls[static_cast<size_t>(p - 1)] == kRogue)
        continue;
      int seen = now.last[static_cast<size_t>(p)];
      if (old.cls[static_cast<size_t>(p - 1)] == kPlanned &&
          seen == pred_rule(old, at0, p, t0))
        continue;
      b.cls[static_cast<size_t>(p - 1)] =
          seen == chase_component(at0, p) ? kChasing : kRogue;
    }
    return b;
  }

  // The predator decision as a pure function of the cells and the books, so
  // any teammate's move is reproducible.
  static int pred_rule(const Books& b, const std::array<grid::Cell, 4>& at,
                       int me, int t) {
    bool any_chase = false, any_rogue = false;
    for (int p = 1; p <= 3; ++p) {
      if (p == me) continue;
      any_chase |= b.cls[static_cast<size_t>(p - 1)] == kChasing;
      any_rogue |= b.cls[static_cast<size_t>(p - 1)] == kRogue;
    }
    if (any_chase) return chase_component(at, me);
    if (b.careless) return hunt_move(at, me, 6 - t);
    if (any_rogue) return grid::stay_move(at[static_cast<size_t>(me)]);
    return plan_move(me, t, at[static_cast<size_t>(me)]);
  }

  // The prey decision as a pure function of the cells and the books: hold
  // still while everything goes to plan, dodge otherwise.
  static int prey_rule(const Books& b, const std::array<grid::Cell, 4>& at,
                       int t) {
    grid::Cell me = at[0];
    if (b.cls[0] == kPlanned && b.cls[1] == kPlanned && b.cls[2] == kPlanned)
      return grid::stay_move(me);
    std::vector<grid::Cell> predicted, rogues;
    std::array<grid::Cell, 3> next_cells{};
    for (int p = 1; p <= 3; ++p) {
      grid::Cell cur = at[static_cast<size_t>(p)];
      if (b.cls[static_cast<size_t>(p - 1)] == kRogue) {
        rogues.push_back(cur);
        next_cells[static_cast<size_t>(p - 1)] = cur;
        continue;
      }
      int mv = b.cls[static_cast<size_t>(p - 1)] == kChasing
                   ? chase_component(at, p)
                   : pred_rule(b, at, p, t);
      grid::Cell dest = grid::resolve(cur, mv);
      predicted.push_back(dest);
      next_cells[static_cast<size_t>(p - 1)] = dest;
    }
    const pursuit::Tables& tab = pursuit::tables();
    int a = tab.id[next_cells[0].r][next_cells[0].c];
    int bb = tab.id[next_cells[1].r][next_cells[1].c];
    int cc = tab.id[next_cells[2].r][next_cells[2].c];
    int best_m = grid::kUp;
    std::array<int, 7> best{-1, -1, -1, -1, -1, -1, -1};
    for (int m = 0; m < 4; ++m) {
      grid::Cell dp = grid::resolve(me, m);
      int live = 1;
      for (const auto& d : predicted)
        if (dp == d) live = 0;
      int gap = 1 << 20;
      for (const auto& r : rogues) gap = std::min(gap, grid::bfs_dist(dp, r));
      int v = tab.value[static_cast<size_t>(
          tab.sid(tab.id[dp.r][dp.c], a, bb, cc))];
      int vkey = (v == 255 || v >= 6 - t) ? 1000 : v;
      int dmin = 1 << 20, dsum = 0;
      for (int p = 1; p <= 3; ++p) {
        int d = grid::bfs_dist(dp, at[static_cast<size_t>(p)]);
        dmin = std::min(dmin, d);
        dsum += d;
      }
      std::array<int, 7> sc{live,   gap >= 2 ? 1 : 0,     vkey,
                            dmin,   dsum,                 detail::mobility(dp),
                            dp == me ? 1 : 0};
      if (sc > best) {
        best = sc;
        best_m = m;
      }
    }
    return best_m;
  }

 private:
  static int chase_component(const std::array<grid::Cell, 4>& at, int p) {
    int q1 = p == 1 ? 2 : 1;
    int q2 = p == 3 ? 2 : 3;
    return detail::coordinated_component(at[0], at[static_cast<size_t>(p)],
                                         at[static_cast<size_t>(q1)],
                                         at[static_cast<size_t>(q2)]);
  }

  // Hunt a careless prey: take the certified forcing joint whenever it
  // completes within the remaining iterations, the capture-speed joint
  // otherwise.
  static int hunt_move(const std::array<grid::Cell, 4>& at, int me,
                       int remaining) {
    std::array<grid::Cell, 3> preds{{at[1], at[2], at[3]}};
    std::sort(preds.begin(), preds.end());
    int me_idx = 0;
    while (!(preds[static_cast<size_t>(me_idx)] == at[static_cast<size_t>(me)]))
      ++me_idx;
    int joint = pursuit::forcing_within(at[0], preds, remaining);
    if (joint < 0) joint = pursuit::hunt_joint(at[0], preds);
    return (joint >> (2 * (2 - me_idx))) & 3;
  }

  // The six-move plan by start corner: approach, hold two cells out of the
  // start corner the compliant prey never leaves, mount on the fifth move,
  // strike on the sixth. The strike cells are exactly the prey's reachable
  // cells {(0,0),(0,1),(1,0)}.
  static grid::Cell plan_cell(int slot, int t) {
    static constexpr grid::Cell kPlan[3][6] = {
        {{0, 2}, {0, 2}, {0, 2}, {0, 2}, {0, 2}, {0, 1}},
        {{2, 0}, {2, 0}, {2, 0}, {2, 0}, {2, 0}, {1, 0}},
        {{2, 3}, {2, 2}, {2, 1}, {1, 1}, {0, 1}, {0, 0}}};
    return kPlan[slot - 1][std::min(t, 5)];
  }

  static int plan_move(int me, int t, const grid::Cell& mine) {
    grid::Cell target = plan_cell(me, t);
    if (mine == target) return grid::stay_move(mine);
    return grid::step_toward(mine, target);
  }

  bool breaks_off_;
};

// Stochastic corner agent: one initial coin chooses between sitting still for
// the whole episode (probability 1/sqrt(2)) and engaging (walking onto the
// prey as a predator, seeking contact as the prey). State = {phase, waited}
// with phase 0 undecided, 1 avoiding, 2 engaging.
class AvoiderPolicy final : public GridPolicyBase {
 public:
  explicit AvoiderPolicy(std::string id) : GridPolicyBase(std::move(id)) {}

  bool deterministic() const override { return false; }
  State reset(int) const override { return {0, 0}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    int stay = grid::stay_move(v.me);
    if (s[0] == 1) return detail::point_mass(stay);
    if (s[0] == 2) return detail::point_mass(engage_move(v, s[1]));
    int engage = engage_move(v, 0);
    if (engage == stay) throw std::logic_error("avoider branches coincide");
    Exact p_avoid = Exact::inv_sqrt2();
    return {{stay, p_avoid}, {engage, Exact(Rational(1)) - p_avoid}};
  }

  State advance(const State& s, const Obs& obs, int action, const Rational&) const override {
    GridView v = GridView::parse(obs);
    int phase = s[0];
    if (phase == 0) phase = (action == grid::stay_move(v.me)) ? 1 : 2;
    int waited = 0;
    if (phase == 2 && v.is_prey()) {
      grid::Cell target = detail::nearest_predator(v);
      waited = (grid::bfs_dist(v.me, target) == 1 && s[1] == 0) ? 1 : 0;
    }
    return {phase, waited};
  }

 private:
  static int engage_move(const GridView& v, int waited) {
    if (v.is_prey()) return ChasePolicy::seek_move(v, waited);
    return grid::step_toward(v.me, v.prey());
  }
};

// Walks to a fixed corner cell and stays there, in both roles.
class GoToCellPolicy final : public GridPolicyBase {
 public:
  GoToCellPolicy(std::string id, grid::Cell prey_target, grid::Cell pred_target)
      : GridPolicyBase(std::move(id)),
        prey_target_(prey_target),
        pred_target_(pred_target) {}

  bool deterministic() const override { return true; }
  ActionDist act(const State&, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    grid::Cell target = v.is_prey() ? prey_target_ : pred_target_;
    return detail::point_mass(grid::step_toward(v.me, target));
  }

 private:
  grid::Cell prey_target_, pred_target_;
};

// Heads for the bottom-right corner, but reroutes to cell (2,2) once any
// other predator is seen deviating from its own shortest path to that corner.
// As the prey, optionally heads to (2,2) from the start. State = {noticed,
// have_prev, prev positions of the other three agents}.
class NoticingCornerPolicy final : public GridPolicyBase {
 public:
  NoticingCornerPolicy(std::string id, bool prey_goes_inner)
      : GridPolicyBase(std::move(id)), prey_goes_inner_(prey_goes_inner) {}

  bool deterministic() const override { return true; }
  State reset(int) const override { return {0, 0, -1, -1, -1, -1, -1, -1}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    grid::Cell target;
    if (v.is_prey() && prey_goes_inner_) {
      target = kInner;
    } else {
      target = noticed_now(s, v) ? kInner : kCorner;
    }
    return detail::point_mass(grid::step_toward(v.me, target));
  }

  State advance(const State& s, const Obs& obs, int, const Rational&) const override {
    GridView v = GridView::parse(obs);
    State n(8, 0);
    n[0] = noticed_now(s, v) ? 1 : 0;
    n[1] = 1;
    for (int i = 0; i < 3; ++i) {
      n[2 + 2 * i] = v.others[i].at.r;
      n[3 + 2 * i] = v.others[i].at.c;
    }
    return n;
  }

 private:
  static constexpr grid::Cell kCorner{3, 3};
  static constexpr grid::Cell kInner{2, 2};

  bool noticed_now(const State& s, const GridView& v) const {
    if (s[0]) return true;
    if (!s[1]) return false;
    for (int i = 0; i < 3; ++i) {
      if (v.others[i].team != 1) continue;
      grid::Cell prev{s[2 + 2 * i], s[3 + 2 * i]};
      grid::Cell expected = grid::resolve(prev, grid::step_toward(prev, kCorner));
      if (!(v.others[i].at == expected)) return true;
    }
    return false;
  }

  bool prey_goes_inner_;
};

// Replays a fixed trajectory for its starting position, then stays. Scripts
// are cells to enter at steps 1..len; the prey script belongs to the top-left
// start, the predator scripts to the three corners. State = {t, start}.
class ScriptedPolicy final : public GridPolicyBase {
 public:
  struct Scripts {
    std::vector<grid::Cell> prey;
    std::vector<grid::Cell> pred_a;  // from (0,3)
    std::vector<grid::Cell> pred_b;  // from (3,0)
    std::vector<grid::Cell> pred_c;  // from (3,3)
  };

  ScriptedPolicy(std::string id, Scripts scripts)
      : GridPolicyBase(std::move(id)), scripts_(std::move(scripts)) {}

  bool deterministic() const override { return true; }
  State reset(int) const override { return {0, -1}; }

  ActionDist act(const State& s, const Obs& obs) const override {
    GridView v = GridView::parse(obs);
    int start = s[1] >= 0 ? s[1] : grid::cell_index(v.me);
    const auto& script = script_for(start);
    int t = s[0];
    if (t >= static_cast<int>(script.size()))
      return detail::point_mass(grid::stay_move(v.me));
    return detail::point_mass(move_to(v.me, script[t]));
  }

  State advance(const State& s, const Obs& obs, int, const Rational&) const override {
    int start = s[1] >= 0 ? s[1] : grid::cell_index(GridView::parse(obs).me);
    return {s[0] + 1, start};
  }

 private:
  const std::vector<grid::Cell>& script_for(int start) const {
    if (start == grid::cell_index({0, 0})) return scripts_.prey;
    if (start == grid::cell_index({0, 3})) return scripts_.pred_a;
    if (start == grid::cell_index({3, 0})) return scripts_.pred_b;
    if (start == grid::cell_index({3, 3})) return scripts_.pred_c;
    throw std::logic_error("scripted agent started off its script");
  }

  static int move_to(const grid::Cell& from, const grid::Cell& to) {
    if (from == to) return grid::stay_move(from);
    for (int m = grid::kUp; m <= grid::kLeft; ++m)
      if (grid::resolve(from, m) == to) return m;
    throw std::logic_error("script step is not adjacent");
  }

  Scripts scripts_;
};

// ---------------------------------------------------------------------------
// Cross-game policies. Both matrix games share one interface (two actions,
// observation = opponent's last action), so these play either; they exist for
// multi-environment aggregates where one pool must cover every environment.
// ---------------------------------------------------------------------------

class CrossMatrixPolicy final : public Policy {
 public:
  enum class Mode { constant0, constant1, uniform, mimic };

  CrossMatrixPolicy(std::string id, Mode mode) : id_(std::move(id)), mode_(mode) {}

  const std::string& id() const override { return id_; }
  bool deterministic() const override { return mode_ == Mode::constant0 || mode_ == Mode::constant1; }
  std::vector<std::string> compatible() const override { return {"mp", "pd"}; }
  State reset(int) const override { return {}; }
  ActionDist act(const State&, const Obs& obs) const override {
    switch (mode_) {
      case Mode::constant0: return detail::point_mass(0);
      case Mode::constant1: return detail::point_mass(1);
      case Mode::uniform: return detail::uniform_actions(2);
      case Mode::mimic:
        return obs[0] < 0 ? detail::uniform_actions(2) : detail::point_mass(obs[0]);
    }
    throw std::logic_error("unreachable");
  }
  State advance(const State& s, const Obs&, int, const Rational&) const override {
    return s;
  }

 private:
  std::string id_;
  Mode mode_;
};

// ---------------------------------------------------------------------------
// Registry. Names are exposed verbatim in configs and reports. A "#k" suffix
// clones a behavior under a distinct identity (the appendix pools use several
// identically-behaving agents, e.g. three stay agents).
// ---------------------------------------------------------------------------

inline PolicyPtr canonical_policy(const std::string& name) {
  std::string base = name;
  auto hash = name.find('#');
  if (hash != std::string::npos) {
    base = name.substr(0, hash);
    std::string suffix = name.substr(hash + 1);
    if (suffix.empty() ||
        suffix.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("unknown-name: " + name);
  }

  using PD = PrisonersDilemma;
  using MP = MatchingPennies;

  auto mimic_rule = [](const Obs& o) { return o[0]; };
  auto opposite_rule = [](const Obs& o) { return 1 - o[0]; };

  if (base == "mp.head") return std::make_shared<ConstantMatrixPolicy>(name, "mp", MP::kHead);
  if (base == "mp.tail") return std::make_shared<ConstantMatrixPolicy>(name, "mp", MP::kTail);
  if (base == "mp.rand") return std::make_shared<RandomMatrixPolicy>(name, "mp");
  if (base == "mp.mimic") return std::make_shared<MimicPolicy>(name, "mp");
  if (base == "mp.head_tail")
    return std::make_shared<SlotInferringPolicy>(
        name, "mp", [](const Obs&) { return MP::kHead; },
        [](const Obs&) { return MP::kTail; });
  if (base == "mp.tail_head")
    return std::make_shared<SlotInferringPolicy>(
        name, "mp", [](const Obs&) { return MP::kTail; },
        [](const Obs&) { return MP::kHead; });
  if (base == "mp.mimic_opp")
    return std::make_shared<SlotInferringPolicy>(name, "mp", mimic_rule,
                                                 opposite_rule);

  if (base == "pd.coop") return std::make_shared<ConstantMatrixPolicy>(name, "pd", PD::kCoop);
  if (base == "pd.blame") return std::make_shared<ConstantMatrixPolicy>(name, "pd", PD::kBlame);
  if (base == "pd.rand") return std::make_shared<RandomMatrixPolicy>(name, "pd");
  if (base == "pd.mimic") return std::make_shared<MimicPolicy>(name, "pd");
  if (base == "pd.coop_blame")
    return std::make_shared<TriggerMatrixPolicy>(name, "pd", PD::kCoop, PD::kCoop,
                                                 PD::kBlame);
  if (base == "pd.blame_coop")
    return std::make_shared<TriggerMatrixPolicy>(name, "pd", PD::kBlame, PD::kBlame,
                                                 PD::kCoop);
  if (base == "pd.blame_ccb")
    return std::make_shared<BlameTailPolicy>(
        name, "pd", std::array<int, 3>{PD::kCoop, PD::kCoop, PD::kBlame});
  if (base == "pd.blame_bbc")
    return std::make_shared<BlameTailPolicy>(
        name, "pd", std::array<int, 3>{PD::kBlame, PD::kBlame, PD::kCoop});

  if (base == "xm.c0")
    return std::make_shared<CrossMatrixPolicy>(name, CrossMatrixPolicy::Mode::constant0);
  if (base == "xm.c1")
    return std::make_shared<CrossMatrixPolicy>(name, CrossMatrixPolicy::Mode::constant1);
  if (base == "xm.rand")
    return std::make_shared<CrossMatrixPolicy>(name, CrossMatrixPolicy::Mode::uniform);
  if (base == "xm.mimic")
    return std::make_shared<CrossMatrixPolicy>(name, CrossMatrixPolicy::Mode::mimic);

  if (base == "pp.up") return std::make_shared<ConstantGridPolicy>(name, grid::kUp);
  if (base == "pp.down") return std::make_shared<ConstantGridPolicy>(name, grid::kDown);
  if (base == "pp.stay") return std::make_shared<StayPolicy>(name);
  if (base == "pp.rand") return std::make_shared<RandomGridPolicy>(name);
  if (base == "pp.chase") return std::make_shared<ChasePolicy>(name);
  if (base == "pp.win") return std::make_shared<WinPolicy>(name);
  if (base == "pp.lose") return std::make_shared<LosePolicy>(name);
  if (base == "pp.win_winp") return std::make_shared<WinWinpPolicy>(name);
  if (base == "pp.x_avoid") return std::make_shared<AvoiderPolicy>(name);
  if (base == "pp.br")
    return std::make_shared<GoToCellPolicy>(name, grid::Cell{3, 3}, grid::Cell{3, 3});
  if (base == "pp.tl_br")
    return std::make_shared<GoToCellPolicy>(name, grid::Cell{0, 0}, grid::Cell{3, 3});
  if (base == "pp.brp") return std::make_shared<NoticingCornerPolicy>(name, false);
  if (base == "pp.33_brp") return std::make_shared<NoticingCornerPolicy>(name, true);

  if (base == "pp.traj_stg_x")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {},
                  {{0, 2}, {0, 1}, {0, 0}},
                  {{2, 0}, {1, 0}, {0, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}, {0, 0}}});
  if (base == "pp.traj_stg_y")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {{1, 0}, {1, 1}},
                  {{0, 2}, {0, 1}, {0, 0}},
                  {{2, 0}, {1, 0}, {0, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}, {0, 0}}});
  if (base == "pp.traj_stg_z")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {{1, 0}, {1, 1}},
                  {{0, 2}, {0, 1}, {1, 1}, {1, 0}, {0, 0}},
                  {{2, 0}, {2, 1}, {1, 1}, {1, 0}, {0, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {1, 1}, {1, 0}, {0, 0}}});
  if (base == "pp.traj_pg_x")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {{1, 0}, {1, 1}},
                  {{0, 2}, {0, 1}, {1, 1}, {1, 0}, {2, 0}},
                  {{2, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {2, 0}}});
  if (base == "pp.traj_pg_y")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {},
                  {{0, 2}, {0, 1}, {1, 1}, {1, 0}, {0, 0}},
                  {{2, 0}, {2, 1}, {1, 1}, {0, 1}, {0, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {1, 1}, {1, 0}, {0, 0}}});
  if (base == "pp.traj_pg_z")
    return std::make_shared<ScriptedPolicy>(
        name, ScriptedPolicy::Scripts{
                  {{0, 1}, {1, 1}, {1, 0}, {2, 0}},
                  {{0, 2}, {0, 1}, {0, 0}},
                  {{2, 0}, {1, 0}, {0, 0}},
                  {{3, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}, {0, 0}}});

  throw std::invalid_argument("unknown-name: " + name);
}

// Pool construction from registry names.
inline std::vector<PolicyPtr> policy_pool(const std::vector<std::string>& names) {
  std::vector<PolicyPtr> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(canonical_policy(n));
  return out;
}

}  // namespace socibench

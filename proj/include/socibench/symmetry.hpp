#pragma once

// Probe-based symmetry check. An environment is symmetric when every
// team-structure-preserving permutation of the slots leaves finite-horizon
// expected rewards unchanged: R^K_i of a line-up equals R^K_{sigma(i)} of the
// permuted line-up. A probe can only refute symmetry (with a witness) or
// report that no violation was found on the probed line-ups and horizons.

#include <optional>
#include <string>
#include <vector>

#include "socibench/engine.hpp"

namespace socibench {

struct SymmetryWitness {
  std::string reason;
  std::vector<std::string> lineup_ids;
  std::vector<int> permutation;  // slot i of the original maps to permutation[i]
  int slot = -1;
  int horizon = 0;
};

struct SymmetryReport {
  bool refuted = false;
  std::optional<SymmetryWitness> witness;
  int checks = 0;  // reward equalities verified
};

namespace detail {

// All slot permutations that map every team onto a team.
inline std::vector<std::vector<int>> team_preserving_permutations(const Environment& env) {
  const auto& teams = env.descriptor().teams;
  int n = env.slots();
  std::vector<int> team_of(n);
  for (size_t t = 0; t < teams.size(); ++t)
    for (int s : teams[t]) team_of[s] = static_cast<int>(t);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::vector<std::vector<int>> out;
  do {
    // The image of each team must be a single team of the same size.
    bool ok = true;
    for (const auto& team : teams) {
      int image = team_of[perm[team[0]]];
      for (int s : team)
        if (team_of[perm[s]] != image) {
          ok = false;
          break;
        }
      if (!ok) break;
    }
    bool identity = true;
    for (int i = 0; i < n && identity; ++i) identity = perm[i] == i;
    if (ok && !identity) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace detail

inline SymmetryReport symmetry_probe(const EnvPtr& env, const std::vector<PolicyPtr>& pool,
                                     const std::vector<int>& horizons = {1, 2, 3, 5},
                                     EvalOptions opts = {}, RewardCache* cache = nullptr) {
  if (!env) throw std::invalid_argument("precondition-violation: no environment");
  if (pool.empty()) throw std::invalid_argument("precondition-violation: empty probe pool");
  for (const auto& p : pool) {
    if (!p) throw std::invalid_argument("precondition-violation: null policy");
    check_compatible(*p, *env);
  }
  SymmetryReport rep;
  const auto& teams = env->descriptor().teams;
  for (const auto& team : teams)
    if (team.size() != teams[0].size()) {
      rep.refuted = true;
      SymmetryWitness w;
      w.reason = "teams have different sizes (" + std::to_string(teams[0].size()) + " vs " +
                 std::to_string(team.size()) + "), so no slot permutation can swap them";
      rep.witness = std::move(w);
      return rep;
    }

  auto perms = detail::team_preserving_permutations(*env);
  if (perms.empty()) return rep;  // only the identity preserves teams; nothing to refute

  int n = env->slots();
  opts.allow_monte_carlo = false;
  RewardCache local;
  RewardCache* rc = cache ? cache : &local;

  // Enumerate pool^n line-ups by odometer.
  std::vector<size_t> idx(static_cast<size_t>(n), 0);
  while (true) {
    LineUp lu;
    for (int i = 0; i < n; ++i) lu.slots.push_back(pool[idx[static_cast<size_t>(i)]]);
    for (const auto& perm : perms) {
      LineUp moved;
      moved.slots.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) moved.slots[static_cast<size_t>(perm[i])] = lu.slots[static_cast<size_t>(i)];
      for (int k : horizons) {
        EvalOptions o = opts;
        o.horizon_k = k;
        RewardProfile base = expected_average_reward(*env, lu, o, rc);
        RewardProfile swapped = expected_average_reward(*env, moved, o, rc);
        for (int i = 0; i < n; ++i) {
          ++rep.checks;
          if (base.values[static_cast<size_t>(i)] ==
              swapped.values[static_cast<size_t>(perm[i])])
            continue;
          rep.refuted = true;
          SymmetryWitness w;
          w.reason = "expected reward changes under a team-preserving slot permutation";
          for (const auto& p : lu.slots) w.lineup_ids.push_back(p->id());
          w.permutation = perm;
          w.slot = i;
          w.horizon = k;
          rep.witness = std::move(w);
          return rep;
        }
      }
    }
    // advance odometer
    size_t pos = 0;
    while (pos < idx.size()) {
      if (++idx[pos] < pool.size()) break;
      idx[pos] = 0;
      ++pos;
    }
    if (pos == idx.size()) break;
  }
  return rep;
}

}  // namespace socibench

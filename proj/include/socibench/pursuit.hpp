#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "socibench/grid.hpp"

namespace socibench {
namespace pursuit {

// Exact solve of the three-predator pursuit on the 4x4 grid with blocks.
// Moves are simultaneous, swap-throughs do not capture, predators may share
// a cell, and predators sharing a cell must move alike (identical policies
// observe identical states). The prey is adversarial and can predict
// deterministic predators, so a forced capture must cover every prey
// response. V[state] is the least k with capture forced within k steps.

struct Tables {
  std::vector<grid::Cell> cells;            // free cells in row-major order
  std::array<std::array<int, 4>, 16> id{};  // (r,c) -> cell index or -1
  std::array<std::array<int, 4>, 16> res{}; // resolved move destinations
  std::vector<uint8_t> value;               // canonical state -> k, 255 = open
  int n = 0;

  int sid(int p, int a, int b, int c) const {
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    return ((p * n + a) * n + b) * n + c;
  }

  Tables() {
    for (int r = 0; r < grid::kSize; ++r)
      for (int c = 0; c < grid::kSize; ++c) {
        id[r][c] = -1;
        if (!grid::blocked(r, c)) {
          id[r][c] = n++;
          cells.push_back({r, c});
        }
      }
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < 4; ++m) {
        grid::Cell d = grid::resolve(cells[i], m);
        res[i][m] = id[d.r][d.c];
      }
    value.assign(static_cast<size_t>(n) * n * n * n, 255);
    for (int k = 1; k <= 6; ++k)
      for (int p = 0; p < n; ++p)
        for (int a = 0; a < n; ++a)
          for (int b = a; b < n; ++b)
            for (int c = b; c < n; ++c) {
              int s = sid(p, a, b, c);
              if (value[s] != 255) continue;
              if (forcing_joint(p, a, b, c, k) >= 0) value[s] = (uint8_t)k;
            }
  }

  // Joint move forcing capture within k steps, or -1. Among forcing joints,
  // the one whose destinations catch the most prey moves outright (an
  // imperfect prey dies sooner, the worst-case bound is unchanged), ties
  // lexicographic in move order. Joint encoding: ma*16 + mb*4 + mc for the
  // sorted predator order.
  int forcing_joint(int p, int a, int b, int c, int k) const {
    int best = -1, best_kill = -1;
    for (int ma = 0; ma < 4; ++ma)
      for (int mb = 0; mb < 4; ++mb) {
        if (a == b && mb != ma) continue;
        for (int mc = 0; mc < 4; ++mc) {
          if (b == c && mc != mb) continue;
          int da = res[a][ma], db = res[b][mb], dc = res[c][mc];
          bool ok = true;
          int kill = 0;
          for (int m = 0; m < 4 && ok; ++m) {
            int dp = res[p][m];
            if (dp == da || dp == db || dp == dc) {
              ++kill;
              continue;
            }
            int v = value[sid(dp, da, db, dc)];
            if (v == 255 || v >= k) ok = false;
          }
          if (ok && kill > best_kill) {
            best_kill = kill;
            best = ma * 16 + mb * 4 + mc;
          }
        }
      }
    return best;
  }
};

inline const Tables& tables() {
  static const Tables t;
  return t;
}

// Capture-speed tables for hunting an imperfect prey: w[state] is the
// maximal expected discount gamma^T of the capture time T against a
// uniformly random prey (0 if never caught), found by value iteration over
// joint predator moves; best[state] is a maximizing joint, first in
// lexicographic order. This trades the adversarial worst-case certificate
// for speed against a prey that blunders.
struct HuntTables {
  static constexpr float kGamma = 0.75f;
  std::vector<float> w;
  std::vector<int16_t> best;

  HuntTables() {
    const Tables& t = tables();
    int n = t.n;
    size_t total = static_cast<size_t>(n) * n * n * n;
    w.assign(total, 0.0f);
    std::vector<float> next(total, 0.0f);
    for (int iter = 0; iter < 48; ++iter) {
      sweep(t, w, &next, nullptr);
      w.swap(next);
    }
    best.assign(total, 0);
    sweep(t, w, &next, &best);
  }

 private:
  static void sweep(const Tables& t, const std::vector<float>& w,
                    std::vector<float>* out, std::vector<int16_t>* arg) {
    int n = t.n;
    for (int p = 0; p < n; ++p)
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
          for (int c = b; c < n; ++c) {
            int s = t.sid(p, a, b, c);
            float bw = -1.0f;
            int bj = 0;
            for (int ma = 0; ma < 4; ++ma)
              for (int mb = 0; mb < 4; ++mb) {
                if (a == b && mb != ma) continue;
                for (int mc = 0; mc < 4; ++mc) {
                  if (b == c && mc != mb) continue;
                  int da = t.res[a][ma], db = t.res[b][mb], dc = t.res[c][mc];
                  float score = 0.0f;
                  for (int m = 0; m < 4; ++m) {
                    int dp = t.res[p][m];
                    if (dp == da || dp == db || dp == dc)
                      score += 1.0f;
                    else
                      score += w[static_cast<size_t>(t.sid(dp, da, db, dc))];
                  }
                  score *= kGamma / 4.0f;
                  if (score > bw) {
                    bw = score;
                    bj = ma * 16 + mb * 4 + mc;
                  }
                }
              }
            (*out)[static_cast<size_t>(s)] = bw;
            if (arg) (*arg)[static_cast<size_t>(s)] = static_cast<int16_t>(bj);
          }
  }
};

// Hunting joint against a prey off the rails: the expected-capture-speed
// maximizer from HuntTables. `preds` must hold exactly three cells, sorted.
inline int hunt_joint(const grid::Cell& prey,
                      const std::array<grid::Cell, 3>& preds) {
  static const HuntTables h;
  const Tables& t = tables();
  return h.best[static_cast<size_t>(
      t.sid(t.id[prey.r][prey.c], t.id[preds[0].r][preds[0].c],
            t.id[preds[1].r][preds[1].c], t.id[preds[2].r][preds[2].c]))];
}

// The joint move the coordinated-pursuit protocol plays from these cells:
// the forced-capture certificate when one exists, shortest-path pursuit per
// predator otherwise. `preds` must hold exactly three cells, sorted. Moves
// align with the sorted order.
inline std::array<int, 3> protocol_joint(const grid::Cell& prey,
                                         const std::array<grid::Cell, 3>& preds) {
  const Tables& t = tables();
  int p = t.id[prey.r][prey.c];
  int a = t.id[preds[0].r][preds[0].c];
  int b = t.id[preds[1].r][preds[1].c];
  int c = t.id[preds[2].r][preds[2].c];
  int v = t.value[static_cast<size_t>(t.sid(p, a, b, c))];
  if (v != 255) {
    int joint = t.forcing_joint(p, a, b, c, v);
    if (joint >= 0) return {(joint >> 4) & 3, (joint >> 2) & 3, joint & 3};
  }
  return {grid::step_toward(preds[0], prey), grid::step_toward(preds[1], prey),
          grid::step_toward(preds[2], prey)};
}

// Move for the predator at sorted position `me_idx` (cells sorted by (r,c)).
inline int coordinated_move(const grid::Cell& prey,
                            const std::array<grid::Cell, 3>& preds,
                            int me_idx) {
  return protocol_joint(prey, preds)[static_cast<size_t>(me_idx)];
}

// A joint forcing capture within `remaining` iterations, or -1 when the
// certificate cannot promise that much. `preds` sorted.
inline int forcing_within(const grid::Cell& prey,
                          const std::array<grid::Cell, 3>& preds,
                          int remaining) {
  const Tables& t = tables();
  int p = t.id[prey.r][prey.c];
  int a = t.id[preds[0].r][preds[0].c];
  int b = t.id[preds[1].r][preds[1].c];
  int c = t.id[preds[2].r][preds[2].c];
  int v = t.value[static_cast<size_t>(t.sid(p, a, b, c))];
  if (v == 255 || v > remaining) return -1;
  return t.forcing_joint(p, a, b, c, v);
}

}  // namespace pursuit
}  // namespace socibench

#pragma once

#include <array>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace socibench::grid {

// 4x4 board, 0-based (row, col), row 0 at top. Blocked cells at (1,2) and
// (3,1). Moves: Up, Right, Down, Left; a move into a wall or block stays put.
inline constexpr int kSize = 4;
inline constexpr int kUp = 0, kRight = 1, kDown = 2, kLeft = 3;
inline constexpr int kDr[4] = {-1, 0, 1, 0};
inline constexpr int kDc[4] = {0, 1, 0, -1};

struct Cell {
  int r = 0;
  int c = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline bool blocked(int r, int c) { return (r == 1 && c == 2) || (r == 3 && c == 1); }

inline bool walkable(int r, int c) {
  return r >= 0 && r < kSize && c >= 0 && c < kSize && !blocked(r, c);
}

inline Cell resolve(Cell from, int move) {
  Cell to{from.r + kDr[move], from.c + kDc[move]};
  return walkable(to.r, to.c) ? to : from;
}

inline int cell_index(Cell p) { return p.r * kSize + p.c; }

// BFS distances from src over walkable cells, ignoring agents.
inline std::array<int, 16> bfs_from(Cell src) {
  std::array<int, 16> d;
  d.fill(-1);
  std::queue<Cell> q;
  d[cell_index(src)] = 0;
  q.push(src);
  while (!q.empty()) {
    Cell p = q.front();
    q.pop();
    for (int m = 0; m < 4; ++m) {
      Cell n{p.r + kDr[m], p.c + kDc[m]};
      if (!walkable(n.r, n.c) || d[cell_index(n)] >= 0) continue;
      d[cell_index(n)] = d[cell_index(p)] + 1;
      q.push(n);
    }
  }
  return d;
}

inline int bfs_dist(Cell a, Cell b) {
  int d = bfs_from(a)[cell_index(b)];
  if (d < 0) throw std::logic_error("unreachable cell");
  return d;
}

// First move in Up<Right<Down<Left order that keeps the agent in place.
inline int stay_move(Cell at) {
  for (int m = 0; m < 4; ++m)
    if (resolve(at, m) == at) return m;
  throw std::logic_error("no stay move");  // impossible on this board
}

// Move starting a BFS-shortest path from `from` to `to`, ties broken in
// Up<Right<Down<Left order. When already there, the stay move.
inline int step_toward(Cell from, Cell to) {
  if (from == to) return stay_move(from);
  auto d = bfs_from(to);
  int best_move = -1, best = d[cell_index(from)];
  for (int m = 0; m < 4; ++m) {
    Cell n = resolve(from, m);
    if (n == from) continue;
    if (d[cell_index(n)] < best) {
      best = d[cell_index(n)];
      best_move = m;
    }
  }
  if (best_move < 0) return stay_move(from);  // cornered: cannot get closer
  return best_move;
}

}  // namespace socibench::grid

#include "splatsim/sim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "splatsim/common/error.hpp"

namespace splatsim::sim {

WalkableGrid::WalkableGrid(const Vec2& origin, int nx, int ny, double cell, bool walkable)
    : origin_(origin), nx_(nx), ny_(ny), cell_(cell) {
  if (!(cell > 0) || nx < 1 || ny < 1) throw InvalidParameter("grid needs a positive cell size and extent");
  free_.assign(static_cast<std::size_t>(nx) * ny, walkable ? 1 : 0);
}

WalkableGrid WalkableGrid::from_polygon(const Polygon& region, double cell, double clearance,
                                        const std::function<bool(const Vec2&)>& blocked) {
  validate(region);
  Vec2 lo, hi;
  region.bounds(lo, hi);
  const int nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell)));
  const int ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell)));
  WalkableGrid grid(lo, nx, ny, cell, false);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const Vec2 c = grid.center({x, y});
      bool ok = region.contains(c) && (clearance <= 0 || region.distance_to_boundary(c) >= clearance);
      if (ok && blocked) ok = !blocked(c);
      grid.set_walkable({x, y}, ok);
    }
  return grid;
}

Cell WalkableGrid::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin_.x()) / cell_)),
          static_cast<int>(std::floor((p.y() - origin_.y()) / cell_))};
}

Vec2 WalkableGrid::center(const Cell& c) const { return origin_ + cell_ * Vec2(c.x + 0.5, c.y + 0.5); }

std::vector<Cell> WalkableGrid::walkable_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < ny_; ++y)
    for (int x = 0; x < nx_; ++x)
      if (free_[index({x, y})]) out.push_back({x, y});
  return out;
}

std::size_t WalkableGrid::walkable_count() const {
  std::size_t n = 0;
  for (const auto v : free_) n += v != 0;
  return n;
}

std::optional<Cell> WalkableGrid::nearest_walkable(const Vec2& p) const {
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int y = 0; y < ny_; ++y)
    for (int x = 0; x < nx_; ++x) {
      if (!free_[index({x, y})]) continue;
      const double d = (center({x, y}) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = Cell{x, y};
      }
    }
  return best;
}

void WalkableGrid::block(const std::function<bool(const Vec2&)>& blocked) {
  for (int y = 0; y < ny_; ++y)
    for (int x = 0; x < nx_; ++x)
      if (free_[index({x, y})] && blocked(center({x, y}))) free_[index({x, y})] = 0;
}

bool move_allowed(const WalkableGrid& grid, const Cell& from, int dx, int dy) {
  if (!grid.walkable({from.x + dx, from.y + dy})) return false;
  if (dx != 0 && dy != 0) return grid.walkable({from.x + dx, from.y}) && grid.walkable({from.x, from.y + dy});
  return true;
}

std::optional<std::vector<Cell>> astar(const WalkableGrid& grid, const Cell& start, const Cell& goal) {
  if (!grid.walkable(start) || !grid.walkable(goal)) return std::nullopt;
  if (start == goal) return std::vector<Cell>{};
  const double h = grid.cell_size();
  const double diag = h * std::sqrt(2.0);
  const auto heuristic = [&](const Cell& c) {
    const int dx = std::abs(c.x - goal.x), dy = std::abs(c.y - goal.y);
    return h * std::abs(dx - dy) + diag * std::min(dx, dy);
  };
  const std::size_t n = static_cast<std::size_t>(grid.nx()) * grid.ny();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  struct Entry {
    double f;
    std::uint64_t order;
    Cell cell;
    bool operator>(const Entry& o) const { return f > o.f || (f == o.f && order > o.order); }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;
  g[grid.index(start)] = 0;
  open.push({heuristic(start), counter++, start});
  while (!open.empty()) {
    const Cell c = open.top().cell;
    open.pop();
    const std::size_t ci = grid.index(c);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (c == goal) break;
    for (const auto& m : kMoves) {
      if (!move_allowed(grid, c, m[0], m[1])) continue;
      const Cell nb{c.x + m[0], c.y + m[1]};
      const std::size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const double cand = g[ci] + (m[0] != 0 && m[1] != 0 ? diag : h);
      if (cand < g[ni]) {
        g[ni] = cand;
        parent[ni] = static_cast<std::int64_t>(ci);
        open.push({cand + heuristic(nb), counter++, nb});
      }
    }
  }
  if (!closed[grid.index(goal)]) return std::nullopt;
  std::vector<Cell> path;
  for (std::int64_t i = static_cast<std::int64_t>(grid.index(goal)); i >= 0; i = parent[i])
    path.push_back({static_cast<int>(i % grid.nx()), static_cast<int>(i / grid.nx())});
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const WalkableGrid& grid, const std::vector<Cell>& path) {
  double total = 0;
  for (std::size_t i = 1; i < path.size(); ++i) total += (grid.center(path[i]) - grid.center(path[i - 1])).norm();
  return total;
}

std::optional<std::vector<Vec2>> plan_path(const WalkableGrid& grid, const Vec2& from, const Vec2& to) {
  const Cell a = grid.cell_of(from), b = grid.cell_of(to);
  if (a == b) {
    if (!grid.walkable(a)) return std::nullopt;
    return std::vector<Vec2>{from, to};
  }
  const auto cells = astar(grid, a, b);
  if (!cells) return std::nullopt;
  std::vector<Vec2> points;
  points.reserve(cells->size());
  points.push_back(from);
  for (std::size_t i = 1; i + 1 < cells->size(); ++i) points.push_back(grid.center((*cells)[i]));
  points.push_back(to);
  return points;
}

double polyline_length(const std::vector<Vec2>& points) {
  double total = 0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

}  // namespace splatsim::sim

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "splatsim/sim/geometry.hpp"

namespace splatsim::sim {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

/// Occupancy grid over the ground plane. Cell (x, y) covers
/// [origin + cell * (x, y), origin + cell * (x + 1, y + 1)).
class WalkableGrid {
 public:
  WalkableGrid() = default;
  WalkableGrid(const Vec2& origin, int nx, int ny, double cell, bool walkable = true);

  /// Cells whose center lies inside `region` at least `clearance` from its boundary and is
  /// not rejected by `blocked`.
  static WalkableGrid from_polygon(const Polygon& region, double cell, double clearance = 0.0,
                                   const std::function<bool(const Vec2&)>& blocked = {});

  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] double cell_size() const { return cell_; }
  [[nodiscard]] const Vec2& origin() const { return origin_; }

  [[nodiscard]] bool inside(const Cell& c) const { return c.x >= 0 && c.y >= 0 && c.x < nx_ && c.y < ny_; }
  [[nodiscard]] bool walkable(const Cell& c) const { return inside(c) && free_[index(c)] != 0; }
  void set_walkable(const Cell& c, bool walkable) { free_[index(c)] = walkable ? 1 : 0; }
  [[nodiscard]] std::size_t index(const Cell& c) const { return static_cast<std::size_t>(c.y) * nx_ + c.x; }

  [[nodiscard]] Cell cell_of(const Vec2& p) const;
  [[nodiscard]] Vec2 center(const Cell& c) const;
  [[nodiscard]] bool walkable_at(const Vec2& p) const { return walkable(cell_of(p)); }
  [[nodiscard]] std::vector<Cell> walkable_cells() const;
  [[nodiscard]] std::size_t walkable_count() const;

  /// Walkable cell nearest to `p` (by center distance), if any.
  [[nodiscard]] std::optional<Cell> nearest_walkable(const Vec2& p) const;

  /// Marks every cell whose center satisfies `blocked` as not walkable.
  void block(const std::function<bool(const Vec2&)>& blocked);

 private:
  Vec2 origin_ = Vec2::Zero();
  int nx_ = 0, ny_ = 0;
  double cell_ = 0.25;
  std::vector<std::uint8_t> free_;
};

/// 8-connected moves; a diagonal needs both orthogonal neighbors walkable. Costs are in
/// meters (cell or cell * sqrt 2).
inline constexpr int kMoves[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
bool move_allowed(const WalkableGrid& grid, const Cell& from, int dx, int dy);

/// Octile-heuristic A*. Returns the cells from start to goal inclusive; an empty vector
/// when start == goal; nullopt when either end is blocked or no path exists.
std::optional<std::vector<Cell>> astar(const WalkableGrid& grid, const Cell& start, const Cell& goal);

/// Length in meters of the polyline through the cell centers.
double path_cost(const WalkableGrid& grid, const std::vector<Cell>& path);

/// Planar path from `from` to `to` through the A* cells of their containing cells; the end
/// points replace the first and last cell centers. nullopt when unreachable.
std::optional<std::vector<Vec2>> plan_path(const WalkableGrid& grid, const Vec2& from, const Vec2& to);

double polyline_length(const std::vector<Vec2>& points);

}  // namespace splatsim::sim

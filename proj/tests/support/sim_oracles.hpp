#pragma once

// Independent reference implementations for the simulator tests.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/sim/grid.hpp"

namespace splatsim::testing {

/// Plain Dijkstra over the same 8-connected move rules, using an O(V^2) scan instead of a
/// heap. Returns the shortest cost in meters, nullopt if unreachable.
inline std::optional<double> dijkstra_cost(const sim::WalkableGrid& grid, const sim::Cell& s, const sim::Cell& g) {
  if (!grid.walkable(s) || !grid.walkable(g)) return std::nullopt;
  const int nx = grid.nx(), ny = grid.ny();
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> done(n, false);
  dist[grid.index(s)] = 0;
  for (;;) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && std::isfinite(dist[i]) && (u == n || dist[i] < dist[u])) u = i;
    if (u == n) break;
    done[u] = true;
    const int ux = static_cast<int>(u % nx), uy = static_cast<int>(u / nx);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const sim::Cell v{ux + dx, uy + dy};
        if (!grid.walkable(v)) continue;
        if (dx != 0 && dy != 0 && (!grid.walkable({ux + dx, uy}) || !grid.walkable({ux, uy + dy}))) continue;
        const double w = grid.cell_size() * std::hypot(dx, dy);
        const std::size_t vi = grid.index(v);
        if (dist[u] + w < dist[vi]) dist[vi] = dist[u] + w;
      }
  }
  const double d = dist[grid.index(g)];
  return std::isfinite(d) ? std::optional<double>(d) : std::nullopt;
}

/// Least-squares circle through planar points (algebraic fit); returns the radius.
inline double fit_circle_radius(const std::vector<Vec2>& pts, Vec2* center_out = nullptr) {
  Eigen::MatrixXd a(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    a(i, 0) = 2 * pts[i].x();
    a(i, 1) = 2 * pts[i].y();
    a(i, 2) = 1;
    b(i) = pts[i].squaredNorm();
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  const Vec2 c(sol(0), sol(1));
  if (center_out) *center_out = c;
  return std::sqrt(sol(2) + c.squaredNorm());
}

/// Dense-sampling upper bound on the distance between a segment and a triangle.
inline double sampled_segment_triangle_distance(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                                const Vec3& c, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const Vec3 p = p0 + (p1 - p0) * (static_cast<double>(i) / n);
    for (int u = 0; u <= n; ++u)
      for (int v = 0; u + v <= n; ++v) {
        const Vec3 q = a + (b - a) * (static_cast<double>(u) / n) + (c - a) * (static_cast<double>(v) / n);
        best = std::min(best, (p - q).norm());
      }
  }
  return best;
}

}  // namespace splatsim::testing

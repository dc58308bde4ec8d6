#pragma once

#include <vector>

#include "splatsim/common/math.hpp"

namespace splatsim::sim {

/// Simple polygon on the ground plane (either winding).
struct Polygon {
  std::vector<Vec2> vertices;

  [[nodiscard]] bool contains(const Vec2& p) const;  // boundary points count as inside
  [[nodiscard]] double distance_to_boundary(const Vec2& p) const;
  [[nodiscard]] double area() const;
  [[nodiscard]] bool is_simple() const;
  void bounds(Vec2& lo, Vec2& hi) const;
  [[nodiscard]] double diameter() const;  // largest vertex-to-vertex distance
};

/// Throws InvalidParameter for fewer than 3 vertices, non-finite coordinates, zero area or
/// self-intersection.
void validate(const Polygon& poly);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Minimum distance between segments p0p1 and q0q1.
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

/// Minimum distance between segment p0p1 and triangle abc (0 if they intersect).
double segment_triangle_distance(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                 const Vec3& c);

}  // namespace splatsim::sim

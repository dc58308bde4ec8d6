#pragma once

#include <cstdint>
#include <vector>

#include "splatsim/mesh/triangle_mesh.hpp"

namespace splatsim::sim {

/// Upright body: every point within `radius` of the vertical segment from z_lo to z_hi above
/// a planar position. A sweep moves that segment from `from` to `to`.
struct BodySweep {
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  double radius = 0.3;
  double z_lo = 0.3;
  double z_hi = 1.0;
};

/// Minimum distance between two triangles (0 when they intersect).
double triangle_distance(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                         const Vec3& b1, const Vec3& b2);

/// Exact contact predicate shared by the index and the brute-force path.
bool sweep_touches_triangle(const BodySweep& sweep, const Vec3& a, const Vec3& b, const Vec3& c);

/// Ids of every triangle the sweep touches, in ascending order, testing all of them.
std::vector<std::uint32_t> sweep_contacts_brute_force(const mesh::TriangleMesh& mesh, const BodySweep& sweep);

/// Bounding-volume hierarchy over a triangle mesh (median split on the longest centroid
/// axis). The mesh is copied, so the index is self-contained and immutable after building.
class CollisionIndex {
 public:
  CollisionIndex() = default;
  explicit CollisionIndex(mesh::TriangleMesh mesh, int leaf_size = 4);

  [[nodiscard]] const mesh::TriangleMesh& mesh() const { return mesh_; }
  [[nodiscard]] bool empty() const { return mesh_.faces.empty(); }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

  /// Same result as sweep_contacts_brute_force.
  [[nodiscard]] std::vector<std::uint32_t> contacts(const BodySweep& sweep) const;
  /// True if any triangle is touched; stops at the first hit.
  [[nodiscard]] bool touches(const BodySweep& sweep) const;

 private:
  struct Node {
    Vec3 lo, hi;
    std::uint32_t first = 0;  // into order_ for leaves, left child otherwise
    std::uint32_t count = 0;  // > 0 for leaves
    std::uint32_t right = 0;
  };

  template <typename Visit>
  bool traverse(const BodySweep& sweep, Visit&& visit) const;
  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int leaf_size);

  mesh::TriangleMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> tri_lo_, tri_hi_, centroid_;
};

}  // namespace splatsim::sim

#pragma once

#include <string>
#include <vector>

#include "splatsim/mesh/triangle_mesh.hpp"

namespace splatsim::sim {

/// Closed primitives with their base on z = 0, centered on the z axis.
mesh::TriangleMesh make_cylinder(double radius, double height, int segments = 16);
mesh::TriangleMesh make_cone(double radius, double height, int segments = 16);
mesh::TriangleMesh make_box(const Vec3& half_extents);  // base at z = 0

/// Static obstacle model in its local frame (base on z = 0, footprint around the origin).
struct ObstacleAsset {
  std::string name;
  mesh::TriangleMesh mesh;
  Vec3 color = Vec3(0.8, 0.4, 0.1);
  std::string source;  // mesh file it was loaded from; empty for bundled primitives

  /// Largest planar distance of a vertex from the local origin.
  [[nodiscard]] double footprint_radius() const;
};

/// Bundled stand-ins: cone, bin, pole, barrier.
std::vector<ObstacleAsset> builtin_obstacles();

struct PlacedObstacle {
  std::size_t asset = 0;
  Vec2 position = Vec2::Zero();
  double yaw = 0;
};

/// Asset mesh moved to its placed pose on the plane z = ground_z.
mesh::TriangleMesh place(const ObstacleAsset& asset, const PlacedObstacle& pose, double ground_z);

}  // namespace splatsim::sim

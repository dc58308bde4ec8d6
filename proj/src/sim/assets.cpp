#include "splatsim/sim/assets.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/common/error.hpp"

namespace splatsim::sim {

mesh::TriangleMesh make_cylinder(double radius, double height, int segments) {
  if (!(radius > 0) || !(height > 0) || segments < 3) throw InvalidParameter("invalid cylinder");
  mesh::TriangleMesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), height);
  }
  const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
  m.vertices.emplace_back(0, 0, 0);
  m.vertices.emplace_back(0, 0, height);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.faces.push_back({2 * i, 2 * j, 2 * j + 1});
    m.faces.push_back({2 * i, 2 * j + 1, 2 * i + 1});
    m.faces.push_back({bottom, 2 * j, 2 * i});
    m.faces.push_back({top, 2 * i + 1, 2 * j + 1});
  }
  m.compute_normals();
  return m;
}

mesh::TriangleMesh make_cone(double radius, double height, int segments) {
  if (!(radius > 0) || !(height > 0) || segments < 3) throw InvalidParameter("invalid cone");
  mesh::TriangleMesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  const std::uint32_t bottom = n, apex = n + 1;
  m.vertices.emplace_back(0, 0, 0);
  m.vertices.emplace_back(0, 0, height);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.faces.push_back({i, j, apex});
    m.faces.push_back({bottom, j, i});
  }
  m.compute_normals();
  return m;
}

mesh::TriangleMesh make_box(const Vec3& h) {
  if (!(h.array() > 0).all()) throw InvalidParameter("invalid box");
  mesh::TriangleMesh m;
  for (int c = 0; c < 8; ++c)
    m.vertices.emplace_back((c & 1 ? 1 : -1) * h.x(), (c & 2 ? 1 : -1) * h.y(), c & 4 ? 2 * h.z() : 0.0);
  // Outward winding per side.
  const std::uint32_t quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  m.compute_normals();
  return m;
}

double ObstacleAsset::footprint_radius() const {
  double r = 0;
  for (const auto& v : mesh.vertices) r = std::max(r, v.head<2>().norm());
  return r;
}

std::vector<ObstacleAsset> builtin_obstacles() {
  return {
      {"cone", make_cone(0.2, 0.5), Vec3(0.95, 0.45, 0.1), {}},
      {"bin", make_cylinder(0.3, 0.9), Vec3(0.15, 0.5, 0.2), {}},
      {"pole", make_cylinder(0.06, 1.8, 8), Vec3(0.55, 0.55, 0.6), {}},
      {"barrier", make_box(Vec3(0.6, 0.1, 0.4)), Vec3(0.85, 0.15, 0.15), {}},
  };
}

mesh::TriangleMesh place(const ObstacleAsset& asset, const PlacedObstacle& pose, double ground_z) {
  auto m = asset.mesh;
  m.transform(Eigen::AngleAxisd(pose.yaw, Vec3::UnitZ()).toRotationMatrix(),
              Vec3(pose.position.x(), pose.position.y(), ground_z));
  return m;
}

}  // namespace splatsim::sim

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "splatsim/common/math.hpp"

namespace splatsim::mesh {

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;  // per vertex, unit (or zero for isolated vertices)

  [[nodiscard]] bool empty() const { return faces.empty(); }
  [[nodiscard]] Vec3 face_normal(std::size_t f) const;  // unit, right-hand rule
  [[nodiscard]] double face_area(std::size_t f) const;
  [[nodiscard]] Vec3 centroid(std::size_t f) const;

  /// Area-weighted vertex normals from the faces.
  void compute_normals();
  /// Drops faces with repeated indices or area not above `min_area`, then unused vertices.
  void remove_degenerate(double min_area = 0.0);
  /// Keeps the faces with keep[f] != 0 and compacts vertices.
  [[nodiscard]] TriangleMesh subset(const std::vector<std::uint8_t>& keep) const;
  void append(const TriangleMesh& other);
  void transform(const Mat3& rotation, const Vec3& translation);

  /// V - E + F with edges counted as unique undirected vertex pairs.
  [[nodiscard]] long euler_characteristic() const;

  /// Throws InvalidParameter on out-of-range indices or non-finite vertices.
  void validate() const;
};

/// Wavefront OBJ with "v", "vn" and "f a//a b//b c//c" records.
void write_obj(const std::string& path, const TriangleMesh& mesh);
/// Reads v / vn / f records (polygons are fan-triangulated); normals recomputed if absent.
TriangleMesh read_obj(const std::string& path);

/// Binary sidecar: one JSON header line, then vertices, normals (float64 xyz) and faces
/// (uint32 triples), little-endian.
void write_mesh_binary(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_mesh_binary(const std::string& path);

/// Loads either format by extension (.obj or anything else as binary).
TriangleMesh load_mesh(const std::string& path);

}  // namespace splatsim::mesh

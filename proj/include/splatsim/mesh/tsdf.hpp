#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/mesh/triangle_mesh.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::mesh {

/// Dense truncated signed distance grid. Sample (i, j, k) sits at origin + voxel * (i, j, k);
/// positive values are in front of the observed surface. Unobserved samples hold
/// +truncation with weight 0.
class TsdfVolume {
 public:
  TsdfVolume() = default;
  /// Throws InvalidParameter if voxel <= 0, truncation < 2 * voxel or a dim is < 2.
  TsdfVolume(const Vec3& origin, const std::array<int, 3>& dims, double voxel, double truncation);
  /// Grid covering the box [lo, hi] (inclusive, rounded outward).
  static TsdfVolume covering(const Vec3& lo, const Vec3& hi, double voxel, double truncation);

  [[nodiscard]] double voxel_size() const { return voxel_; }
  [[nodiscard]] double truncation() const { return truncation_; }
  [[nodiscard]] const Vec3& origin() const { return origin_; }
  [[nodiscard]] const std::array<int, 3>& dims() const { return dims_; }
  [[nodiscard]] std::size_t size() const { return sdf_.size(); }

  [[nodiscard]] std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i;
  }
  [[nodiscard]] Vec3 position(int i, int j, int k) const {
    return origin_ + voxel_ * Vec3(i, j, k);
  }
  [[nodiscard]] double sdf(int i, int j, int k) const { return sdf_[index(i, j, k)]; }
  [[nodiscard]] double weight(int i, int j, int k) const { return weight_[index(i, j, k)]; }

  /// Direct assignment; the value is clamped to +-truncation. Throws on negative weight.
  void set(int i, int j, int k, double sdf, double weight);

  [[nodiscard]] const std::vector<float>& sdf_values() const { return sdf_; }
  [[nodiscard]] const std::vector<float>& weights() const { return weight_; }

  /// Running weighted average of one observation (weight 1) into sample `idx`.
  void fuse(std::size_t idx, double sdf);

 private:
  Vec3 origin_ = Vec3::Zero();
  std::array<int, 3> dims_{0, 0, 0};
  double voxel_ = 0.1;
  double truncation_ = 0.4;
  std::vector<float> sdf_;
  std::vector<float> weight_;
};

/// Projective fusion of one camera-z depth map. Pixels with depth <= 0, non-finite depth,
/// or a set `skip` mask bit are ignored; samples more than one truncation behind the
/// observed surface are left untouched.
void tsdf_integrate(TsdfVolume& volume, const ImageD& depth, const splat::Camera& camera,
                    const Mask* skip = nullptr);

/// Zero level set of the grid, using only cubes whose 8 samples all have positive weight.
/// Faces are wound so normals point toward positive distance. Emits a warning and returns
/// an empty mesh when there is no crossing.
TriangleMesh marching_cubes(const TsdfVolume& volume);

/// Triangle table used by marching_cubes: for each of the 256 inside-corner configurations
/// the cube-edge triples of its triangles. Corner c has offset (c & 1, c >> 1 & 1, c >> 2 & 1).
const std::array<std::vector<std::array<int, 3>>, 256>& marching_cubes_table();
/// Corner pair of each of the 12 cube edges.
const std::array<std::array<int, 2>, 12>& marching_cubes_edges();

}  // namespace splatsim::mesh

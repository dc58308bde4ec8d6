#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/mesh/triangle_mesh.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::mesh {

inline constexpr double kDefaultGroundAngleDeg = 15.0;

struct GroundMask {
  Mask mask;                        // set where the pixel normal is within the angle of `reference`
  Vec3 reference = Vec3::UnitZ();   // unit mean normal over the seed region
  double angle_deg = kDefaultGroundAngleDeg;
};

/// Seed region made of the bottom `fraction` of image rows.
Mask bottom_rows_seed(int width, int height, double fraction = 0.2);

/// Pixels whose unit normal makes an angle strictly below `angle_deg` with the normalized
/// mean normal of the seed region. Zero or non-finite normals are never in the mask.
/// Throws InvalidParameter for an angle outside (0, 90) and EmptySupport when no seed
/// pixel has a usable normal.
GroundMask ground_mask(const ImageD& normals, const Mask& seed,
                       double angle_deg = kDefaultGroundAngleDeg);

/// ground_mask restricted to the pixels reachable from the seed through 4-neighbours that
/// are both in the mask and continuous along the reference normal: the unprojected points
/// of two neighbours may differ by at most `step_fraction * depth` along it. Separates
/// raised surfaces that share the ground's orientation (table tops, box lids).
GroundMask ground_region(const ImageD& normals, const ImageD& depth, const splat::Camera& camera,
                         const Mask& seed, double angle_deg = kDefaultGroundAngleDeg,
                         double step_fraction = 0.02);

/// One frame's evidence for mask-based removal. `depth` (camera z, 0 = unknown) is optional;
/// when present a triangle only votes in frames where it is not occluded.
struct GroundView {
  splat::Camera camera;
  GroundMask ground;
  ImageD depth;
};

enum class GroundMethod { Mask, Vector, None };

GroundMethod parse_ground_method(const std::string& name);
std::string to_string(GroundMethod method);

struct GroundRemovalConfig {
  double angle_deg = kDefaultGroundAngleDeg;
  Vec3 up = Vec3::UnitZ();
  double height_quantile = 0.1;
  double height_band = 0.2;        // meters above the quantile still treated as ground
  double depth_tolerance = 0.2;    // meters, visibility test against GroundView::depth
  bool vector_fallback = true;     // use the vector path when no views are given
};

struct GroundRemovalResult {
  TriangleMesh mesh;
  std::vector<std::uint8_t> removed;  // per input face
  GroundMethod method_used = GroundMethod::None;
  std::size_t removed_count = 0;
};

/// A face is ground when its centroid lands in the ground mask in more than half of the
/// views that see it.
std::vector<std::uint8_t> ground_faces_by_mask(const TriangleMesh& mesh,
                                               const std::vector<GroundView>& views,
                                               const GroundRemovalConfig& cfg);

/// A face is ground when its normal is strictly within the angle of `up` and its centroid
/// height is at most the vertex-height quantile plus the band.
std::vector<std::uint8_t> ground_faces_by_vector(const TriangleMesh& mesh,
                                                 const GroundRemovalConfig& cfg);

/// Dispatches on `method`. With Mask and no views, falls back to Vector when allowed and
/// otherwise warns and returns the mesh unchanged.
GroundRemovalResult remove_ground(const TriangleMesh& mesh, GroundMethod method,
                                  const std::vector<GroundView>& views,
                                  const GroundRemovalConfig& cfg = {});

}  // namespace splatsim::mesh

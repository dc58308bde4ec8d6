#pragma once

#include <optional>
#include <vector>

#include "splatsim/mesh/ground.hpp"
#include "splatsim/mesh/tsdf.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::mesh {

struct ExtractConfig {
  double voxel = 0.1;
  double truncation = 0.4;
  double min_alpha = 0.5;         // rendered pixels below this coverage count as no depth
  GroundMethod ground_method = GroundMethod::Mask;
  GroundRemovalConfig ground;
  double seed_fraction = 0.2;     // bottom image rows seeding each frame's ground normal
  std::optional<Vec3> bounds_lo;  // default: observed surface points padded by truncation
  std::optional<Vec3> bounds_hi;
  long max_voxels = 64L * 1024 * 1024;
};

struct ExtractResult {
  TriangleMesh mesh;      // after ground removal
  TriangleMesh raw;       // straight from marching cubes
  GroundRemovalResult ground;
  std::array<int, 3> dims{0, 0, 0};
};

/// Coverage-normalized rendered depth (0 where alpha < min_alpha).
ImageD rendered_surface_depth(const splat::SplatSet& splats, const splat::Camera& camera,
                              double min_alpha, ImageD* normals_out = nullptr);

/// Renders every camera, fuses the depths into a TSDF, extracts the zero level set and
/// removes the ground.
ExtractResult extract_mesh(const splat::SplatSet& splats, const std::vector<splat::Camera>& cameras,
                           const ExtractConfig& cfg = {});

}  // namespace splatsim::mesh

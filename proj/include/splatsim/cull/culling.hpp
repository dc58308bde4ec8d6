#pragma once

#include <cstdint>
#include <vector>

#include "splatsim/splat/projection.hpp"

namespace splatsim::cull {

/// Screen-space covariance culling: a splat is dropped when the largest absolute entry of
/// its dilated 2D covariance exceeds alpha * (image width * height).
struct CullConfig {
  double alpha = 0.0005;
  bool enabled = true;
};

void validate(const CullConfig& cfg);

/// Threshold in squared pixels for a given camera.
double cull_threshold(const CullConfig& cfg, const splat::Camera& camera);

/// True if a projected splat should be culled.
bool should_cull(const splat::ProjectedSplat& ps, double threshold);

/// keep[i] == 0 iff splat i is culled. Splats behind the camera are kept (they are
/// skipped by the rasterizer for a different reason).
std::vector<std::uint8_t> cull_mask(const splat::SplatSet& splats, const splat::Camera& camera,
                                    const CullConfig& cfg);

/// Area in pixels of the 3-sigma ellipse of a projected splat's dilated covariance.
double footprint_area(const splat::ProjectedSplat& ps);

/// Agent-like view derived from a training view: focal lengths divided by `focal_divisor`
/// and the camera moved `drop` meters along -up, orientation unchanged.
splat::Camera stress_view(const splat::Camera& camera, const Vec3& up = Vec3::UnitZ(),
                          double focal_divisor = 1.5, double drop = 1.0);

}  // namespace splatsim::cull

#pragma once

#include <cstdint>
#include <vector>

#include "splatsim/data/frames.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::data {

/// `n` random splats inside the cube [-extent, extent]^3.
splat::SplatSet random_blob_scene(std::size_t n, double extent, std::uint64_t seed);

/// A square patch of the z = 0 plane tiled by thin splats with a procedural texture.
splat::SplatSet textured_plane_scene(double half_size, int per_side, std::uint64_t seed);

/// Camera-frame depth of the square |x|,|y| <= half_size on the z = 0 plane, 0 off the square.
ImageD plane_depth(const splat::Camera& camera, double half_size);

/// `count` cameras on a ring of `radius` around `target`, with heights alternating
/// between `height_lo` and `height_hi`. World up is +z.
std::vector<splat::Camera> orbit_cameras(int count, double radius, double height_lo,
                                         double height_hi, const Vec3& target, int width,
                                         int height, double focal);

/// Renders every camera into a frame. Depth is the alpha-normalized rendered depth where
/// alpha > 0.5 and 0 (unknown) elsewhere. Split: every 8th frame is test.
FrameDataset render_dataset(const splat::SplatSet& splats, const std::vector<splat::Camera>& cams,
                            const Vec3& background = Vec3::Zero());

/// Random perturbation of every parameter; `amount` scales all magnitudes (1 = default).
splat::SplatSet perturb(const splat::SplatSet& splats, double amount, std::uint64_t seed);

}  // namespace splatsim::data

#pragma once

#include <random>

#include "splatsim/common/image.hpp"
#include "splatsim/mesh/triangle_mesh.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::sim {

/// Composed RGB (3 channels) and camera depth (0 where nothing was hit).
struct ComposedFrame {
  ImageD color;
  ImageD depth;
};

/// Per-pixel z-buffer merge of a splat render with a foreground mesh layer. The splat
/// surface sits at depth / alpha where alpha >= min_alpha and is infinitely far elsewhere;
/// foreground pixels (depth > 0) win only when strictly nearer. Throws DimensionMismatch
/// unless every input shares one resolution.
ComposedFrame compose_frame(const ImageD& splat_color, const ImageD& splat_depth, const ImageD& splat_alpha,
                            const ImageD& fg_color, const ImageD& fg_depth, double min_alpha = 0.5);

/// Mesh with one flat color per face.
struct ColoredMesh {
  mesh::TriangleMesh mesh;
  std::vector<Vec3> face_colors;

  void append(const mesh::TriangleMesh& m, const Vec3& color);
};

/// Z-buffered render of a colored mesh with head-light shading; depth 0 where empty.
void render_colored(const ColoredMesh& layer, const splat::Camera& camera, ImageD& color, ImageD& depth);

struct CameraRig {
  int width = 128;
  int height = 72;
  double focal = 64.0;             // px, both axes
  double mount_height = 0.6;       // m above ground
  double mount_forward = 0.2;      // m ahead of the agent position
  double pitch_deg = 5.0;          // downward tilt
  double perturb_position = 0.01;  // m, uniform per axis
  double perturb_rotation_deg = 1.0;
};

void validate(const CameraRig& rig);

/// Offset in the camera frame and small rotation angles (rad) about the camera axes.
struct CameraPerturbation {
  Vec3 offset = Vec3::Zero();
  Vec3 angles = Vec3::Zero();
};

/// Zero-mean uniform noise bounded by the rig's perturbation magnitudes.
CameraPerturbation sample_perturbation(const CameraRig& rig, std::mt19937_64& rng);

/// Camera mounted on an agent at `position` with `heading` on the plane z = ground_z.
splat::Camera mount_camera(const CameraRig& rig, const Vec2& position, double heading, double ground_z,
                           const CameraPerturbation& perturbation = {});

/// Uniform double in [0, 1) built from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
/// Uniform integer in [lo, hi].
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace splatsim::sim

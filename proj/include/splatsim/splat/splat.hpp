#pragma once

#include <vector>

#include "splatsim/common/math.hpp"

namespace splatsim::splat {

/// One anisotropic Gaussian primitive. Rotation is a (w, x, y, z) quaternion; it is
/// normalized wherever it is consumed, so optimizers may hold it unnormalized.
struct Splat {
  Vec3 mean = Vec3::Zero();
  Vec4 rotation = Vec4(1, 0, 0, 0);
  Vec3 scales = Vec3::Ones();
  double opacity = 0.5;
  Vec3 color = Vec3::Constant(0.5);
};

struct SplatSet {
  std::vector<Splat> splats;

  [[nodiscard]] std::size_t size() const { return splats.size(); }
  [[nodiscard]] bool empty() const { return splats.empty(); }
  Splat& operator[](std::size_t i) { return splats[i]; }
  const Splat& operator[](std::size_t i) const { return splats[i]; }
};

/// Throws InvalidParameter if the splat violates the data-model invariants
/// (non-finite fields, non-positive scales, opacity outside (0,1), zero quaternion).
void validate(const Splat& s);

/// Rotation matrix of a quaternion after normalization.
Mat3 rotation_matrix(const Vec4& q);

/// Pinhole camera with an OpenCV-style frame: +x right, +y down, +z forward.
/// Pixel (x, y) covers [x, x+1) x [y, y+1); its center sits at (x + 0.5, y + 0.5).
struct Camera {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;
  Mat3 rotation = Mat3::Identity();     // world -> camera
  Vec3 translation = Vec3::Zero();      // world -> camera

  [[nodiscard]] Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  [[nodiscard]] Vec3 center() const { return -rotation.transpose() * translation; }
  [[nodiscard]] Mat4 world_to_camera() const;
  void set_world_to_camera(const Mat4& m);
  [[nodiscard]] double image_area() const { return static_cast<double>(width) * height; }

  /// Camera at `eye` looking at `target`; `up` is the world up direction.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                        int width, int height);
};

/// Throws InvalidParameter if intrinsics are non-positive or the rotation is not orthonormal.
void validate(const Camera& cam);

}  // namespace splatsim::splat

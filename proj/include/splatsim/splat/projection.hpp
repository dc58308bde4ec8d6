#pragma once

#include <optional>

#include "splatsim/splat/splat.hpp"

namespace splatsim::splat {

/// Splats whose camera-frame depth is at or below this are skipped.
inline constexpr double kNearPlane = 0.01;
/// Isotropic floor added to every screen-space covariance before inversion.
inline constexpr double kCovarianceDilation = 0.3;
/// Per-pixel contributions below this alpha are not composited. Tile binning uses the
/// matching opacity-aware radius, so the cut introduces at most a 1e-8 step per pixel.
inline constexpr double kMinAlpha = 1e-8;

/// R S S^T R^T for a (normalized) quaternion and per-axis scales.
Mat3 build_covariance(const Vec4& rotation, const Vec3& scales);

/// J W Sigma W^T J^T without dilation; nullopt when the mean is not in front of the near plane.
std::optional<Mat2> project_covariance(const Splat& splat, const Camera& camera);

/// Perspective Jacobian of (u, v) with respect to a camera-frame point.
Mat23 projection_jacobian(const Vec3& p_cam, const Camera& camera);

/// exp(-1/2 d^T cov^-1 d) with d = pixel - mean. Throws DegenerateSplat for singular cov.
double gaussian_weight(const Vec2& mean, const Mat2& cov2d, const Vec2& pixel);

/// Everything the rasterizer and its backward pass need about one splat in one view.
struct ProjectedSplat {
  bool visible = false;
  Vec3 p_cam = Vec3::Zero();
  Vec2 mean2d = Vec2::Zero();
  Mat3 rot = Mat3::Identity();
  Mat3 cov_cam = Mat3::Zero();   // W Sigma W^T
  Mat23 jacobian = Mat23::Zero();
  Mat2 cov2d = Mat2::Zero();     // dilated
  Vec3 conic = Vec3::Zero();     // (a, b, c) of the inverse dilated covariance
  double depth = 0;              // camera-frame z
  Vec3 normal = Vec3::Zero();    // camera frame, facing the camera
  int normal_axis = 0;           // index of the shortest scale axis
  double normal_sign = 1;
  double opacity = 0;
  Vec3 color = Vec3::Zero();
  double radius = 0;             // screen-space binning radius in pixels
};

/// Projects a splat; `visible` is false for splats behind the near plane or too faint.
ProjectedSplat project_splat(const Splat& splat, const Camera& camera);

/// Radius (pixels) beyond which o * G(x) < kMinAlpha, for a dilated covariance.
double influence_radius(const Mat2& cov2d, double opacity);

/// Max absolute entry of a 2x2 matrix.
inline double max_norm(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace splatsim::splat

#include "splatsim/splat/projection.hpp"

#include "splatsim/common/error.hpp"

namespace splatsim::splat {

Mat3 build_covariance(const Vec4& rotation, const Vec3& scales) {
  if (!rotation.allFinite() || !scales.allFinite())
    throw InvalidParameter("build_covariance: non-finite input");
  if (rotation.norm() < 1e-12) throw InvalidParameter("build_covariance: zero quaternion");
  const Mat3 m = rotation_matrix(rotation) * scales.asDiagonal();
  return m * m.transpose();
}

Mat23 projection_jacobian(const Vec3& p, const Camera& cam) {
  const double iz = 1.0 / p.z();
  Mat23 j;
  j << cam.fx * iz, 0, -cam.fx * p.x() * iz * iz,
      0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
  return j;
}

std::optional<Mat2> project_covariance(const Splat& splat, const Camera& cam) {
  const Vec3 p = cam.to_camera(splat.mean);
  if (!(p.z() > kNearPlane)) return std::nullopt;
  const Mat3 cov_cam = cam.rotation * build_covariance(splat.rotation, splat.scales) *
                       cam.rotation.transpose();
  const Mat23 j = projection_jacobian(p, cam);
  return Mat2(j * cov_cam * j.transpose());
}

double gaussian_weight(const Vec2& mean, const Mat2& cov, const Vec2& pixel) {
  const double det = cov.determinant();
  if (!std::isfinite(det) || det <= 1e-12)
    throw DegenerateSplat("gaussian_weight: singular 2D covariance");
  const Vec2 d = pixel - mean;
  return std::exp(-0.5 * d.dot(cov.inverse() * d));
}

double influence_radius(const Mat2& cov2d, double opacity) {
  if (opacity <= kMinAlpha) return 0.0;
  const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
  const double det = cov2d.determinant();
  const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
  return std::sqrt(lambda_max * 2.0 * std::log(opacity / kMinAlpha));
}

ProjectedSplat project_splat(const Splat& s, const Camera& cam) {
  ProjectedSplat ps;
  ps.p_cam = cam.to_camera(s.mean);
  ps.depth = ps.p_cam.z();
  ps.opacity = s.opacity;
  ps.color = s.color;
  if (!(ps.depth > kNearPlane) || s.opacity <= kMinAlpha) return ps;

  ps.rot = rotation_matrix(s.rotation);
  const Mat3 m = ps.rot * s.scales.asDiagonal();
  ps.cov_cam = cam.rotation * (m * m.transpose()) * cam.rotation.transpose();
  ps.jacobian = projection_jacobian(ps.p_cam, cam);
  ps.cov2d = ps.jacobian * ps.cov_cam * ps.jacobian.transpose();
  ps.cov2d(0, 0) += kCovarianceDilation;
  ps.cov2d(1, 1) += kCovarianceDilation;
  const double det = ps.cov2d.determinant();
  if (!std::isfinite(det) || det <= 0) return ps;
  ps.conic = Vec3(ps.cov2d(1, 1) / det, -ps.cov2d(0, 1) / det, ps.cov2d(0, 0) / det);

  const double iz = 1.0 / ps.depth;
  ps.mean2d = Vec2(cam.fx * ps.p_cam.x() * iz + cam.cx, cam.fy * ps.p_cam.y() * iz + cam.cy);

  s.scales.minCoeff(&ps.normal_axis);
  const Vec3 n = cam.rotation * ps.rot.col(ps.normal_axis);
  ps.normal_sign = n.dot(ps.p_cam) > 0 ? -1.0 : 1.0;
  ps.normal = ps.normal_sign * n;

  ps.radius = influence_radius(ps.cov2d, s.opacity);
  ps.visible = ps.radius > 0 && ps.mean2d.allFinite();
  return ps;
}

}  // namespace splatsim::splat

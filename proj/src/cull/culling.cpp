#include "splatsim/cull/culling.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/common/error.hpp"

namespace splatsim::cull {

void validate(const CullConfig& cfg) {
  if (!(cfg.alpha > 0) || !std::isfinite(cfg.alpha))
    throw InvalidParameter("cull alpha must be positive");
}

double cull_threshold(const CullConfig& cfg, const splat::Camera& camera) {
  return cfg.alpha * camera.image_area();
}

bool should_cull(const splat::ProjectedSplat& ps, double threshold) {
  return splat::max_norm(ps.cov2d) > threshold;
}

std::vector<std::uint8_t> cull_mask(const splat::SplatSet& splats, const splat::Camera& camera,
                                    const CullConfig& cfg) {
  std::vector<std::uint8_t> keep(splats.size(), 1);
  if (!cfg.enabled) return keep;
  validate(cfg);
  const double threshold = cull_threshold(cfg, camera);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const auto ps = splat::project_splat(splats[i], camera);
    if (ps.depth > splat::kNearPlane && should_cull(ps, threshold)) keep[i] = 0;
  }
  return keep;
}

double footprint_area(const splat::ProjectedSplat& ps) {
  return kPi * 9.0 * std::sqrt(std::max(0.0, ps.cov2d.determinant()));
}

splat::Camera stress_view(const splat::Camera& camera, const Vec3& up, double focal_divisor,
                          double drop) {
  if (!(focal_divisor > 0)) throw InvalidParameter("stress_view: focal divisor must be positive");
  splat::Camera out = camera;
  out.fx /= focal_divisor;
  out.fy /= focal_divisor;
  const Vec3 center = camera.center() - drop * up.normalized();
  out.translation = -camera.rotation * center;
  return out;
}

}  // namespace splatsim::cull

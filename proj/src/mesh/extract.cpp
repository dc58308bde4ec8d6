#include "splatsim/mesh/extract.hpp"

#include <limits>

#include "splatsim/common/error.hpp"
#include "splatsim/splat/rasterizer.hpp"

namespace splatsim::mesh {

ImageD rendered_surface_depth(const splat::SplatSet& splats, const splat::Camera& camera,
                              double min_alpha, ImageD* normals_out) {
  const auto r = splat::rasterize(splats, camera);
  ImageD depth(camera.width, camera.height, 1, 0.0);
  for (std::size_t i = 0; i < depth.pixels(); ++i) {
    const double a = r.alpha.data[i];
    if (a >= min_alpha && a > 0) depth.data[i] = r.depth.data[i] / a;
  }
  if (normals_out) *normals_out = r.normal;
  return depth;
}

ExtractResult extract_mesh(const splat::SplatSet& splats, const std::vector<splat::Camera>& cameras,
                           const ExtractConfig& cfg) {
  if (cameras.empty()) throw InvalidParameter("extract_mesh: no cameras");
  std::vector<ImageD> depths, normals(cameras.size());
  for (std::size_t k = 0; k < cameras.size(); ++k)
    depths.push_back(rendered_surface_depth(splats, cameras[k], cfg.min_alpha, &normals[k]));

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    const auto& cam = cameras[k];
    const Mat3 to_world = cam.rotation.transpose();
    const Vec3 center = cam.center();
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const double d = depths[k].at(x, y);
        if (!(d > 0)) continue;
        const Vec3 p = center + to_world * Vec3(d * (x + 0.5 - cam.cx) / cam.fx, d * (y + 0.5 - cam.cy) / cam.fy, d);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
  }
  ExtractResult out;
  if (cfg.bounds_lo) lo = *cfg.bounds_lo;
  if (cfg.bounds_hi) hi = *cfg.bounds_hi;
  if (!lo.allFinite() || !hi.allFinite()) {
    // Nothing observed: marching cubes reports the empty result.
    lo = hi = Vec3::Zero();
  } else if (!cfg.bounds_lo || !cfg.bounds_hi) {
    lo.array() -= cfg.truncation;
    hi.array() += cfg.truncation;
  }
  const Vec3 extent = (hi - lo) / cfg.voxel;
  if ((extent.array() + 2).prod() > static_cast<double>(cfg.max_voxels))
    throw InvalidParameter("extract_mesh: volume exceeds max_voxels; increase the voxel size");
  auto volume = TsdfVolume::covering(lo, hi, cfg.voxel, cfg.truncation);
  out.dims = volume.dims();
  for (std::size_t k = 0; k < cameras.size(); ++k) tsdf_integrate(volume, depths[k], cameras[k]);
  out.raw = marching_cubes(volume);

  std::vector<GroundView> views;
  if (cfg.ground_method == GroundMethod::Mask && !out.raw.empty()) {
    for (std::size_t k = 0; k < cameras.size(); ++k) {
      const auto seed = bottom_rows_seed(cameras[k].width, cameras[k].height, cfg.seed_fraction);
      try {
        views.push_back({cameras[k], ground_region(normals[k], depths[k], cameras[k], seed, cfg.ground.angle_deg), depths[k]});
      } catch (const EmptySupport&) {
        // Frame with nothing rendered in its seed rows carries no ground evidence.
      }
    }
  }
  if (out.raw.empty()) {
    out.ground.method_used = cfg.ground_method;
    out.mesh = out.raw;
    return out;
  }
  out.ground = remove_ground(out.raw, cfg.ground_method, views, cfg.ground);
  out.mesh = out.ground.mesh;
  return out;
}

}  // namespace splatsim::mesh

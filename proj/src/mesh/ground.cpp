#include "splatsim/mesh/ground.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/common/error.hpp"
#include "splatsim/common/log.hpp"

namespace splatsim::mesh {
namespace {

void check_angle(double angle_deg) {
  if (!(angle_deg > 0 && angle_deg < 90)) throw InvalidParameter("ground angle must lie in (0, 90) degrees");
}

}  // namespace

Mask bottom_rows_seed(int width, int height, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw InvalidParameter("seed fraction must lie in (0, 1]");
  Mask seed(width, height, 1, 0);
  const int rows = std::max(1, static_cast<int>(std::lround(fraction * height)));
  for (int y = height - rows; y < height; ++y)
    for (int x = 0; x < width; ++x) seed.at(x, y) = 1;
  return seed;
}

GroundMask ground_mask(const ImageD& normals, const Mask& seed, double angle_deg) {
  check_angle(angle_deg);
  if (normals.channels != 3) throw DimensionMismatch("ground_mask: normal map must have 3 channels");
  require_same_size(normals, seed, "ground_mask seed");
  const auto unit_at = [&](int x, int y, Vec3& out) {
    const Vec3 n(normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2));
    const double len = n.norm();
    if (!(len > 0) || !std::isfinite(len)) return false;
    out = n / len;
    return true;
  };
  Vec3 sum = Vec3::Zero();
  std::size_t count = 0;
  for (int y = 0; y < normals.height; ++y)
    for (int x = 0; x < normals.width; ++x) {
      Vec3 n;
      if (seed.at(x, y) && unit_at(x, y, n)) {
        sum += n;
        ++count;
      }
    }
  if (count == 0 || !(sum.norm() > 0)) throw EmptySupport("ground_mask: seed region has no usable normals");
  GroundMask g;
  g.reference = sum.normalized();
  g.angle_deg = angle_deg;
  g.mask = Mask(normals.width, normals.height, 1, 0);
  const double cos_limit = std::cos(deg2rad(angle_deg));
  for (int y = 0; y < normals.height; ++y)
    for (int x = 0; x < normals.width; ++x) {
      Vec3 n;
      // angle < limit  <=>  cos(angle) > cos(limit)
      if (unit_at(x, y, n) && n.dot(g.reference) > cos_limit) g.mask.at(x, y) = 1;
    }
  return g;
}

GroundMask ground_region(const ImageD& normals, const ImageD& depth, const splat::Camera& camera,
                         const Mask& seed, double angle_deg, double step_fraction) {
  require_same_size(normals, depth, "ground_region depth");
  if (!(step_fraction > 0)) throw InvalidParameter("ground_region: step fraction must be positive");
  GroundMask g = ground_mask(normals, seed, angle_deg);
  const int w = normals.width, h = normals.height;
  // Reference normal is in the camera frame, as are the unprojected points.
  const auto point = [&](int x, int y) {
    const double d = depth.at(x, y);
    return Vec3(d * (x + 0.5 - camera.cx) / camera.fx, d * (y + 0.5 - camera.cy) / camera.fy, d);
  };
  const auto usable = [&](int x, int y) { return g.mask.at(x, y) && depth.at(x, y) > 0; };
  Mask region(w, h, 1, 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (seed.at(x, y) && usable(x, y)) {
        region.at(x, y) = 1;
        stack.emplace_back(x, y);
      }
  constexpr int kDx[4] = {1, -1, 0, 0}, kDy[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    const Vec3 p = point(x, y);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || region.at(nx, ny) || !usable(nx, ny)) continue;
      const Vec3 q = point(nx, ny);
      if (std::abs(g.reference.dot(q - p)) > step_fraction * std::max(p.z(), q.z())) continue;
      region.at(nx, ny) = 1;
      stack.emplace_back(nx, ny);
    }
  }
  g.mask = std::move(region);
  return g;
}

GroundMethod parse_ground_method(const std::string& name) {
  if (name == "mask") return GroundMethod::Mask;
  if (name == "vector") return GroundMethod::Vector;
  if (name == "none") return GroundMethod::None;
  throw InvalidParameter("unknown ground removal method: " + name);
}

std::string to_string(GroundMethod method) {
  switch (method) {
    case GroundMethod::Mask: return "mask";
    case GroundMethod::Vector: return "vector";
    case GroundMethod::None: return "none";
  }
  return "none";
}

std::vector<std::uint8_t> ground_faces_by_mask(const TriangleMesh& mesh,
                                               const std::vector<GroundView>& views,
                                               const GroundRemovalConfig& cfg) {
  std::vector<std::uint8_t> ground(mesh.faces.size(), 0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 c = mesh.centroid(f);
    int seen = 0, votes = 0;
    for (const auto& view : views) {
      const auto& cam = view.camera;
      const Vec3 p = cam.to_camera(c);
      if (!(p.z() > 0)) continue;
      const double u = cam.fx * p.x() / p.z() + cam.cx, v = cam.fy * p.y() / p.z() + cam.cy;
      if (!(u >= 0 && v >= 0 && u < cam.width && v < cam.height)) continue;
      const int px = static_cast<int>(u), py = static_cast<int>(v);
      if (!view.depth.empty()) {
        const double d = view.depth.at(px, py);
        if (!(d > 0) || p.z() > d + cfg.depth_tolerance) continue;
      }
      ++seen;
      if (view.ground.mask.at(px, py)) ++votes;
    }
    ground[f] = seen > 0 && 2 * votes > seen;
  }
  return ground;
}

std::vector<std::uint8_t> ground_faces_by_vector(const TriangleMesh& mesh,
                                                 const GroundRemovalConfig& cfg) {
  check_angle(cfg.angle_deg);
  if (!(cfg.up.norm() > 0)) throw InvalidParameter("ground up vector must be non-zero");
  if (!(cfg.height_quantile >= 0 && cfg.height_quantile <= 1))
    throw InvalidParameter("ground height quantile must lie in [0, 1]");
  std::vector<std::uint8_t> ground(mesh.faces.size(), 0);
  if (mesh.vertices.empty()) return ground;
  const Vec3 up = cfg.up.normalized();
  std::vector<double> heights;
  heights.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) heights.push_back(up.dot(v));
  const auto nth = heights.begin() +
                   static_cast<std::ptrdiff_t>(std::floor(cfg.height_quantile * (heights.size() - 1)));
  std::nth_element(heights.begin(), nth, heights.end());
  const double limit = *nth + cfg.height_band;
  const double cos_limit = std::cos(deg2rad(cfg.angle_deg));
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    ground[f] = mesh.face_normal(f).dot(up) > cos_limit && up.dot(mesh.centroid(f)) <= limit;
  return ground;
}

GroundRemovalResult remove_ground(const TriangleMesh& mesh, GroundMethod method,
                                  const std::vector<GroundView>& views,
                                  const GroundRemovalConfig& cfg) {
  GroundRemovalResult r;
  r.removed.assign(mesh.faces.size(), 0);
  if (method == GroundMethod::Mask && views.empty()) {
    if (cfg.vector_fallback) {
      method = GroundMethod::Vector;
    } else {
      warn("remove_ground: no ground masks and vector fallback disabled; mesh left unchanged");
      method = GroundMethod::None;
    }
  }
  if (method == GroundMethod::Mask) r.removed = ground_faces_by_mask(mesh, views, cfg);
  if (method == GroundMethod::Vector) r.removed = ground_faces_by_vector(mesh, cfg);
  r.method_used = method;
  r.removed_count = static_cast<std::size_t>(std::count(r.removed.begin(), r.removed.end(), 1));
  if (r.removed_count == 0) {
    r.mesh = mesh;
    return r;
  }
  std::vector<std::uint8_t> keep(r.removed.size());
  for (std::size_t f = 0; f < keep.size(); ++f) keep[f] = !r.removed[f];
  r.mesh = mesh.subset(keep);
  return r;
}

}  // namespace splatsim::mesh

#include "splatsim/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "splatsim/common/error.hpp"
#include "splatsim/splat/rasterizer.hpp"

namespace splatsim::data {
namespace {

Vec4 random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  return Vec4(n(rng), n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

splat::SplatSet random_blob_scene(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  splat::SplatSet set;
  for (std::size_t i = 0; i < n; ++i) {
    splat::Splat s;
    s.mean = extent * Vec3(2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1);
    s.rotation = random_unit_quaternion(rng);
    s.scales = extent * Vec3(0.08 + 0.17 * u(rng), 0.08 + 0.17 * u(rng), 0.04 + 0.1 * u(rng));
    s.opacity = 0.55 + 0.4 * u(rng);
    s.color = Vec3(u(rng), u(rng), u(rng));
    set.splats.push_back(s);
  }
  return set;
}

splat::SplatSet textured_plane_scene(double half_size, int per_side, std::uint64_t seed) {
  if (per_side < 1) throw InvalidParameter("textured_plane_scene: per_side must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  splat::SplatSet set;
  const double step = 2 * half_size / per_side;
  for (int j = 0; j < per_side; ++j)
    for (int i = 0; i < per_side; ++i) {
      splat::Splat s;
      s.mean = Vec3(-half_size + (i + 0.5) * step, -half_size + (j + 0.5) * step, 0);
      s.rotation = Vec4(1, 0, 0, 0);
      s.scales = Vec3(0.7 * step, 0.7 * step, 0.002);
      s.opacity = 0.95;
      const double checker = ((i / 2 + j / 2) % 2) ? 0.8 : 0.25;
      s.color = Vec3(checker * (0.7 + 0.3 * u(rng)), 0.5 * u(rng) + 0.25, 1 - checker * u(rng));
      set.splats.push_back(s);
    }
  return set;
}

ImageD plane_depth(const splat::Camera& cam, double half_size) {
  ImageD depth(cam.width, cam.height, 1);
  const Vec3 center = cam.center();
  const Mat3 to_world = cam.rotation.transpose();
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      // Ray with unit camera-frame z, so the hit parameter is the camera-frame depth.
      const Vec3 dir = to_world * Vec3((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1);
      if (std::abs(dir.z()) < 1e-12) continue;
      const double t = -center.z() / dir.z();
      const Vec3 hit = center + t * dir;
      if (t > 0 && std::abs(hit.x()) <= half_size && std::abs(hit.y()) <= half_size)
        depth.at(x, y) = t;
    }
  return depth;
}

std::vector<splat::Camera> orbit_cameras(int count, double radius, double height_lo,
                                         double height_hi, const Vec3& target, int width,
                                         int height, double focal) {
  std::vector<splat::Camera> cams;
  for (int k = 0; k < count; ++k) {
    const double a = 2 * kPi * k / count;
    const double h = (k % 2) ? height_hi : height_lo;
    const Vec3 eye = target + Vec3(radius * std::cos(a), radius * std::sin(a), h);
    cams.push_back(splat::Camera::look_at(eye, target, Vec3::UnitZ(), focal, focal, width, height));
  }
  return cams;
}

FrameDataset render_dataset(const splat::SplatSet& splats, const std::vector<splat::Camera>& cams,
                            const Vec3& background) {
  FrameDataset ds;
  splat::RenderOptions opts;
  opts.background = background;
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const auto r = splat::rasterize(splats, cams[k], opts);
    Frame f;
    f.name = "frame_" + std::to_string(k);
    f.camera = cams[k];
    f.image = r.color;
    for (auto& v : f.image.data) v = std::clamp(v, 0.0, 1.0);
    f.depth = ImageD(r.depth.width, r.depth.height, 1);
    for (std::size_t i = 0; i < r.depth.pixels(); ++i)
      f.depth.data[i] = r.alpha.data[i] > 0.5 ? r.depth.data[i] / r.alpha.data[i] : 0.0;
    ds.frames.push_back(std::move(f));
  }
  ds.split_every(8);
  return ds;
}

splat::SplatSet perturb(const splat::SplatSet& splats, double amount, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  splat::SplatSet out = splats;
  for (auto& s : out.splats) {
    const double size = s.scales.maxCoeff();
    s.mean += amount * 0.5 * size * Vec3(n(rng), n(rng), n(rng));
    s.rotation = (s.rotation.normalized() + amount * 0.3 * Vec4(n(rng), n(rng), n(rng), n(rng)))
                     .normalized();
    for (int c = 0; c < 3; ++c) s.scales[c] *= std::exp(amount * 0.3 * n(rng));
    s.opacity = std::clamp(s.opacity + amount * 0.15 * n(rng), 0.05, 0.95);
    for (int c = 0; c < 3; ++c) s.color[c] = std::clamp(s.color[c] + amount * 0.2 * n(rng), 0.0, 1.0);
  }
  return out;
}

}  // namespace splatsim::data

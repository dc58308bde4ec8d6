#include "splatsim/sim/demo.hpp"

#include <cmath>
#include <random>

#include "splatsim/common/error.hpp"
#include "splatsim/optim/trainer.hpp"

namespace splatsim::sim {
namespace {

constexpr double kSpacing = 0.3;
constexpr double kWallHeight = 2.0;
constexpr double kWallThickness = 0.3;

splat::Splat flat_splat(const Vec3& at, const Vec4& rotation, const Vec3& color) {
  splat::Splat s;
  s.mean = at;
  s.rotation = rotation;
  s.scales = Vec3(0.6 * kSpacing, 0.6 * kSpacing, 0.01);
  s.opacity = 0.95;
  s.color = color;
  return s;
}

}  // namespace

DemoScene make_corridor(double length, double width, std::uint64_t seed) {
  if (!(length > 0) || !(width > 0)) throw InvalidParameter("corridor dimensions must be positive");
  std::mt19937_64 rng(seed);
  DemoScene demo;
  const double hx = length / 2, hy = width / 2;
  const double wall_y = hy + kWallThickness;

  // Ground: checker tiles with noise.
  const Vec4 flat(1, 0, 0, 0);
  for (double x = -hx; x <= hx + 1e-9; x += kSpacing)
    for (double y = -wall_y; y <= wall_y + 1e-9; y += kSpacing) {
      const bool dark = (static_cast<int>(std::floor(x)) + static_cast<int>(std::floor(y))) % 2 == 0;
      const double base = dark ? 0.35 : 0.55;
      const double n = 0.08 * uniform(rng, -1.0, 1.0);
      demo.splats.splats.push_back(flat_splat(Vec3(x, y, 0), flat, Vec3(base + n, base + n * 0.8, base * 0.9 + n)));
    }
  // Walls: splats in the x-z plane, brick-like bands.
  const double s = std::sqrt(0.5);
  const Vec4 upright(s, s, 0, 0);  // 90 degrees about x: local z -> world -y
  for (const double side : {-1.0, 1.0})
    for (double x = -hx; x <= hx + 1e-9; x += kSpacing)
      for (double z = kSpacing / 2; z <= kWallHeight; z += kSpacing) {
        const bool band = static_cast<int>(std::floor(z / 0.6)) % 2 == 0;
        const Vec3 color = band ? Vec3(0.7, 0.35, 0.25) : Vec3(0.8, 0.75, 0.65);
        const double n = 0.06 * uniform(rng, -1.0, 1.0);
        demo.splats.splats.push_back(flat_splat(Vec3(x, side * wall_y, z), upright, color + Vec3::Constant(n)));
      }

  // Collision: long side walls plus end caps, all outside the walkable rectangle.
  const auto wall = [&](const Vec3& center, const Vec3& half) {
    auto box = make_box(half);
    box.transform(Mat3::Identity(), center);
    demo.collision.append(box);
  };
  wall(Vec3(0, hy + kWallThickness / 2, 0), Vec3(hx + kWallThickness, kWallThickness / 2, kWallHeight / 2));
  wall(Vec3(0, -hy - kWallThickness / 2, 0), Vec3(hx + kWallThickness, kWallThickness / 2, kWallHeight / 2));
  wall(Vec3(hx + kWallThickness / 2, 0, 0), Vec3(kWallThickness / 2, hy, kWallHeight / 2));
  wall(Vec3(-hx - kWallThickness / 2, 0, 0), Vec3(kWallThickness / 2, hy, kWallHeight / 2));
  demo.collision.compute_normals();

  auto& cfg = demo.config;
  cfg.walkable.vertices = {Vec2(-hx, -hy), Vec2(hx, -hy), Vec2(hx, hy), Vec2(-hx, hy)};
  cfg.spawn.max_obstacles = 0;
  cfg.pedestrians.count = 0;
  return demo;
}

std::filesystem::path write_demo(const DemoScene& demo, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SceneConfig cfg = demo.config;
  optim::save_checkpoint((dir / "splats.ckpt").string(), demo.splats);
  mesh::write_obj((dir / "collision.obj").string(), demo.collision);
  cfg.splats_path = "splats.ckpt";
  cfg.mesh_path = "collision.obj";
  const auto path = dir / "scene.json";
  save_scene_config(path, cfg);
  return path;
}

}  // namespace splatsim::sim

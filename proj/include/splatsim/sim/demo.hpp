#pragma once

#include <cstdint>
#include <filesystem>

#include "splatsim/sim/scene.hpp"

namespace splatsim::sim {

struct DemoScene {
  SceneConfig config;
  splat::SplatSet splats;
  mesh::TriangleMesh collision;
};

/// Straight corridor along +x centered on the origin: textured ground and wall splats,
/// wall boxes as collision geometry, and a walkable rectangle between the walls.
DemoScene make_corridor(double length = 40.0, double width = 6.0, std::uint64_t seed = 1);

/// Writes scene.json, splats.ckpt and collision.obj into `dir`; returns the config path.
std::filesystem::path write_demo(const DemoScene& demo, const std::filesystem::path& dir);

}  // namespace splatsim::sim

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "splatsim/cull/culling.hpp"
#include "splatsim/sim/assets.hpp"
#include "splatsim/sim/collision.hpp"
#include "splatsim/sim/dynamics.hpp"
#include "splatsim/sim/grid.hpp"
#include "splatsim/sim/render.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::sim {

/// Vertical extent of the agent body above the ground; the rounded ends reach one radius
/// beyond z_lo and z_hi.
struct BodyParams {
  double z_lo = 0.45;
  double z_hi = 0.8;
};

struct SpawnParams {
  double min_separation = 10.0;  // m
  double max_separation = 30.0;  // m
  int min_obstacles = 0;
  int max_obstacles = 5;
  int max_attempts = 1000;
  double path_t_lo = 0.2;        // obstacle placement window along the start-goal path
  double path_t_hi = 0.8;
  double lateral = 1.0;          // m, uniform offset across the path
  double heading_jitter_deg = 30.0;
};

struct PedestrianParams {
  int count = 4;  // SocialNav only
  double radius = 0.25;
  double height = 1.7;
  double speed_lo = 0.5;
  double speed_hi = 1.2;
  double heading_gain = 4.0;  // 1/s
  double min_start_distance = 2.0;  // m from the agent at spawn
};

struct RewardWeights {
  double dist = 1.0;
  double steer = 0.05;
  double crash = 1.0;
  double time = 0.1;
  double terminal = 10.0;
};

struct EpisodeParams {
  int max_steps = 3000;
  double success_radius = 0.5;
  int max_collisions = 3;
  double social_radius = 0.5;  // m of free space between agent and pedestrian discs
  RewardWeights weights;
};

struct SceneConfig {
  std::string splats_path;  // checkpoint; empty = no splats
  std::string mesh_path;    // collision mesh (.obj or binary sidecar); empty = none
  Polygon walkable;
  double ground_z = 0.0;
  double grid_cell = 0.25;
  std::vector<ObstacleAsset> obstacles = builtin_obstacles();
  Vec3 background = Vec3(0.6, 0.7, 0.85);
  double cull_alpha = cull::CullConfig{}.alpha;  // <= 0 disables culling
  VehicleParams vehicle;
  BodyParams body;
  CameraRig camera;
  SpawnParams spawn;
  PedestrianParams pedestrians;
  EpisodeParams episode;
};

void validate(const SceneConfig& cfg);

/// Reads a JSON scene config. Relative asset paths resolve against the file's directory.
/// Throws IoError on unreadable or malformed files, InvalidParameter on invalid values.
SceneConfig load_scene_config(const std::filesystem::path& path);
/// Writes `cfg` as JSON; asset paths are stored as given.
void save_scene_config(const std::filesystem::path& path, const SceneConfig& cfg);

/// Immutable assets shared by every environment instance on the scene.
struct Scene {
  SceneConfig config;
  splat::SplatSet splats;
  std::shared_ptr<const CollisionIndex> collision;  // static scene geometry
  WalkableGrid agent_grid;       // cells where the agent body fits, ignoring episode obstacles
  WalkableGrid pedestrian_grid;  // same for a pedestrian body
  double diameter = 0;           // of the walkable polygon

  [[nodiscard]] BodySweep agent_body(const Vec2& from, const Vec2& to) const;
  [[nodiscard]] BodySweep pedestrian_body(const Vec2& at) const;
};

/// Builds the scene from in-memory assets.
std::shared_ptr<const Scene> make_scene(SceneConfig cfg, splat::SplatSet splats, mesh::TriangleMesh collision);
/// Loads the checkpoint and collision mesh named by `cfg`.
std::shared_ptr<const Scene> load_scene(const SceneConfig& cfg);

}  // namespace splatsim::sim

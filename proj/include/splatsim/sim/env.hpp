#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "splatsim/common/error.hpp"
#include "splatsim/sim/reward.hpp"
#include "splatsim/sim/scene.hpp"

namespace splatsim::sim {

/// No episode layout satisfied the spawn constraints within the attempt budget.
class SpawnFailure : public Error {
 public:
  using Error::Error;
};

enum class Task { PointNav, SocialNav };
Task parse_task(const std::string& s);  // "pointnav" | "socialnav"
std::string to_string(Task t);

inline constexpr int kFrameStack = 6;

using FramePtr = std::shared_ptr<const ImageD>;

struct Observation {
  std::vector<FramePtr> frames;  // kFrameStack RGB frames in [0, 1], oldest first; shared, immutable
  Vec2 goal = Vec2::Zero();    // distance (m), bearing in the agent frame (rad, (-pi, pi])
};

struct PedestrianState {
  Vec2 position = Vec2::Zero();
  double heading = 0;
  double speed = 1.0;
  std::vector<Vec2> waypoints;  // cell centers still to visit
  std::size_t next = 0;
  Vec3 color = Vec3::Constant(0.5);
};

struct EpisodeState {
  std::uint64_t seed = 0;
  AgentState agent;
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  std::vector<PlacedObstacle> obstacles;
  std::vector<PedestrianState> pedestrians;
  int steps = 0;
  int collisions = 0;           // control steps with any contact
  int social_violations = 0;    // control steps with a pedestrian inside the social radius
  double path_length = 0;       // traveled, m
  double shortest_path = 0;     // grid shortest path start -> goal without obstacles, m
  double separation_scale = 1;  // < 1 when the region forced shorter start-goal separation
  double episode_return = 0;
  RewardBreakdown last_reward;
  bool last_contact = false;
  TerminalReason reason = TerminalReason::None;
  bool done = false;
};

struct StepResult {
  Observation observation;
  double reward = 0;
  RewardBreakdown breakdown;
  bool terminated = false;
  bool truncated = false;
};

struct EnvOptions {
  Task task = Task::PointNav;
  bool render = true;  // observations keep their shape but stay black when false
};

/// One navigation episode at a time on a shared immutable scene. Not thread-safe; use one
/// instance per worker.
class NavEnv {
 public:
  NavEnv(std::shared_ptr<const Scene> scene, EnvOptions options = {});

  /// Spawns a new episode; deterministic in `seed`. Throws SpawnFailure.
  Observation reset(std::uint64_t seed);
  /// Episode with a fixed start pose and goal and no static obstacles; pedestrians still
  /// follow the task. Throws InvalidParameter if start or goal is outside the walkable region.
  Observation reset_at(std::uint64_t seed, const Vec2& start, double heading, const Vec2& goal);
  /// One control step (vehicle substeps with collision checks). Throws ProtocolError before
  /// the first reset or after a terminal step.
  StepResult step(const Action& action);
  /// Composed RGB and depth from the current camera pose. Throws ProtocolError before reset.
  [[nodiscard]] ComposedFrame render() const;

  [[nodiscard]] bool started() const { return started_; }
  [[nodiscard]] bool live() const { return started_ && !state_.done; }
  [[nodiscard]] const EpisodeState& state() const { return state_; }
  [[nodiscard]] const Scene& scene() const { return *scene_; }
  [[nodiscard]] const EnvOptions& options() const { return options_; }
  [[nodiscard]] const CollisionIndex& obstacle_index() const { return obstacles_; }
  [[nodiscard]] Vec2 goal_vector() const;
  [[nodiscard]] Observation observation() const;
  [[nodiscard]] const splat::Camera& camera() const { return camera_; }

  /// Agent grid with episode obstacles blocked. A positive `margin` also keeps that much
  /// extra clearance from scene geometry and the region boundary.
  [[nodiscard]] WalkableGrid planning_grid(double margin = 0.0) const;
  /// Pedestrian grid with episode obstacles blocked.
  [[nodiscard]] const WalkableGrid& pedestrian_grid() const { return ped_grid_; }

 private:
  void spawn(std::mt19937_64& rng);
  Observation begin_episode(std::uint64_t seed, std::mt19937_64& rng);
  void spawn_pedestrians(std::mt19937_64& rng);
  void advance_pedestrians(double dt);
  bool replan_pedestrian(PedestrianState& p);
  bool pedestrian_blocks(const Vec2& from, const Vec2& to) const;
  bool pedestrian_overlap(const Vec2& at) const;
  ComposedFrame compose(const splat::Camera& cam) const;
  void capture();

  std::shared_ptr<const Scene> scene_;
  EnvOptions options_;
  EpisodeState state_;
  bool started_ = false;
  CollisionIndex obstacles_;
  ColoredMesh obstacle_layer_;
  WalkableGrid ped_grid_;
  std::vector<Cell> ped_cells_;
  std::mt19937_64 ped_rng_;
  std::mt19937_64 camera_rng_;
  splat::Camera camera_;
  std::vector<FramePtr> frames_;
  FramePtr blank_;
};

}  // namespace splatsim::sim

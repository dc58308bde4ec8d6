#include "splatsim/sim/env.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/splat/rasterizer.hpp"

namespace splatsim::sim {
namespace {

constexpr std::uint64_t kPedestrianStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kCameraStream = 0xc2b2ae3d27d4eb4fULL;

// Point and unit direction at arclength s along a polyline.
void point_along(const std::vector<Vec2>& path, double s, Vec2& point, Vec2& dir) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 seg = path[i] - path[i - 1];
    const double len = seg.norm();
    if (len <= 0) continue;
    dir = seg / len;
    if (s <= len || i + 1 == path.size()) {
      point = path[i - 1] + std::min(s, len) * dir;
      return;
    }
    s -= len;
  }
  point = path.front();
  dir = Vec2::UnitX();
}

}  // namespace

Task parse_task(const std::string& s) {
  if (s == "pointnav") return Task::PointNav;
  if (s == "socialnav") return Task::SocialNav;
  throw InvalidParameter("unknown task '" + s + "' (expected pointnav or socialnav)");
}

std::string to_string(Task t) { return t == Task::PointNav ? "pointnav" : "socialnav"; }

NavEnv::NavEnv(std::shared_ptr<const Scene> scene, EnvOptions options)
    : scene_(std::move(scene)), options_(options) {
  if (!scene_) throw InvalidParameter("environment needs a scene");
}

WalkableGrid NavEnv::planning_grid(double margin) const {
  WalkableGrid grid = scene_->agent_grid;
  const auto& walkable = scene_->config.walkable;
  const double reach = scene_->config.vehicle.radius + margin;
  grid.block([&](const Vec2& p) {
    auto body = scene_->agent_body(p, p);
    body.radius = reach;
    if (obstacles_.touches(body)) return true;
    return margin > 0 && (walkable.distance_to_boundary(p) < reach || scene_->collision->touches(body));
  });
  return grid;
}

void NavEnv::spawn(std::mt19937_64& rng) {
  const auto& cfg = scene_->config;
  const auto& sp = cfg.spawn;
  const auto& grid = scene_->agent_grid;
  const auto cells = grid.walkable_cells();
  const double scale = std::min(1.0, 0.9 * scene_->diameter / sp.max_separation);
  const double lo = sp.min_separation * scale, hi = sp.max_separation * scale;
  const double jitter = 0.4 * grid.cell_size();
  const double r_agent = cfg.vehicle.radius;
  const auto random_point = [&] {
    const Cell c = cells[uniform_int(rng, 0, static_cast<int>(cells.size()) - 1)];
    return Vec2(grid.center(c) + Vec2(uniform(rng, -jitter, jitter), uniform(rng, -jitter, jitter)));
  };

  for (int attempt = 0; attempt < sp.max_attempts; ++attempt) {
    const Vec2 start = random_point();
    const Vec2 goal = random_point();
    const double sep = (goal - start).norm();
    if (sep < lo || sep > hi) continue;
    if (!cfg.walkable.contains(start) || !cfg.walkable.contains(goal)) continue;
    if (scene_->collision->touches(scene_->agent_body(start, start))) continue;
    const auto path = plan_path(grid, start, goal);
    if (!path) continue;
    const double length = polyline_length(*path);

    const int count = uniform_int(rng, sp.min_obstacles, sp.max_obstacles);
    std::vector<PlacedObstacle> placed;
    for (int k = 0; k < count; ++k) {
      for (int tries = 0; tries < 50; ++tries) {
        PlacedObstacle o;
        o.asset = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cfg.obstacles.size()) - 1));
        const double t = uniform(rng, sp.path_t_lo, sp.path_t_hi);
        const double lateral = uniform(rng, -sp.lateral, sp.lateral);
        o.yaw = uniform(rng, 0.0, 2 * kPi);
        Vec2 p, dir;
        point_along(*path, t * length, p, dir);
        o.position = p + lateral * Vec2(-dir.y(), dir.x());
        const double r = cfg.obstacles[o.asset].footprint_radius();
        if (!cfg.walkable.contains(o.position)) continue;
        const double keep_out = r + r_agent + 0.5;
        if ((o.position - start).norm() < keep_out || (o.position - goal).norm() < keep_out) continue;
        const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const PlacedObstacle& q) {
          return (q.position - o.position).norm() < r + cfg.obstacles[q.asset].footprint_radius();
        });
        if (overlaps) continue;
        placed.push_back(o);
        break;
      }
    }
    if (static_cast<int>(placed.size()) != count) continue;

    mesh::TriangleMesh obstacle_mesh;
    ColoredMesh layer;
    for (const auto& o : placed) {
      const auto m = place(cfg.obstacles[o.asset], o, cfg.ground_z);
      obstacle_mesh.append(m);
      layer.append(m, cfg.obstacles[o.asset].color);
    }
    obstacles_ = CollisionIndex(std::move(obstacle_mesh));
    if (!plan_path(planning_grid(), start, goal)) continue;

    Vec2 ahead, dir;
    point_along(*path, std::min(1.0, length), ahead, dir);
    const Vec2 toward = ahead - start;
    const double base = toward.norm() > 0 ? std::atan2(toward.y(), toward.x()) : 0.0;
    const double jitter_rad = deg2rad(sp.heading_jitter_deg);

    state_.start = start;
    state_.goal = goal;
    state_.obstacles = std::move(placed);
    state_.shortest_path = length;
    state_.separation_scale = scale;
    state_.agent = AgentState{};
    state_.agent.position = start;
    state_.agent.heading = wrap_angle(base + uniform(rng, -jitter_rad, jitter_rad));
    obstacle_layer_ = std::move(layer);
    return;
  }
  throw SpawnFailure("no valid start/goal layout after " + std::to_string(sp.max_attempts) + " attempts");
}

bool NavEnv::replan_pedestrian(PedestrianState& p) {
  const Cell from = ped_grid_.cell_of(p.position);
  for (int tries = 0; tries < 20; ++tries) {
    const Cell goal = ped_cells_[uniform_int(ped_rng_, 0, static_cast<int>(ped_cells_.size()) - 1)];
    const auto cells = astar(ped_grid_, from, goal);
    if (!cells || cells->size() < 2) continue;
    p.waypoints.clear();
    for (std::size_t i = 1; i < cells->size(); ++i) p.waypoints.push_back(ped_grid_.center((*cells)[i]));
    p.next = 0;
    return true;
  }
  p.waypoints.clear();
  p.next = 0;
  return false;
}

void NavEnv::spawn_pedestrians(std::mt19937_64& rng) {
  const auto& pp = scene_->config.pedestrians;
  ped_grid_ = scene_->pedestrian_grid;
  if (!obstacles_.empty()) {
    ped_grid_.block([&](const Vec2& p) { return obstacles_.touches(scene_->pedestrian_body(p)); });
  }
  ped_cells_ = ped_grid_.walkable_cells();
  state_.pedestrians.clear();
  if (options_.task != Task::SocialNav || pp.count == 0) return;
  std::vector<Cell> starts;
  for (const auto& c : ped_cells_) {
    const Vec2 p = ped_grid_.center(c);
    if ((p - state_.start).norm() >= pp.min_start_distance && (p - state_.goal).norm() >= pp.min_start_distance)
      starts.push_back(c);
  }
  if (starts.empty()) return;
  for (int i = 0; i < pp.count; ++i) {
    PedestrianState p;
    p.position = ped_grid_.center(starts[uniform_int(rng, 0, static_cast<int>(starts.size()) - 1)]);
    p.speed = uniform(rng, pp.speed_lo, pp.speed_hi);
    p.heading = uniform(rng, -kPi, kPi);
    p.color = Vec3(uniform(rng, 0.2, 0.9), uniform(rng, 0.2, 0.9), uniform(rng, 0.2, 0.9));
    replan_pedestrian(p);
    state_.pedestrians.push_back(std::move(p));
  }
}

void NavEnv::advance_pedestrians(double dt) {
  const auto& pp = scene_->config.pedestrians;
  for (auto& p : state_.pedestrians) {
    double remaining = p.speed * dt;
    for (int guard = 0; remaining > 0 && guard < 4; ++guard) {
      if (p.next >= p.waypoints.size() && !replan_pedestrian(p)) break;
      const Vec2 target = p.waypoints[p.next];
      const Vec2 to = target - p.position;
      const double len = to.norm();
      const double desired = len > 0 ? std::atan2(to.y(), to.x()) : p.heading;
      p.heading = wrap_angle(p.heading + std::clamp(pp.heading_gain * dt, 0.0, 1.0) * wrap_angle(desired - p.heading));
      if (len <= remaining) {
        p.position = target;
        remaining -= len;
        ++p.next;
      } else {
        p.position += remaining / len * to;
        remaining = 0;
      }
    }
  }
}

bool NavEnv::pedestrian_overlap(const Vec2& at) const {
  const double reach = scene_->config.vehicle.radius + scene_->config.pedestrians.radius;
  return std::any_of(state_.pedestrians.begin(), state_.pedestrians.end(),
                     [&](const PedestrianState& p) { return (p.position - at).norm() < reach; });
}

bool NavEnv::pedestrian_blocks(const Vec2& from, const Vec2& to) const {
  const double reach = scene_->config.vehicle.radius + scene_->config.pedestrians.radius;
  return std::any_of(state_.pedestrians.begin(), state_.pedestrians.end(), [&](const PedestrianState& p) {
    const double after = (p.position - to).norm();
    return after < reach && after <= (p.position - from).norm() && from != to;
  });
}

Vec2 NavEnv::goal_vector() const {
  const Vec2 d = state_.goal - state_.agent.position;
  return {d.norm(), wrap_angle(std::atan2(d.y(), d.x()) - state_.agent.heading)};
}

Observation NavEnv::observation() const { return {frames_, goal_vector()}; }

ComposedFrame NavEnv::compose(const splat::Camera& cam) const {
  const auto& cfg = scene_->config;
  ImageD fg_color(cam.width, cam.height, 3, 0.0), fg_depth(cam.width, cam.height, 1, 0.0);
  ColoredMesh layer = obstacle_layer_;
  for (const auto& p : state_.pedestrians) {
    auto body = make_cylinder(cfg.pedestrians.radius, cfg.pedestrians.height, 12);
    body.transform(Eigen::AngleAxisd(p.heading, Vec3::UnitZ()).toRotationMatrix(),
                   Vec3(p.position.x(), p.position.y(), cfg.ground_z));
    layer.append(body, p.color);
  }
  if (!layer.mesh.faces.empty()) render_colored(layer, cam, fg_color, fg_depth);
  if (scene_->splats.empty()) {
    ImageD bg(cam.width, cam.height, 3, 0.0);
    for (std::size_t i = 0; i < bg.pixels(); ++i)
      for (int c = 0; c < 3; ++c) bg.data[i * 3 + c] = cfg.background[c];
    const ImageD zero(cam.width, cam.height, 1, 0.0);
    return compose_frame(bg, zero, zero, fg_color, fg_depth);
  }
  splat::RenderOptions opts;
  opts.background = cfg.background;
  if (cfg.cull_alpha > 0) opts.cull = cull::CullConfig{cfg.cull_alpha, true};
  const auto r = splat::rasterize(scene_->splats, cam, opts);
  return compose_frame(r.color, r.depth, r.alpha, fg_color, fg_depth);
}

void NavEnv::capture() {
  const auto& cfg = scene_->config;
  camera_ = mount_camera(cfg.camera, state_.agent.position, state_.agent.heading, cfg.ground_z,
                         sample_perturbation(cfg.camera, camera_rng_));
  FramePtr frame;
  if (options_.render) {
    auto color = compose(camera_).color;
    for (auto& v : color.data) v = std::clamp(v, 0.0, 1.0);
    frame = std::make_shared<const ImageD>(std::move(color));
  } else {
    if (!blank_ || blank_->width != cfg.camera.width || blank_->height != cfg.camera.height)
      blank_ = std::make_shared<const ImageD>(cfg.camera.width, cfg.camera.height, 3, 0.0);
    frame = blank_;
  }
  if (frames_.empty()) {
    frames_.assign(kFrameStack, frame);
  } else {
    std::rotate(frames_.begin(), frames_.begin() + 1, frames_.end());
    frames_.back() = std::move(frame);
  }
}

Observation NavEnv::reset(std::uint64_t seed) {
  started_ = false;
  std::mt19937_64 rng(seed);
  state_ = EpisodeState{};
  state_.seed = seed;
  obstacles_ = CollisionIndex();
  obstacle_layer_ = ColoredMesh();
  spawn(rng);
  return begin_episode(seed, rng);
}

Observation NavEnv::reset_at(std::uint64_t seed, const Vec2& start, double heading, const Vec2& goal) {
  const auto& walkable = scene_->config.walkable;
  if (!start.allFinite() || !goal.allFinite() || !std::isfinite(heading))
    throw InvalidParameter("start, heading and goal must be finite");
  if (!walkable.contains(start) || !walkable.contains(goal))
    throw InvalidParameter("start and goal must lie inside the walkable region");
  started_ = false;
  std::mt19937_64 rng(seed);
  state_ = EpisodeState{};
  state_.seed = seed;
  obstacles_ = CollisionIndex();
  obstacle_layer_ = ColoredMesh();
  state_.start = start;
  state_.goal = goal;
  state_.agent.position = start;
  state_.agent.heading = wrap_angle(heading);
  const auto path = plan_path(scene_->agent_grid, start, goal);
  state_.shortest_path = path ? polyline_length(*path) : (goal - start).norm();
  return begin_episode(seed, rng);
}

Observation NavEnv::begin_episode(std::uint64_t seed, std::mt19937_64& rng) {
  ped_rng_.seed(seed ^ kPedestrianStream);
  camera_rng_.seed(seed ^ kCameraStream);
  spawn_pedestrians(rng);
  started_ = true;
  frames_.clear();
  capture();
  return observation();
}

StepResult NavEnv::step(const Action& action) {
  if (!started_) throw ProtocolError("step before reset");
  if (state_.done) throw ProtocolError("step after episode end; call reset");
  const auto& cfg = scene_->config;
  const Action a = action.clamped();
  const double prev_distance = (state_.goal - state_.agent.position).norm();
  const double prev_steer = state_.agent.steer;

  bool contact = false;
  for (int i = 0; i < cfg.vehicle.substeps; ++i) {
    AgentState next = step_dynamics(state_.agent, a, cfg.vehicle);
    const Vec2 from = state_.agent.position;
    const auto sweep = scene_->agent_body(from, next.position);
    const bool hit = scene_->collision->touches(sweep) || obstacles_.touches(sweep) ||
                     pedestrian_blocks(from, next.position);
    if (hit) {
      contact = true;
      next.position = state_.agent.position;
      next.heading = state_.agent.heading;
      next.speed = 0;
    }
    state_.path_length += (next.position - from).norm();
    state_.agent = next;
    advance_pedestrians(cfg.vehicle.dt);
    if (pedestrian_overlap(state_.agent.position)) contact = true;
  }

  ++state_.steps;
  if (contact) ++state_.collisions;
  const auto& pp = cfg.pedestrians;
  const double social_reach = cfg.vehicle.radius + pp.radius + cfg.episode.social_radius;
  if (std::any_of(state_.pedestrians.begin(), state_.pedestrians.end(), [&](const PedestrianState& p) {
        return (p.position - state_.agent.position).norm() <= social_reach;
      }))
    ++state_.social_violations;

  const auto& ep = cfg.episode;
  const double distance = (state_.goal - state_.agent.position).norm();
  TerminalReason reason = TerminalReason::None;
  if (reached_goal(state_.agent.position, state_.goal, ep.success_radius)) reason = TerminalReason::Success;
  else if (state_.collisions > ep.max_collisions) reason = TerminalReason::CollisionLimit;
  else if (!cfg.walkable.contains(state_.agent.position)) reason = TerminalReason::OutOfWalkable;
  else if (state_.steps >= ep.max_steps) reason = TerminalReason::Timeout;

  RewardInputs in;
  in.prev_distance = prev_distance;
  in.distance = distance;
  in.prev_steer = prev_steer;
  in.steer = state_.agent.steer;
  in.speed = state_.agent.speed;
  in.collided = contact;
  in.outcome = reason == TerminalReason::None ? 0 : (reason == TerminalReason::Success ? 1 : -1);
  const auto breakdown = compute_reward(in, ep.weights);

  state_.last_reward = breakdown;
  state_.last_contact = contact;
  state_.episode_return += breakdown.total;
  state_.reason = reason;
  state_.done = reason != TerminalReason::None;
  capture();

  StepResult out;
  out.observation = observation();
  out.reward = breakdown.total;
  out.breakdown = breakdown;
  out.truncated = reason == TerminalReason::Timeout;
  out.terminated = state_.done && !out.truncated;
  return out;
}

ComposedFrame NavEnv::render() const {
  if (!started_) throw ProtocolError("render before reset");
  return compose(camera_);
}

}  // namespace splatsim::sim

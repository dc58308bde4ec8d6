#include "splatsim/sim/scene.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "splatsim/common/error.hpp"
#include "splatsim/optim/trainer.hpp"

namespace splatsim::sim {
namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vehicle(const json& j, VehicleParams& v) {
  read_opt(j, "wheelbase", v.wheelbase);
  if (j.contains("max_steer_deg")) v.max_steer = deg2rad(j.at("max_steer_deg").get<double>());
  read_opt(j, "max_speed", v.max_speed);
  read_opt(j, "dt", v.dt);
  read_opt(j, "substeps", v.substeps);
  read_opt(j, "radius", v.radius);
}

void read_camera(const json& j, CameraRig& c) {
  read_opt(j, "width", c.width);
  read_opt(j, "height", c.height);
  read_opt(j, "focal", c.focal);
  read_opt(j, "mount_height", c.mount_height);
  read_opt(j, "mount_forward", c.mount_forward);
  read_opt(j, "pitch_deg", c.pitch_deg);
  read_opt(j, "perturb_position", c.perturb_position);
  read_opt(j, "perturb_rotation_deg", c.perturb_rotation_deg);
}

void read_spawn(const json& j, SpawnParams& s) {
  read_opt(j, "min_separation", s.min_separation);
  read_opt(j, "max_separation", s.max_separation);
  read_opt(j, "min_obstacles", s.min_obstacles);
  read_opt(j, "max_obstacles", s.max_obstacles);
  read_opt(j, "max_attempts", s.max_attempts);
  read_opt(j, "path_t_lo", s.path_t_lo);
  read_opt(j, "path_t_hi", s.path_t_hi);
  read_opt(j, "lateral", s.lateral);
  read_opt(j, "heading_jitter_deg", s.heading_jitter_deg);
}

void read_pedestrians(const json& j, PedestrianParams& p) {
  read_opt(j, "count", p.count);
  read_opt(j, "radius", p.radius);
  read_opt(j, "height", p.height);
  read_opt(j, "speed_lo", p.speed_lo);
  read_opt(j, "speed_hi", p.speed_hi);
  read_opt(j, "heading_gain", p.heading_gain);
  read_opt(j, "min_start_distance", p.min_start_distance);
}

void read_episode(const json& j, EpisodeParams& e) {
  read_opt(j, "max_steps", e.max_steps);
  read_opt(j, "success_radius", e.success_radius);
  read_opt(j, "max_collisions", e.max_collisions);
  read_opt(j, "social_radius", e.social_radius);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    read_opt(w, "dist", e.weights.dist);
    read_opt(w, "steer", e.weights.steer);
    read_opt(w, "crash", e.weights.crash);
    read_opt(w, "time", e.weights.time);
    read_opt(w, "terminal", e.weights.terminal);
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

void validate(const SceneConfig& cfg) {
  validate(cfg.walkable);
  validate(cfg.vehicle);
  validate(cfg.camera);
  if (!(cfg.grid_cell > 0)) throw InvalidParameter("grid cell must be positive");
  if (!(cfg.body.z_hi >= cfg.body.z_lo)) throw InvalidParameter("body z_hi must not be below z_lo");
  const auto& s = cfg.spawn;
  if (!(s.min_separation >= 0 && s.max_separation >= s.min_separation && s.max_separation > 0))
    throw InvalidParameter("spawn separation range is invalid");
  if (s.min_obstacles < 0 || s.max_obstacles < s.min_obstacles) throw InvalidParameter("obstacle count range is invalid");
  if (s.max_obstacles > 0 && cfg.obstacles.empty()) throw InvalidParameter("obstacles requested but no assets configured");
  if (s.max_attempts < 1) throw InvalidParameter("spawn attempts must be positive");
  if (!(0 <= s.path_t_lo && s.path_t_lo <= s.path_t_hi && s.path_t_hi <= 1)) throw InvalidParameter("placement window must lie in [0, 1]");
  const auto& p = cfg.pedestrians;
  if (p.count < 0 || !(p.radius > 0) || !(p.height > 0) || !(p.speed_lo > 0 && p.speed_hi >= p.speed_lo))
    throw InvalidParameter("pedestrian parameters are invalid");
  const auto& e = cfg.episode;
  if (e.max_steps < 1 || !(e.success_radius > 0) || e.max_collisions < 0 || !(e.social_radius >= 0))
    throw InvalidParameter("episode parameters are invalid");
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene config " + path.string());
  SceneConfig cfg;
  try {
    const json j = json::parse(in);
    const auto base = path.parent_path();
    cfg.splats_path = resolve(base, j.value("splats", std::string()));
    cfg.mesh_path = resolve(base, j.value("collision_mesh", std::string()));
    for (const auto& v : j.at("walkable")) cfg.walkable.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    read_opt(j, "ground_z", cfg.ground_z);
    read_opt(j, "grid_cell", cfg.grid_cell);
    read_opt(j, "cull_alpha", cfg.cull_alpha);
    if (j.contains("background")) cfg.background = vec3_from(j.at("background"));
    if (j.contains("obstacles")) {
      const auto builtin = builtin_obstacles();
      cfg.obstacles.clear();
      for (const auto& o : j.at("obstacles")) {
        ObstacleAsset asset;
        if (o.contains("mesh")) {
          asset.source = resolve(base, o.at("mesh").get<std::string>());
          asset.mesh = mesh::load_mesh(asset.source);
          asset.name = o.value("name", std::filesystem::path(asset.source).stem().string());
        } else {
          const auto kind = o.at("primitive").get<std::string>();
          const auto it = std::find_if(builtin.begin(), builtin.end(), [&](const ObstacleAsset& a) { return a.name == kind; });
          if (it == builtin.end()) throw InvalidParameter("unknown obstacle primitive '" + kind + "'");
          asset = *it;
          asset.name = o.value("name", kind);
        }
        if (o.contains("color")) asset.color = vec3_from(o.at("color"));
        cfg.obstacles.push_back(std::move(asset));
      }
    }
    if (j.contains("vehicle")) read_vehicle(j.at("vehicle"), cfg.vehicle);
    if (j.contains("body")) {
      read_opt(j.at("body"), "z_lo", cfg.body.z_lo);
      read_opt(j.at("body"), "z_hi", cfg.body.z_hi);
    }
    if (j.contains("camera")) read_camera(j.at("camera"), cfg.camera);
    if (j.contains("spawn")) read_spawn(j.at("spawn"), cfg.spawn);
    if (j.contains("pedestrians")) read_pedestrians(j.at("pedestrians"), cfg.pedestrians);
    if (j.contains("episode")) read_episode(j.at("episode"), cfg.episode);
  } catch (const json::exception& e) {
    throw IoError("malformed scene config " + path.string() + ": " + e.what());
  }
  validate(cfg);
  return cfg;
}

void save_scene_config(const std::filesystem::path& path, const SceneConfig& cfg) {
  json j;
  j["splats"] = cfg.splats_path;
  j["collision_mesh"] = cfg.mesh_path;
  j["walkable"] = json::array();
  for (const auto& v : cfg.walkable.vertices) j["walkable"].push_back({v.x(), v.y()});
  j["ground_z"] = cfg.ground_z;
  j["grid_cell"] = cfg.grid_cell;
  j["cull_alpha"] = cfg.cull_alpha;
  j["background"] = {cfg.background.x(), cfg.background.y(), cfg.background.z()};
  j["obstacles"] = json::array();
  for (const auto& o : cfg.obstacles) {
    json e{{"name", o.name}, {"color", {o.color.x(), o.color.y(), o.color.z()}}};
    if (o.source.empty()) e["primitive"] = o.name;
    else e["mesh"] = o.source;
    j["obstacles"].push_back(e);
  }
  const auto& v = cfg.vehicle;
  j["vehicle"] = {{"wheelbase", v.wheelbase}, {"max_steer_deg", rad2deg(v.max_steer)}, {"max_speed", v.max_speed},
                  {"dt", v.dt}, {"substeps", v.substeps}, {"radius", v.radius}};
  j["body"] = {{"z_lo", cfg.body.z_lo}, {"z_hi", cfg.body.z_hi}};
  const auto& c = cfg.camera;
  j["camera"] = {{"width", c.width}, {"height", c.height}, {"focal", c.focal}, {"mount_height", c.mount_height},
                 {"mount_forward", c.mount_forward}, {"pitch_deg", c.pitch_deg},
                 {"perturb_position", c.perturb_position}, {"perturb_rotation_deg", c.perturb_rotation_deg}};
  const auto& s = cfg.spawn;
  j["spawn"] = {{"min_separation", s.min_separation}, {"max_separation", s.max_separation},
                {"min_obstacles", s.min_obstacles}, {"max_obstacles", s.max_obstacles},
                {"max_attempts", s.max_attempts}, {"path_t_lo", s.path_t_lo}, {"path_t_hi", s.path_t_hi},
                {"lateral", s.lateral}, {"heading_jitter_deg", s.heading_jitter_deg}};
  const auto& p = cfg.pedestrians;
  j["pedestrians"] = {{"count", p.count}, {"radius", p.radius}, {"height", p.height}, {"speed_lo", p.speed_lo},
                      {"speed_hi", p.speed_hi}, {"heading_gain", p.heading_gain},
                      {"min_start_distance", p.min_start_distance}};
  const auto& e = cfg.episode;
  j["episode"] = {{"max_steps", e.max_steps}, {"success_radius", e.success_radius},
                  {"max_collisions", e.max_collisions}, {"social_radius", e.social_radius},
                  {"weights", {{"dist", e.weights.dist}, {"steer", e.weights.steer}, {"crash", e.weights.crash},
                               {"time", e.weights.time}, {"terminal", e.weights.terminal}}}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scene config " + path.string());
  out << j.dump(2) << '\n';
}

BodySweep Scene::agent_body(const Vec2& from, const Vec2& to) const {
  return {from, to, config.vehicle.radius, config.ground_z + config.body.z_lo, config.ground_z + config.body.z_hi};
}

BodySweep Scene::pedestrian_body(const Vec2& at) const {
  const auto& p = config.pedestrians;
  const double lo = config.ground_z + std::min(config.body.z_lo, p.height);
  return {at, at, p.radius, lo, std::max(lo, config.ground_z + p.height - p.radius)};
}

std::shared_ptr<const Scene> make_scene(SceneConfig cfg, splat::SplatSet splats, mesh::TriangleMesh collision) {
  validate(cfg);
  auto scene = std::make_shared<Scene>();
  scene->config = std::move(cfg);
  scene->splats = std::move(splats);
  scene->collision = std::make_shared<const CollisionIndex>(std::move(collision));
  const auto& c = scene->config;
  const auto& index = *scene->collision;
  scene->agent_grid = WalkableGrid::from_polygon(c.walkable, c.grid_cell, c.vehicle.radius, [&](const Vec2& p) {
    return index.touches(scene->agent_body(p, p));
  });
  scene->pedestrian_grid = WalkableGrid::from_polygon(c.walkable, c.grid_cell, c.pedestrians.radius, [&](const Vec2& p) {
    return index.touches(scene->pedestrian_body(p));
  });
  scene->diameter = c.walkable.diameter();
  if (scene->agent_grid.walkable_count() == 0) throw InvalidParameter("walkable region has no cell that fits the agent");
  return scene;
}

std::shared_ptr<const Scene> load_scene(const SceneConfig& cfg) {
  splat::SplatSet splats;
  if (!cfg.splats_path.empty()) splats = optim::load_checkpoint(cfg.splats_path);
  mesh::TriangleMesh collision;
  if (!cfg.mesh_path.empty()) collision = mesh::load_mesh(cfg.mesh_path);
  return make_scene(cfg, std::move(splats), std::move(collision));
}

}  // namespace splatsim::sim

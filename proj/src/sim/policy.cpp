#include "splatsim/sim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace splatsim::sim {

namespace {

// Start -> nearest open cell -> A* -> nearest open cell to the goal -> goal.
std::optional<std::vector<Vec2>> plan_with_clearance(const WalkableGrid& grid, const Vec2& from, const Vec2& to) {
  const auto a = grid.walkable_at(from) ? std::optional<Cell>(grid.cell_of(from)) : grid.nearest_walkable(from);
  const auto b = grid.walkable_at(to) ? std::optional<Cell>(grid.cell_of(to)) : grid.nearest_walkable(to);
  if (!a || !b) return std::nullopt;
  const auto cells = astar(grid, *a, *b);
  if (!cells) return std::nullopt;
  std::vector<Vec2> points{from};
  for (const auto& c : *cells) points.push_back(grid.center(c));
  points.push_back(to);
  return points;
}

}  // namespace

void OraclePolicy::begin(const NavEnv& env) {
  const auto& s = env.state();
  auto planned = plan_with_clearance(env.planning_grid(margin_), s.agent.position, s.goal);
  if (!planned) planned = plan_path(env.planning_grid(), s.agent.position, s.goal);
  path_ = planned ? *planned : std::vector<Vec2>{s.agent.position, s.goal};
  progress_ = 0;
  reversing_ = 0;
}

Action OraclePolicy::act(const NavEnv& env, const Observation&) {
  const auto& s = env.state().agent;
  if (path_.size() < 2) begin(env);
  // Closest segment at or after the current progress.
  double best = std::numeric_limits<double>::infinity();
  std::size_t seg = progress_;
  for (std::size_t i = progress_; i + 1 < path_.size(); ++i) {
    const double d = point_segment_distance(s.position, path_[i], path_[i + 1]);
    if (d < best) {
      best = d;
      seg = i;
    }
  }
  progress_ = seg;
  // First path point at least one lookahead away, searching forward from that segment.
  Vec2 target = path_.back();
  for (std::size_t i = seg + 1; i < path_.size(); ++i)
    if ((path_[i] - s.position).norm() >= lookahead_) {
      const Vec2 a = path_[i - 1], b = path_[i];
      // Intersect the segment with the lookahead circle when the previous point is inside it.
      const Vec2 d = b - a, f = a - s.position;
      const double qa = d.squaredNorm(), qb = 2 * f.dot(d), qc = f.squaredNorm() - lookahead_ * lookahead_;
      const double disc = qb * qb - 4 * qa * qc;
      double t = 1.0;
      if (qa > 0 && disc >= 0) t = std::clamp((-qb + std::sqrt(disc)) / (2 * qa), 0.0, 1.0);
      target = a + t * d;
      break;
    }
  const Vec2 to = target - s.position;
  const double alpha = wrap_angle(std::atan2(to.y(), to.x()) - s.heading);
  const auto& v = env.scene().config.vehicle;
  const double ld = std::max(to.norm(), 1e-6);
  const double steer = std::atan(2 * v.wheelbase * std::sin(alpha) / ld);
  if (env.state().last_contact && reversing_ == 0) reversing_ = 3;
  if (reversing_ > 0) {
    // Straight back retraces the approach; steering here would swing the rear into the contact.
    --reversing_;
    return {0.0, -0.5};
  }
  return {std::clamp(steer / v.max_steer, -1.0, 1.0), 1.0};
}

Action RandomPolicy::act(const NavEnv&, const Observation&) {
  return {uniform(rng_, -1.0, 1.0), uniform(rng_, -1.0, 1.0)};
}

EpisodeRecord run_episode(NavEnv& env, Policy& policy, std::uint64_t seed,
                          const std::function<void(const StepResult&)>& on_step) {
  Observation obs = env.reset(seed);
  policy.begin(env);
  while (env.live()) {
    auto result = env.step(policy.act(env, obs));
    if (on_step) on_step(result);
    obs = std::move(result.observation);
  }
  return record_of(env.state());
}

std::vector<EpisodeRecord> run_episodes(NavEnv& env, Policy& policy, int episodes, std::uint64_t base_seed) {
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<std::size_t>(std::max(0, episodes)));
  for (int i = 0; i < episodes; ++i) out.push_back(run_episode(env, policy, base_seed + static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace splatsim::sim

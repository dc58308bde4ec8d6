#include "splatsim/sim/metrics.hpp"

#include <algorithm>

namespace splatsim::sim {

double EpisodeRecord::spl() const {
  if (!success) return 0.0;
  const double denom = std::max(path_length, shortest_path);
  return denom > 0 ? shortest_path / denom : 1.0;
}

double EpisodeRecord::sns() const {
  if (!success) return 0.0;
  return steps > 0 ? 1.0 - static_cast<double>(social_violations) / steps : 1.0;
}

EpisodeRecord record_of(const EpisodeState& s) {
  EpisodeRecord r;
  r.seed = s.seed;
  r.success = s.reason == TerminalReason::Success;
  r.path_length = s.path_length;
  r.shortest_path = s.shortest_path;
  r.collisions = s.collisions;
  r.steps = s.steps;
  r.social_violations = s.social_violations;
  r.episode_return = s.episode_return;
  r.reason = s.reason;
  return r;
}

NavMetrics compute_metrics(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw EmptySupport("no episodes to summarize");
  NavMetrics m;
  m.episodes = records.size();
  for (const auto& r : records) {
    m.sr += r.success ? 1.0 : 0.0;
    m.spl += r.spl();
    m.sns += r.sns();
    m.cost += r.collisions;
  }
  const double n = static_cast<double>(records.size());
  m.sr /= n;
  m.spl /= n;
  m.sns /= n;
  m.cost /= n;
  return m;
}

}  // namespace splatsim::sim

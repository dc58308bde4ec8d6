#pragma once

#include <vector>

#include "splatsim/sim/env.hpp"

namespace splatsim::sim {

struct EpisodeRecord {
  std::uint64_t seed = 0;
  bool success = false;
  double path_length = 0;    // traveled, m
  double shortest_path = 0;  // obstacle-free grid shortest path, m
  int collisions = 0;
  int steps = 0;
  int social_violations = 0;  // control steps with a pedestrian inside the social radius
  double episode_return = 0;
  TerminalReason reason = TerminalReason::None;

  /// success * shortest / max(traveled, shortest).
  [[nodiscard]] double spl() const;
  /// success * (1 - fraction of steps with a social violation).
  [[nodiscard]] double sns() const;
};

EpisodeRecord record_of(const EpisodeState& state);

struct NavMetrics {
  std::size_t episodes = 0;
  double sr = 0;
  double spl = 0;
  double sns = 0;
  double cost = 0;  // mean collision count
};

/// Batch means. Throws EmptySupport for an empty batch.
NavMetrics compute_metrics(const std::vector<EpisodeRecord>& records);

}  // namespace splatsim::sim

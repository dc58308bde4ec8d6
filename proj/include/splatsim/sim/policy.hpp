#pragma once

#include <functional>
#include <memory>
#include <random>

#include "splatsim/sim/metrics.hpp"

namespace splatsim::sim {

class Policy {
 public:
  virtual ~Policy() = default;
  /// Called after every reset.
  virtual void begin(const NavEnv& /*env*/) {}
  virtual Action act(const NavEnv& env, const Observation& obs) = 0;
};

/// Pure pursuit along the A* path on the planning grid (episode obstacles included).
/// After a contact it backs straight up for a few steps. Uses
/// privileged state, not the observation.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(double lookahead = 1.0, double margin = 0.3) : lookahead_(lookahead), margin_(margin) {}
  void begin(const NavEnv& env) override;
  Action act(const NavEnv& env, const Observation& obs) override;
  [[nodiscard]] const std::vector<Vec2>& path() const { return path_; }

 private:
  double lookahead_;
  double margin_;
  std::vector<Vec2> path_;
  std::size_t progress_ = 0;
  int reversing_ = 0;
};

/// Uniform actions in [-1, 1]^2 from a seeded generator.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Action act(const NavEnv& env, const Observation& obs) override;

 private:
  std::mt19937_64 rng_;
};

/// Resets with `seed` and steps until the episode ends. `on_step` sees every result.
EpisodeRecord run_episode(NavEnv& env, Policy& policy, std::uint64_t seed,
                          const std::function<void(const StepResult&)>& on_step = {});

/// Episodes seeded base_seed, base_seed + 1, ...
std::vector<EpisodeRecord> run_episodes(NavEnv& env, Policy& policy, int episodes, std::uint64_t base_seed);

}  // namespace splatsim::sim

#pragma once

#include <string>

#include "splatsim/sim/scene.hpp"

namespace splatsim::sim {

/// Weighted reward components of one control step; `total` is their sum.
struct RewardBreakdown {
  double term = 0;
  double dist = 0;
  double steer = 0;
  double crash = 0;
  double time = 0;
  double total = 0;
};

struct RewardInputs {
  double prev_distance = 0;  // planar distance to the goal before the step, m
  double distance = 0;       // after the step
  double prev_steer = 0;     // rad
  double steer = 0;          // rad
  double speed = 0;          // m/s after the step
  bool collided = false;     // any contact during the step
  int outcome = 0;           // +1 success, -1 failure, 0 still running
};

/// Terminal bonus, progress (previous minus current distance), steering-change penalty
/// scaled by speed, crash penalty and a unit time penalty, each times its weight.
RewardBreakdown compute_reward(const RewardInputs& in, const RewardWeights& w);

enum class TerminalReason { None, Success, CollisionLimit, OutOfWalkable, Timeout };
std::string to_string(TerminalReason r);

/// Planar distance within the success radius (inclusive).
inline bool reached_goal(const Vec2& position, const Vec2& goal, double radius) {
  return (goal - position).norm() <= radius;
}

}  // namespace splatsim::sim

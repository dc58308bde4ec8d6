#include "splatsim/sim/reward.hpp"

#include <cmath>

namespace splatsim::sim {

RewardBreakdown compute_reward(const RewardInputs& in, const RewardWeights& w) {
  RewardBreakdown r;
  r.term = w.terminal * in.outcome;
  r.dist = w.dist * (in.prev_distance - in.distance);
  r.steer = w.steer * -(std::abs(in.steer - in.prev_steer) * std::abs(in.speed));
  r.crash = w.crash * (in.collided ? -1.0 : 0.0);
  r.time = w.time * -1.0;
  r.total = r.term + r.dist + r.steer + r.crash + r.time;
  return r;
}

std::string to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::None: return "none";
    case TerminalReason::Success: return "success";
    case TerminalReason::CollisionLimit: return "collision_limit";
    case TerminalReason::OutOfWalkable: return "out_of_walkable";
    case TerminalReason::Timeout: return "timeout";
  }
  return "none";
}

}  // namespace splatsim::sim

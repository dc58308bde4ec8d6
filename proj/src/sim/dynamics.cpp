#include "splatsim/sim/dynamics.hpp"

#include <algorithm>

#include "splatsim/common/error.hpp"

namespace splatsim::sim {

void validate(const VehicleParams& p) {
  if (!(p.wheelbase > 0)) throw InvalidParameter("wheelbase must be positive");
  if (!(p.max_steer > 0 && p.max_steer < kPi / 2)) throw InvalidParameter("max steer must lie in (0, 90) degrees");
  if (!(p.max_speed > 0)) throw InvalidParameter("max speed must be positive");
  if (!(p.dt > 0)) throw InvalidParameter("dt must be positive");
  if (p.substeps < 1) throw InvalidParameter("substeps must be at least 1");
  if (!(p.radius > 0)) throw InvalidParameter("collision radius must be positive");
}

Action Action::clamped() const {
  const auto clamp1 = [](double v) { return std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0; };
  return {clamp1(steer), clamp1(speed)};
}

AgentState step_dynamics(const AgentState& s, const Action& action, const VehicleParams& p) {
  const Action a = action.clamped();
  AgentState n = s;
  n.steer = a.steer * p.max_steer;
  n.speed = a.speed * p.max_speed;
  n.position += n.speed * p.dt * Vec2(std::cos(s.heading), std::sin(s.heading));
  n.heading = wrap_angle(s.heading + n.speed / p.wheelbase * std::tan(n.steer) * p.dt);
  return n;
}

}  // namespace splatsim::sim

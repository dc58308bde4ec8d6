#pragma once

#include "splatsim/common/math.hpp"

namespace splatsim::sim {

struct VehicleParams {
  double wheelbase = 0.8;            // m
  double max_steer = deg2rad(30.0);  // rad
  double max_speed = 1.5;            // m/s
  double dt = 0.02;                  // physics step, s (50 Hz)
  int substeps = 10;                 // physics steps per control step (5 Hz control)
  double radius = 0.3;               // collision disc, m
};

void validate(const VehicleParams& p);

/// Normalized controls; both components are clamped to [-1, 1] on ingest.
struct Action {
  double steer = 0;
  double speed = 0;

  [[nodiscard]] Action clamped() const;
};

struct AgentState {
  Vec2 position = Vec2::Zero();  // ground plane
  double heading = 0;            // rad, counter-clockwise from +x, wrapped to (-pi, pi]
  double speed = 0;              // m/s
  double steer = 0;              // rad
};

/// One explicit-Euler step of the kinematic bicycle: the commanded steer and speed are set,
/// the rear axle advances along the current heading, then the heading turns by
/// v / L * tan(steer) * dt.
AgentState step_dynamics(const AgentState& state, const Action& action, const VehicleParams& p);

/// Steady-state turning radius for a steer angle.
inline double turning_radius(double wheelbase, double steer) { return wheelbase / std::tan(std::abs(steer)); }

}  // namespace splatsim::sim

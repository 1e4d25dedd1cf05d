#pragma once

#include "drto/model.hpp"

namespace drto::systems {

/// Actuated mass-spring-damper, m = 1 kg, k = 0.01 N/m, damping 0.1 Ns/m.
/// State [position, velocity], action [force].
NonlinearSystem mass_spring_damper(double dt, const Matrix& process_noise_cov);

/// Nonholonomic car with length `length`. State [x, y, heading, speed],
/// action [acceleration, steering angle]:
///   x_dot = v sin(psi), y_dot = v cos(psi), psi_dot = v tan(phi) / length, v_dot = a.
NonlinearSystem robot_car(double dt, const Matrix& process_noise_cov, double length = 0.1);

/// x_dot = drift_state x + drift_action u + drift_offset.
NonlinearSystem custom_linear(const Matrix& drift_state, const Matrix& drift_action, const Vector& drift_offset,
                              double dt, const Matrix& process_noise_cov);

}  // namespace drto::systems

#include "drto/systems.hpp"

#include <cmath>
#include <string>

#include "drto/errors.hpp"

namespace drto::systems {

NonlinearSystem custom_linear(const Matrix& drift_state, const Matrix& drift_action, const Vector& drift_offset,
                              double dt, const Matrix& process_noise_cov) {
  const Index d = drift_state.rows();
  if (drift_state.cols() != d) throw ContractViolation("custom_linear: drift_state must be square");
  if (drift_action.rows() != d) {
    throw ContractViolation("custom_linear: drift_action has " + std::to_string(drift_action.rows()) +
                            " rows but drift_state is " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (drift_offset.size() != d) throw ContractViolation("custom_linear: drift_offset length mismatch");
  if (process_noise_cov.rows() != d || process_noise_cov.cols() != d) {
    throw ContractViolation("custom_linear: process noise must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!(dt > 0.0)) throw ContractViolation("custom_linear: dt must be positive");

  NonlinearSystem sys;
  sys.name = "custom-linear";
  sys.state_dim = d;
  sys.action_dim = drift_action.cols();
  sys.dt = dt;
  sys.process_noise_cov = process_noise_cov;
  sys.drift = [f = drift_state, g = drift_action, c = drift_offset](const Vector& x, const Vector& u) -> Vector {
    return f * x + g * u + c;
  };
  sys.jacobians = [f = drift_state, g = drift_action](const Vector&, const Vector&) { return std::make_pair(f, g); };
  return sys;
}

NonlinearSystem mass_spring_damper(double dt, const Matrix& process_noise_cov) {
  constexpr double mass = 1.0;
  constexpr double spring = 0.01;
  constexpr double damping = 0.1;
  Matrix f(2, 2);
  f << 0.0, 1.0, -spring / mass, -damping / mass;
  Matrix g(2, 1);
  g << 0.0, 1.0 / mass;
  NonlinearSystem sys = custom_linear(f, g, Vector::Zero(2), dt, process_noise_cov);
  sys.name = "mass_spring_damper";
  return sys;
}

NonlinearSystem robot_car(double dt, const Matrix& process_noise_cov, double length) {
  if (!(dt > 0.0) || !(length > 0.0)) throw ContractViolation("robot_car: dt and length must be positive");
  if (process_noise_cov.rows() != 4 || process_noise_cov.cols() != 4) {
    throw ContractViolation("robot_car: process noise must be 4x4");
  }
  NonlinearSystem sys;
  sys.name = "robot_car";
  sys.state_dim = 4;
  sys.action_dim = 2;
  sys.dt = dt;
  sys.process_noise_cov = process_noise_cov;
  sys.drift = [length](const Vector& x, const Vector& u) -> Vector {
    const double psi = x(2);
    const double v = x(3);
    Vector dx(4);
    dx << v * std::sin(psi), v * std::cos(psi), v * std::tan(u(1)) / length, u(0);
    return dx;
  };
  sys.jacobians = [length](const Vector& x, const Vector& u) {
    const double psi = x(2);
    const double v = x(3);
    const double phi = u(1);
    const double sec = 1.0 / std::cos(phi);
    Matrix fx = Matrix::Zero(4, 4);
    fx(0, 2) = v * std::cos(psi);
    fx(0, 3) = std::sin(psi);
    fx(1, 2) = -v * std::sin(psi);
    fx(1, 3) = std::cos(psi);
    fx(2, 3) = std::tan(phi) / length;
    Matrix fu = Matrix::Zero(4, 2);
    fu(2, 1) = v * sec * sec / length;
    fu(3, 0) = 1.0;
    return std::make_pair(fx, fu);
  };
  return sys;
}

}  // namespace drto::systems

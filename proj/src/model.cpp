#include "drto/model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <string>

#include "drto/errors.hpp"

namespace drto {

namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

void require_square(const Matrix& m, Index n, const std::string& what) {
  if (m.rows() != n || m.cols() != n) {
    throw ContractViolation(what + " must be " + dims(n, n) + ", got " + dims(m.rows(), m.cols()));
  }
}

void require_symmetric(const Matrix& m, const std::string& what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ContractViolation(what + " must be symmetric");
  }
}

}  // namespace

StateActionVector::StateActionVector(const Vector& x, const Vector& u) : tau_(x.size() + u.size() + 1), state_dim_(x.size()) {
  tau_ << x, u, 1.0;
}

Vector vectorize(const Matrix& theta) { return Eigen::Map<const Vector>(theta.data(), theta.size()); }

Matrix unvectorize(const Vector& theta, Index rows) {
  if (rows <= 0 || theta.size() % rows != 0) throw ContractViolation("unvectorize: size mismatch");
  return Eigen::Map<const Matrix>(theta.data(), rows, theta.size() / rows);
}

ParameterBelief::ParameterBelief(Gaussian dist, Matrix noise_cov, Index state_dim, Index action_dim)
    : dist_(std::move(dist)), noise_cov_(symmetrized(noise_cov)), state_dim_(state_dim), action_dim_(action_dim) {
  if (state_dim_ <= 0 || action_dim_ < 0) throw ContractViolation("ParameterBelief: invalid dimensions");
  if (dist_.dim() != param_dim(state_dim_, action_dim_)) {
    throw ContractViolation("ParameterBelief: parameter dimension " + std::to_string(dist_.dim()) +
                            " does not match d*(d+m+1) = " +
                            std::to_string(param_dim(state_dim_, action_dim_)));
  }
  require_square(noise_cov, state_dim_, "ParameterBelief: noise covariance");
}

ParameterBelief ParameterBelief::with_dist(Gaussian dist) const {
  return {std::move(dist), noise_cov_, state_dim_, action_dim_};
}

QuadraticCost::QuadraticCost(Matrix state_weight, Matrix action_weight, Matrix terminal_weight, Vector goal)
    : state_weight_(std::move(state_weight)),
      action_weight_(std::move(action_weight)),
      terminal_weight_(std::move(terminal_weight)),
      goal_(std::move(goal)) {
  const Index d = goal_.size();
  require_square(state_weight_, d, "QuadraticCost: state weight");
  require_square(terminal_weight_, d, "QuadraticCost: terminal weight");
  if (action_weight_.rows() != action_weight_.cols()) {
    throw ContractViolation("QuadraticCost: action weight must be square");
  }
  require_symmetric(state_weight_, "QuadraticCost: state weight");
  require_symmetric(terminal_weight_, "QuadraticCost: terminal weight");
  require_symmetric(action_weight_, "QuadraticCost: action weight");
  if (Eigen::LLT<Matrix>(action_weight_).info() != Eigen::Success) {
    throw ContractViolation("QuadraticCost: action weight must be positive definite");
  }
}

double QuadraticCost::stage(const Vector& x, const Vector& u) const {
  const Vector e = x - goal_;
  return e.dot(state_weight_ * e) + u.dot(action_weight_ * u);
}

double QuadraticCost::terminal(const Vector& x) const {
  const Vector e = x - goal_;
  return e.dot(terminal_weight_ * e);
}

Matrix QuadraticCost::stage_homogeneous() const {
  const Index d = state_dim();
  const Index m = action_dim();
  const Index n = d + m + 1;
  Matrix h = Matrix::Zero(n, n);
  const Vector cg = state_weight_ * goal_;
  h.block(0, 0, d, d) = state_weight_;
  h.block(d, d, m, m) = action_weight_;
  h.block(0, n - 1, d, 1) = -cg;
  h.block(n - 1, 0, 1, d) = -cg.transpose();
  h(n - 1, n - 1) = goal_.dot(cg);
  return symmetrized(h);
}

QuadraticValue QuadraticCost::terminal_value() const {
  const Vector cg = terminal_weight_ * goal_;
  return {terminal_weight_, -2.0 * cg, goal_.dot(cg)};
}

void Problem::validate() const {
  const Index d = state_dim();
  const Index m = action_dim();
  if (horizon < 1) throw ContractViolation("Problem: horizon must be at least 1");
  if (static_cast<int>(nominal.size()) != horizon - 1) {
    throw ContractViolation("Problem: nominal has " + std::to_string(nominal.size()) +
                            " steps, expected horizon-1 = " + std::to_string(horizon - 1));
  }
  if (cost.state_dim() != d) throw ContractViolation("Problem: cost state dimension does not match initial belief");
  for (const auto& b : nominal) {
    if (b.state_dim() != d || b.action_dim() != m) {
      throw ContractViolation("Problem: nominal belief dimensions do not match cost");
    }
  }
  if (system && (system->state_dim != d || system->action_dim != m)) {
    throw ContractViolation("Problem: system dimensions do not match cost");
  }
}

Matrix parameter_noise(const Matrix& param_cov, const Vector& tau, Index d) {
  const Index n = tau.size();
  Matrix out = Matrix::Zero(d, d);
  for (Index a = 0; a < n; ++a) {
    if (tau(a) == 0.0) continue;
    for (Index b = 0; b < n; ++b) {
      const double w = tau(a) * tau(b);
      if (w == 0.0) continue;
      out.noalias() += w * param_cov.block(a * d, b * d, d, d);
    }
  }
  return symmetrized(out);
}

Gaussian marginal_dynamics(const ParameterBelief& belief, const StateActionVector& tau) {
  const Index d = belief.state_dim();
  if (tau.state_dim() != d || tau.action_dim() != belief.action_dim()) {
    throw ContractViolation("marginal_dynamics: state-action vector does not match belief");
  }
  const Vector mean = belief.mean_matrix() * tau.tau();
  return {mean, belief.noise_cov() + parameter_noise(belief.dist().cov(), tau.tau(), d)};
}

Vector integrate(const NonlinearSystem& system, const Vector& x, const Vector& u) {
  const double h = system.dt;
  const Vector k1 = system.drift(x, u);
  const Vector k2 = system.drift(x + 0.5 * h * k1, u);
  const Vector k3 = system.drift(x + 0.5 * h * k2, u);
  const Vector k4 = system.drift(x + h * k3, u);
  Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw NumericalError("integrate: non-finite state in " + system.name, -1);
  return next;
}

std::pair<Matrix, Matrix> integrate_jacobians(const NonlinearSystem& system, const Vector& x, const Vector& u) {
  const double h = system.dt;
  const Index d = x.size();
  const Matrix eye = Matrix::Identity(d, d);

  const Vector k1 = system.drift(x, u);
  const auto [f1x, f1u] = system.jacobians(x, u);
  const Matrix j1x = f1x;
  const Matrix j1u = f1u;

  const Vector x2 = x + 0.5 * h * k1;
  const Vector k2 = system.drift(x2, u);
  const auto [f2x, f2u] = system.jacobians(x2, u);
  const Matrix j2x = f2x * (eye + 0.5 * h * j1x);
  const Matrix j2u = f2x * (0.5 * h * j1u) + f2u;

  const Vector x3 = x + 0.5 * h * k2;
  const Vector k3 = system.drift(x3, u);
  const auto [f3x, f3u] = system.jacobians(x3, u);
  const Matrix j3x = f3x * (eye + 0.5 * h * j2x);
  const Matrix j3u = f3x * (0.5 * h * j2u) + f3u;

  const Vector x4 = x + h * k3;
  const auto [f4x, f4u] = system.jacobians(x4, u);
  const Matrix j4x = f4x * (eye + h * j3x);
  const Matrix j4u = f4x * (h * j3u) + f4u;

  return {eye + (h / 6.0) * (j1x + 2.0 * j2x + 2.0 * j3x + j4x), (h / 6.0) * (j1u + 2.0 * j2u + 2.0 * j3u + j4u)};
}

std::vector<LinearParamStep> linearize(const NonlinearSystem& system, const std::vector<Vector>& states,
                                       const std::vector<Vector>& actions) {
  if (states.size() != actions.size()) throw ContractViolation("linearize: states and actions differ in length");
  const Index d = system.state_dim;
  const Index m = system.action_dim;
  std::vector<LinearParamStep> steps;
  steps.reserve(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    const Vector& x = states[t];
    const Vector& u = actions[t];
    if (x.size() != d || u.size() != m) throw ContractViolation("linearize: reference dimension mismatch");
    const auto [a, b] = integrate_jacobians(system, x, u);
    if (!a.allFinite() || !b.allFinite()) {
      throw NumericalError("linearize: non-finite Jacobian", static_cast<int>(t));
    }
    Vector next;
    try {
      next = integrate(system, x, u);
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), static_cast<int>(t));
    }
    Matrix theta(d, d + m + 1);
    theta << a, b, next - a * x - b * u;
    steps.push_back({std::move(theta), system.process_noise_cov});
  }
  return steps;
}

std::vector<ParameterBelief> nominal_belief(const std::vector<LinearParamStep>& steps, double sigma_theta) {
  if (!(sigma_theta > 0.0)) throw ContractViolation("nominal_belief: sigma_theta must be positive");
  std::vector<ParameterBelief> beliefs;
  beliefs.reserve(steps.size());
  for (const auto& s : steps) {
    const Index p = s.theta.size();
    beliefs.emplace_back(Gaussian(vectorize(s.theta), sigma_theta * sigma_theta * Matrix::Identity(p, p)),
                         s.noise_cov, s.state_dim(), s.action_dim());
  }
  return beliefs;
}

std::vector<Vector> rollout_states(const NonlinearSystem& system, const Vector& x0, const std::vector<Vector>& actions) {
  std::vector<Vector> states;
  states.reserve(actions.size() + 1);
  states.push_back(x0);
  for (const auto& u : actions) states.push_back(integrate(system, states.back(), u));
  return states;
}

Problem make_problem(const NonlinearSystem& system, int horizon, const Gaussian& initial, const QuadraticCost& cost,
                     double sigma_theta, bool keep_system) {
  if (horizon < 1) throw ContractViolation("make_problem: horizon must be at least 1");
  const std::vector<Vector> actions(static_cast<std::size_t>(horizon - 1), Vector::Zero(system.action_dim));
  std::vector<Vector> states = rollout_states(system, initial.mean(), actions);
  states.pop_back();
  Problem problem{horizon,
                  initial,
                  cost,
                  nominal_belief(linearize(system, states, actions), sigma_theta),
                  keep_system ? std::optional<NonlinearSystem>(system) : std::nullopt,
                  sigma_theta};
  problem.validate();
  return problem;
}

}  // namespace drto

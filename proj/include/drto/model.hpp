#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drto/gauss.hpp"
#include "drto/quadratic.hpp"

namespace drto {

/// tau = [x; u; 1], the argument of the linear parameter map Theta tau.
class StateActionVector {
 public:
  StateActionVector(const Vector& x, const Vector& u);

  const Vector& tau() const noexcept { return tau_; }
  Index state_dim() const noexcept { return state_dim_; }
  Index action_dim() const noexcept { return tau_.size() - state_dim_ - 1; }

 private:
  Vector tau_;
  Index state_dim_;
};

/// Number of entries of vec(Theta) for Theta = [A, B, c].
constexpr Index param_dim(Index d, Index m) { return d * (d + m + 1); }

/// Column-stacking vectorization: theta[a*d + i] = Theta(i, a).
Vector vectorize(const Matrix& theta);
Matrix unvectorize(const Vector& theta, Index rows);

/// One step of affine dynamics x' = A x + B u + c + w, w ~ N(0, noise_cov).
struct LinearParamStep {
  Matrix theta;  ///< d x (d+m+1), [A, B, c]
  Matrix noise_cov;

  Index state_dim() const noexcept { return theta.rows(); }
  Index action_dim() const noexcept { return theta.cols() - theta.rows() - 1; }
  Matrix a() const { return theta.leftCols(state_dim()); }
  Matrix b() const { return theta.middleCols(state_dim(), action_dim()); }
  Vector c() const { return theta.col(theta.cols() - 1); }
};

/// Gaussian belief over vec([A, B, c]) plus the additive process noise.
class ParameterBelief {
 public:
  ParameterBelief(Gaussian dist, Matrix noise_cov, Index state_dim, Index action_dim);

  const Gaussian& dist() const noexcept { return dist_; }
  const Matrix& noise_cov() const noexcept { return noise_cov_; }
  Index state_dim() const noexcept { return state_dim_; }
  Index action_dim() const noexcept { return action_dim_; }
  Index tau_dim() const noexcept { return state_dim_ + action_dim_ + 1; }

  /// M_theta with vec(M_theta) = mean.
  Matrix mean_matrix() const { return unvectorize(dist_.mean(), state_dim_); }

  /// Same noise and dimensions, different parameter distribution.
  ParameterBelief with_dist(Gaussian dist) const;

 private:
  Gaussian dist_;
  Matrix noise_cov_;
  Index state_dim_;
  Index action_dim_;
};

/// Stage cost (x-g)^T Cx (x-g) + u^T Cu u and terminal cost (x-g)^T CT (x-g).
class QuadraticCost {
 public:
  QuadraticCost(Matrix state_weight, Matrix action_weight, Matrix terminal_weight, Vector goal);

  const Matrix& state_weight() const noexcept { return state_weight_; }
  const Matrix& action_weight() const noexcept { return action_weight_; }
  const Matrix& terminal_weight() const noexcept { return terminal_weight_; }
  const Vector& goal() const noexcept { return goal_; }
  Index state_dim() const noexcept { return goal_.size(); }
  Index action_dim() const noexcept { return action_weight_.rows(); }

  double stage(const Vector& x, const Vector& u) const;
  double terminal(const Vector& x) const;

  /// Stage cost as tau^T H tau over tau = [x; u; 1].
  Matrix stage_homogeneous() const;
  QuadraticValue terminal_value() const;

 private:
  Matrix state_weight_;
  Matrix action_weight_;
  Matrix terminal_weight_;
  Vector goal_;
};

/// Continuous-time system x_dot = drift(x, u), stepped with RK4 over dt.
struct NonlinearSystem {
  using Drift = std::function<Vector(const Vector&, const Vector&)>;
  /// Returns (d drift/dx, d drift/du).
  using Jacobians = std::function<std::pair<Matrix, Matrix>(const Vector&, const Vector&)>;

  std::string name;
  Index state_dim = 0;
  Index action_dim = 0;
  Drift drift;
  Jacobians jacobians;
  double dt = 0.0;
  Matrix process_noise_cov;  ///< discrete-time
};

/// Finite-horizon problem with T states and T-1 transitions.
struct Problem {
  int horizon = 0;
  Gaussian initial;
  QuadraticCost cost;
  std::vector<ParameterBelief> nominal;  ///< length T-1
  std::optional<NonlinearSystem> system;  ///< set when re-linearization is wanted
  double sigma_theta = 0.0;               ///< isotropic std used when rebuilding the nominal

  Index state_dim() const { return initial.dim(); }
  Index action_dim() const { return cost.action_dim(); }
  /// Throws ContractViolation on inconsistent dimensions or lengths.
  void validate() const;
};

/// Next-state distribution with the parameters integrated out:
/// N(M tau, noise + S(tau) Sigma_theta S(tau)^T) with S(tau) = tau^T kron I.
Gaussian marginal_dynamics(const ParameterBelief& belief, const StateActionVector& tau);

/// S(tau) Sigma_theta S(tau)^T, the parameter contribution to the next-state covariance.
Matrix parameter_noise(const Matrix& param_cov, const Vector& tau, Index state_dim);

/// One RK4 step of the drift. Throws NumericalError on non-finite output.
Vector integrate(const NonlinearSystem& system, const Vector& x, const Vector& u);

/// Jacobians of the RK4 step map with respect to x and u, by the chain rule
/// through the four stages.
std::pair<Matrix, Matrix> integrate_jacobians(const NonlinearSystem& system, const Vector& x,
                                              const Vector& u);

/// First-order expansion of the discretized dynamics about each (x_t, u_t).
std::vector<LinearParamStep> linearize(const NonlinearSystem& system, const std::vector<Vector>& states,
                                       const std::vector<Vector>& actions);

/// Isotropic nominal beliefs N(vec(Theta_t), sigma_theta^2 I).
std::vector<ParameterBelief> nominal_belief(const std::vector<LinearParamStep>& steps, double sigma_theta);

/// Mean-state rollout of the nonlinear system under the given actions.
std::vector<Vector> rollout_states(const NonlinearSystem& system, const Vector& x0,
                                   const std::vector<Vector>& actions);

/// Problem whose nominal is linearized along the zero-action rollout from the
/// initial mean. The system is kept for re-linearization when `keep_system`.
Problem make_problem(const NonlinearSystem& system, int horizon, const Gaussian& initial,
                     const QuadraticCost& cost, double sigma_theta, bool keep_system);

}  // namespace drto

#pragma once

#include <optional>
#include <vector>

#include "drto/linear_gaussian_policy.hpp"
#include "drto/model.hpp"
#include "drto/policy.hpp"
#include "drto/propagate.hpp"
#include "drto/quadratic.hpp"

namespace drto {

/// W(theta) = theta^T quad theta + lin^T theta + constant over theta = vec([A, B, c]).
struct WStep {
  Matrix quad;
  Vector lin;
  double constant = 0.0;

  double operator()(const Vector& theta) const { return theta.dot(quad * theta) + lin.dot(theta) + constant; }
};

/// Expected continuation value as a function of the dynamics parameters:
/// W(theta) = E_{x ~ mu, u ~ step}[ E_{x' ~ N(Theta tau, noise_cov)} V(x') ].
/// With R = E[tau tau^T] the quadratic part is R ⊗ V.quad.
WStep w_function(const QuadraticValue& v_next, const Gaussian& mu, const PolicyStep& step, const Matrix& noise_cov);

/// Tilted parameter belief p(theta) ∝ center(theta) exp(-W(theta)/beta), beta < 0.
///
/// Precision Omega = Lambda + (2/beta) W.quad, information Lambda mu - (1/beta) W.lin.
/// Throws ExistenceFailure(step, min eigenvalue of Omega) when Omega is not PD.
/// `center_precision` may be passed to skip refactorizing the center.
ParameterBelief worst_case_step(const ParameterBelief& center, const WStep& w, double beta, int step = -1,
                                const Matrix* center_precision = nullptr);

struct ParamBackward {
  std::vector<ParameterBelief> worst;
  std::vector<QuadraticValue> values;  ///< adversarial values V^theta_t, values.back() = terminal cost
};

/// Adversarial backward pass: W_t from V^theta_{t+1} and q_traj[t], the tilt
/// of `center[t]`, then V^theta_t = E_{u ~ policy}[ c_t + E_{worst_t} V^theta_{t+1} ].
ParamBackward param_backward(const StateBeliefTrajectory& q_traj, const LinearGaussianPolicy& policy,
                             const QuadraticCost& cost, const std::vector<ParameterBelief>& center, double beta);

/// F = E_{mu1}[V^theta_1] + beta sum_t KL(worst_t || nominal_t) - beta delta,
/// dF/dbeta = sum_t KL(worst_t || nominal_t) - delta.
DualValue param_dual_and_grad(const QuadraticValue& v1, const Gaussian& mu1, const std::vector<ParameterBelief>& worst,
                              const std::vector<ParameterBelief>& nominal, double beta, double delta);

struct AdversaryOptions {
  double beta_init = -1e6;
  double lambda = 0.25;      ///< barycentric smoothing weight of the inner fixed point
  double inner_tol = 1e-3;   ///< max_t KL(q_t || mu_t) at the inner fixed point
  int inner_max_iters = 500;
  int stall_rounds = 5;      ///< rounds without a new best gap before declaring oscillation
  double dual_tol = 0.02;    ///< relative band on the KL budget during the beta search
  double budget_tol = 0.05;  ///< hard upper slack on the returned budget
  double beta_abs_min = 1e-14;  ///< |beta| search range
  double beta_abs_max = 1e20;
  int max_probes = 200;
  int fallback_rounds = 16;
  double fallback_fraction = 0.25;  ///< per-round budget delta_k = fraction * delta
  bool allow_fallback = true;
  /// Switch to the fallback at the first infeasible probe. Otherwise infeasible
  /// probes bound the bracket from the strong side and the fallback runs only
  /// when the budget cannot be reached before the existence boundary.
  bool fallback_on_first_failure = true;
};

struct AdversaryState {
  double beta = 0.0;
  std::vector<ParameterBelief> worst;
  std::vector<QuadraticValue> v_theta;
  StateBeliefTrajectory q_traj;  ///< smoothed beliefs the W functions were built on
  std::vector<double> kl_per_step;  ///< KL(worst_t || nominal_t)
};

struct AdversaryReport {
  double beta = 0.0;
  double kl = 0.0;          ///< sum_t KL(worst_t || nominal_t)
  bool active = false;
  bool used_fallback = false;
  int fallback_rounds = 0;
  int probes = 0;
  int inner_iterations = 0;
  std::vector<TemperatureSample> trace;  ///< (beta, sum KL) per probe, NaN when infeasible
};

struct AdversaryResult {
  AdversaryState state;
  StateBeliefTrajectory traj;  ///< forward pass of the policy under the worst beliefs
  AdversaryReport report;
};

/// Inner fixed point at a fixed beta: alternate param_backward on q, a forward
/// pass under the tilted beliefs, and q_t <- barycentric(mu_t, q_t, lambda)
/// until max_t KL(q_t || mu_t) <= inner_tol. `center` is the distribution being
/// tilted and `nominal` the one KL is reported against. Throws ExistenceFailure,
/// NumericalError (including a stalled fixed point).
AdversaryResult adversary_fixed_point(const std::vector<ParameterBelief>& center,
                                      const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                                      const Gaussian& mu1, const QuadraticCost& cost, double beta,
                                      const AdversaryOptions& opts = {},
                                      const std::optional<StateBeliefTrajectory>& q_init = std::nullopt);

/// Starting point for a search, typically the previous outer iteration's
/// outcome. Only the initial probe and the initial smoothed trajectory change;
/// the tilt is still centered at the nominal.
struct AdversaryHint {
  double beta = 0.0;  ///< ignored unless negative
  StateBeliefTrajectory q_traj;
};

/// Worst-case parameter beliefs within sum_t KL(p_t || nominal_t) <= delta for a fixed policy.
///
/// Searches log|beta| by bracketing and false position starting at beta_init
/// (or the hint). An
/// existence failure or a stalled fixed point at any probe switches to a
/// sequence of smaller trust regions centered at the current iterate.
/// Throws AdversaryInfeasible when neither mode yields a belief.
AdversaryResult optimize_worst_case(const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                                    const Gaussian& mu1, const QuadraticCost& cost, double delta,
                                    const AdversaryOptions& opts = {}, const AdversaryHint* hint = nullptr);

}  // namespace drto

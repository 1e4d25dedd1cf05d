#pragma once

#include <vector>

#include "drto/linear_gaussian_policy.hpp"
#include "drto/model.hpp"
#include "drto/propagate.hpp"
#include "drto/quadratic.hpp"

namespace drto {

/// Q(x,u) = c(x,u) + E_{theta ~ belief} E_{x' | x,u,theta}[V(x')], exactly.
///
/// The parameter uncertainty adds tr(V S(tau) Sigma_theta S(tau)^T), a
/// quadratic form in tau that is folded into the blocks.
QuadraticQ q_function(const QuadraticCost& cost, const QuadraticValue& v_next, const ParameterBelief& belief);

struct PolicyStepResult {
  PolicyStep step;
  QuadraticValue value;  ///< soft value -alpha log E_prev[exp(-Q/alpha)]
};

/// Exponential tilt pi_new(u|x) ∝ pi_prev(u|x) exp(-Q(x,u)/alpha).
///
/// New precision Sigma_prev^{-1} + (2/alpha) Quu; the mean stays affine in x.
/// The returned value is the soft-min
///   V(x) = -alpha log ∫ pi_prev(u|x) exp(-Q(x,u)/alpha) du,
/// which tends to E_prev[Q] as alpha grows and to min_u Q as alpha shrinks.
/// Throws BackwardPassFailure(step, eigenvalue) when the tilted precision is not PD.
PolicyStepResult policy_step(const PolicyStep& prev, const QuadraticQ& q, double alpha, int step = -1);

struct PolicyBackward {
  LinearGaussianPolicy policy;
  std::vector<QuadraticValue> values;  ///< length T, values.back() is the terminal cost
};

/// Soft Bellman recursion from V_T = c_T down to t = 0.
PolicyBackward policy_backward(const LinearGaussianPolicy& prev, const std::vector<ParameterBelief>& beliefs,
                               const QuadraticCost& cost, double alpha);

/// E_{x ~ state}[ KL(next(.|x) || prev(.|x)) ], closed form (the KL is quadratic in x).
double expected_conditional_kl(const PolicyStep& next, const PolicyStep& prev, const Gaussian& state);

/// Sum over t of expected_conditional_kl along `traj`.
double policy_kl(const LinearGaussianPolicy& next, const LinearGaussianPolicy& prev, const StateBeliefTrajectory& traj);

struct DualValue {
  double value = 0.0;
  double gradient = 0.0;
};

/// G = E_{mu1}[V_1] - alpha epsilon and dG/dalpha = sum_t E_{mu_t} KL(new || prev) - epsilon,
/// with `traj` propagated under the new policy.
DualValue policy_dual_and_grad(const LinearGaussianPolicy& next, const LinearGaussianPolicy& prev,
                               const StateBeliefTrajectory& traj, const QuadraticValue& v1, const Gaussian& mu1,
                               double epsilon, double alpha);

struct PolicyOptions {
  double alpha_init = 100.0;
  double dual_tol = 0.02;  ///< relative tolerance on sum KL - epsilon
  double alpha_min = 1e-10;
  double alpha_max = 1e30;
  int max_probes = 200;
};

struct TemperatureSample {
  double temperature = 0.0;
  double kl = 0.0;  ///< NaN for infeasible probes
};

struct PolicyReport {
  double alpha = 0.0;
  double kl = 0.0;
  bool active = false;
  int probes = 0;
  std::vector<TemperatureSample> trace;
};

struct PolicyUpdate {
  LinearGaussianPolicy policy;
  StateBeliefTrajectory traj;  ///< forward pass under the new policy
  std::vector<QuadraticValue> values;
  PolicyReport report;
};

/// Trust-region policy update: find alpha with sum_t E_{mu_t} KL(new||prev) = epsilon
/// by log-space bracketing and false position, returning the last iterate whose KL
/// is at most (1 + dual_tol) epsilon. Throws InfeasibleTrustRegion.
PolicyUpdate optimize_policy(const LinearGaussianPolicy& prev, const std::vector<ParameterBelief>& beliefs,
                             const Gaussian& mu1, const QuadraticCost& cost, double epsilon,
                             const PolicyOptions& opts = {});

/// tau-space evaluation of a policy step: V(x) = E_{u ~ step(.|x)}[tau^T H tau]
/// for a homogeneous quadratic H over [x; u; 1].
QuadraticValue expect_over_policy(const Matrix& h, const PolicyStep& step);

}  // namespace drto

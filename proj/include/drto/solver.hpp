#pragma once

#include <cstdint>
#include <vector>

#include "drto/adversary.hpp"
#include "drto/linear_gaussian_policy.hpp"
#include "drto/model.hpp"
#include "drto/policy.hpp"

namespace drto {

struct SolveConfig {
  double epsilon = 0.25;  ///< policy trust region
  double delta = 0.0;     ///< ambiguity radius
  int outer_iters = 100;  ///< hard cap K on outer iterations
  double lambda = 0.25;   ///< inner smoothing weight of the adversary
  double inner_tol = 1e-3;
  double dual_tol = 0.02;
  double budget_tol = 0.05;
  double conv_tol = 1e-4;  ///< relative change in cost for early exit
  double sigma_pi = 1.0;   ///< initial policy standard deviation
  bool relinearize = false;
  bool warm_start = false;  ///< seed each adversary search with the previous beta and state beliefs
  /// See AdversaryOptions::fallback_on_first_failure.
  bool fallback_on_first_failure = true;
  std::uint64_t seed = 0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  AdversaryOptions adversary_options() const;
  PolicyOptions policy_options() const;
};

struct IterationRecord {
  int k = 0;
  double cost_nominal = 0.0;       ///< J(pi^{k+1}, nominal)
  double cost_worst = 0.0;         ///< J(pi^{k+1}, worst^{k+1})
  double cost_worst_before = 0.0;  ///< J(pi^k, worst^{k+1}), the adversary's objective
  double adversary_kl = 0.0;
  double policy_kl = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool adversary_active = false;
  bool policy_active = false;
  bool used_fallback = false;
};

struct SolveReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  double wall_seconds = 0.0;
};

struct RobustSolution {
  LinearGaussianPolicy policy;
  std::vector<ParameterBelief> worst;
  std::vector<ParameterBelief> nominal;  ///< nominal the final worst case was computed against
  SolveReport report;
};

struct StochasticSolution {
  LinearGaussianPolicy policy;
  std::vector<ParameterBelief> nominal;  ///< final linearization
  SolveReport report;
};

/// Alternates optimize_worst_case and optimize_policy from a zero-mean policy
/// with covariance sigma_pi^2 I. With problem.system set and relinearize on,
/// the nominal is rebuilt about the mean trajectory before the next iteration.
RobustSolution solve_robust(const Problem& problem, const SolveConfig& config);

/// Policy updates under the nominal only, until the expected cost changes by
/// less than conv_tol (relative) or K iterations ran.
StochasticSolution solve_stochastic(const Problem& problem, const SolveConfig& config);

/// One optimize_worst_case run against a fixed policy.
AdversaryResult attack(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& nominal,
                       const Problem& problem, const SolveConfig& config);

/// Re-linearizes problem.system about the mean states of `traj` and the mean
/// actions of `policy`, with the problem's sigma_theta.
std::vector<ParameterBelief> relinearize_about(const Problem& problem, const LinearGaussianPolicy& policy,
                                               const StateBeliefTrajectory& traj);

}  // namespace drto

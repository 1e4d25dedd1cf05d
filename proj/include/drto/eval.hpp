#pragma once

#include <cstdint>
#include <vector>

#include "drto/linear_gaussian_policy.hpp"
#include "drto/model.hpp"
#include "drto/propagate.hpp"

namespace drto {

/// sum_t E_{mu_t x pi_t}[c_t] + E_{mu_T}[c_T] along a given state trajectory.
double expected_cost_along(const StateBeliefTrajectory& traj, const LinearGaussianPolicy& policy,
                           const QuadraticCost& cost);

/// Forward pass under `beliefs`, then closed-form expected cost.
double expected_cost(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& beliefs,
                     const Gaussian& mu1, const QuadraticCost& cost);

struct SweepRow {
  double lambda = 0.0;
  double distance = 0.0;  ///< sum_t KL(interpolant_t || nominal_t)
  double cost_stochastic = 0.0;
  double cost_robust = 0.0;
  bool valid = true;  ///< false when an extrapolated precision was not PD or propagation failed
};

/// lambda_max * i / (points - 1), i = 0..points-1.
std::vector<double> sweep_grid(int points = 21, double lambda_max = 2.0);

/// Per lambda, interpolant_t = precision_interpolate(worst_t, nominal_t, lambda);
/// lambda = 0 is the nominal, 1 the worst case, larger values extrapolate.
/// Invalid rows carry NaN in every numeric field except lambda.
std::vector<SweepRow> adversary_sweep(const LinearGaussianPolicy& stochastic, const LinearGaussianPolicy& robust,
                                      const std::vector<ParameterBelief>& nominal,
                                      const std::vector<ParameterBelief>& worst, const std::vector<double>& grid,
                                      const Gaussian& mu1, const QuadraticCost& cost);

/// True when the valid rows' distances are non-decreasing over lambda in [0, 1].
bool sweep_distance_monotone(const std::vector<SweepRow>& rows);

/// KL(worst_t || nominal_t) per step.
std::vector<double> kl_profile(const std::vector<ParameterBelief>& worst, const std::vector<ParameterBelief>& nominal);

struct RolloutStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::vector<std::vector<Vector>> trajectories;  ///< first `keep` sampled state sequences
};

/// Monte Carlo cost estimate: theta_t ~ beliefs_t, x_1 ~ mu1, u_t ~ pi_t(.|x_t),
/// x_{t+1} ~ N(Theta_t tau_t, noise_t). theta_t is integrated out exactly per
/// step: x_{t+1} | tau_t ~ N(M_t tau_t, noise_t + S(tau_t) Sigma_theta S(tau_t)^T).
/// Sample i uses its own generator seeded from (seed, i), so results do not
/// depend on evaluation order.
RolloutStats mc_rollout(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& beliefs,
                        const Gaussian& mu1, const QuadraticCost& cost, std::size_t samples, std::uint64_t seed,
                        std::size_t keep = 0);

}  // namespace drto

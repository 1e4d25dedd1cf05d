#pragma once

#include <vector>

#include "drto/gauss.hpp"
#include "drto/linear_gaussian_policy.hpp"
#include "drto/model.hpp"

namespace drto {

/// Gaussian state beliefs mu_1..mu_T along the horizon.
using StateBeliefTrajectory = std::vector<Gaussian>;

/// Joint of [x; u; xi] under x ~ mu, u | x ~ policy, xi ~ N(0, I_d) independent.
Gaussian augment(const Gaussian& mu, const PolicyStep& step);

/// E[tau tau^T] for tau = [x; u; 1] with x ~ mu and u | x ~ step.
Matrix tau_second_moment(const Gaussian& mu, const PolicyStep& step);

/// Spherical-radial cubature points of g: mean +- sqrt(n) L e_j, equal weights 1/(2n).
std::vector<Vector> cubature_points(const Gaussian& g);

/// Moment-matched next-state belief: the augmented joint is pushed through
/// x' = M tau + chol(Sigma(tau)) xi with the 2n-point cubature rule.
/// `step` only annotates errors.
Gaussian cubature_step(const Gaussian& mu, const PolicyStep& policy_step, const ParameterBelief& belief,
                       int step = -1);

/// beliefs[0] = mu1, beliefs[t+1] = cubature_step(beliefs[t], policy[t], params[t]).
StateBeliefTrajectory forward_pass(const Gaussian& mu1, const LinearGaussianPolicy& policy,
                                   const std::vector<ParameterBelief>& params);

}  // namespace drto

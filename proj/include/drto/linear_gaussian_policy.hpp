#pragma once

#include <vector>

#include "drto/gauss.hpp"

namespace drto {

/// pi_t(u | x) = N(u | gain x + offset, cov).
struct PolicyStep {
  Matrix gain;
  Vector offset;
  Matrix cov;

  Index state_dim() const noexcept { return gain.cols(); }
  Index action_dim() const noexcept { return offset.size(); }
  Vector mean_action(const Vector& x) const { return gain * x + offset; }
  /// [gain, offset], the mean action as a map of [x; 1].
  Matrix affine() const;
};

/// Time-varying linear-Gaussian policy over T-1 steps.
struct LinearGaussianPolicy {
  std::vector<PolicyStep> steps;

  std::size_t size() const noexcept { return steps.size(); }
  const PolicyStep& operator[](std::size_t t) const { return steps[t]; }

  /// Zero gain, zero offset, cov = sigma^2 I at every step.
  static LinearGaussianPolicy zero_mean(std::size_t steps, Index state_dim, Index action_dim, double sigma);
};

}  // namespace drto

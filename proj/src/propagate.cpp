#include "drto/propagate.hpp"

#include <cmath>
#include <string>

#include "drto/errors.hpp"

namespace drto {

Matrix PolicyStep::affine() const {
  Matrix p(gain.rows(), gain.cols() + 1);
  p << gain, offset;
  return p;
}

LinearGaussianPolicy LinearGaussianPolicy::zero_mean(std::size_t steps, Index d, Index m, double sigma) {
  if (!(sigma > 0.0)) throw ContractViolation("zero_mean policy: sigma must be positive");
  LinearGaussianPolicy policy;
  policy.steps.assign(steps, PolicyStep{Matrix::Zero(m, d), Vector::Zero(m), sigma * sigma * Matrix::Identity(m, m)});
  return policy;
}

Gaussian augment(const Gaussian& mu, const PolicyStep& step) {
  const Index d = mu.dim();
  const Index m = step.action_dim();
  if (step.state_dim() != d) throw ContractViolation("augment: policy gain does not match state dimension");
  const Index n = d + m + d;
  Vector mean = Vector::Zero(n);
  mean.head(d) = mu.mean();
  mean.segment(d, m) = step.mean_action(mu.mean());
  const Matrix sx_kt = mu.cov() * step.gain.transpose();
  Matrix cov = Matrix::Zero(n, n);
  cov.block(0, 0, d, d) = mu.cov();
  cov.block(0, d, d, m) = sx_kt;
  cov.block(d, 0, m, d) = sx_kt.transpose();
  cov.block(d, d, m, m) = step.cov + step.gain * sx_kt;
  cov.block(d + m, d + m, d, d).setIdentity();
  return {std::move(mean), std::move(cov)};
}

Matrix tau_second_moment(const Gaussian& mu, const PolicyStep& step) {
  const Index d = mu.dim();
  const Index m = step.action_dim();
  if (step.state_dim() != d) throw ContractViolation("tau_second_moment: policy gain does not match state dimension");
  const Index n = d + m + 1;
  Vector mean(n);
  mean << mu.mean(), step.mean_action(mu.mean()), 1.0;
  const Matrix sk = mu.cov() * step.gain.transpose();
  Matrix r = Matrix::Zero(n, n);
  r.block(0, 0, d, d) = mu.cov();
  r.block(0, d, d, m) = sk;
  r.block(d, 0, m, d) = sk.transpose();
  r.block(d, d, m, m) = step.cov + step.gain * sk;
  r.noalias() += mean * mean.transpose();
  return r;
}

std::vector<Vector> cubature_points(const Gaussian& g) {
  const Index n = g.dim();
  const Matrix l = safe_cholesky(g.cov(), "cubature: covariance").lower;
  const double radius = std::sqrt(static_cast<double>(n));
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(2 * n));
  for (Index j = 0; j < n; ++j) {
    points.push_back(g.mean() + radius * l.col(j));
    points.push_back(g.mean() - radius * l.col(j));
  }
  return points;
}

Gaussian cubature_step(const Gaussian& mu, const PolicyStep& policy_step, const ParameterBelief& belief, int step) {
  const Index d = mu.dim();
  const Index m = policy_step.action_dim();
  if (belief.state_dim() != d || belief.action_dim() != m) {
    throw ContractViolation("cubature_step: belief dimensions do not match state/policy");
  }
  std::vector<Vector> points;
  try {
    points = cubature_points(augment(mu, policy_step));
  } catch (const NotPositiveDefinite& e) {
    throw NumericalError(std::string("cubature_step: ") + e.what(), step);
  }

  const Matrix mean_map = belief.mean_matrix();
  Vector tau(d + m + 1);
  Vector cached_tau;
  Matrix cached_sqrt;

  std::vector<Vector> outputs;
  outputs.reserve(points.size());
  for (const Vector& p : points) {
    tau << p.head(d + m), 1.0;
    Vector y = mean_map * tau;
    const auto xi = p.tail(d);
    if (!xi.isZero(0.0)) {
      if (cached_tau.size() == 0 || cached_tau != tau) {
        const Matrix cov = belief.noise_cov() + parameter_noise(belief.dist().cov(), tau, d);
        try {
          cached_sqrt = safe_cholesky(cov, "cubature: Sigma(tau)").lower;
        } catch (const NotPositiveDefinite& e) {
          throw NumericalError(std::string("cubature_step: ") + e.what(), step);
        }
        cached_tau = tau;
      }
      y.noalias() += cached_sqrt * xi;
    }
    if (!y.allFinite()) throw NumericalError("cubature_step: non-finite propagated point", step);
    outputs.push_back(std::move(y));
  }

  const double w = 1.0 / static_cast<double>(outputs.size());
  Vector mean = Vector::Zero(d);
  for (const auto& y : outputs) mean += w * y;
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& y : outputs) {
    const Vector e = y - mean;
    cov.noalias() += w * e * e.transpose();
  }
  cov = symmetrized(cov);
  try {
    const double jitter = safe_cholesky(cov, "cubature: propagated covariance").jitter;
    if (jitter > 0.0) cov += jitter * Matrix::Identity(d, d);
  } catch (const NotPositiveDefinite& e) {
    throw NumericalError(std::string("cubature_step: ") + e.what(), step);
  }
  return {std::move(mean), std::move(cov)};
}

StateBeliefTrajectory forward_pass(const Gaussian& mu1, const LinearGaussianPolicy& policy,
                                   const std::vector<ParameterBelief>& params) {
  if (policy.size() != params.size()) {
    throw ContractViolation("forward_pass: policy has " + std::to_string(policy.size()) + " steps but " +
                            std::to_string(params.size()) + " parameter beliefs were given");
  }
  StateBeliefTrajectory traj;
  traj.reserve(params.size() + 1);
  traj.push_back(mu1);
  for (std::size_t t = 0; t < params.size(); ++t) {
    traj.push_back(cubature_step(traj.back(), policy[t], params[t], static_cast<int>(t)));
  }
  return traj;
}

}  // namespace drto

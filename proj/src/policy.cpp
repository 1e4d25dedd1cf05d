#include "drto/policy.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "drto/errors.hpp"
#include "drto/temperature_search.hpp"

namespace drto {

namespace {

// Rows of [x; u; 1] as an affine map of [x; 1] when u = P [x; 1].
Matrix lift(const Matrix& affine, Index d) {
  const Index m = affine.rows();
  Matrix t = Matrix::Zero(d + m + 1, d + 1);
  t.topLeftCorner(d, d).setIdentity();
  t.block(d, 0, m, d + 1) = affine;
  t(d + m, d) = 1.0;
  return t;
}

}  // namespace

QuadraticQ q_function(const QuadraticCost& cost, const QuadraticValue& v_next, const ParameterBelief& belief) {
  const Index d = belief.state_dim();
  const Index m = belief.action_dim();
  const Index n = d + m + 1;
  if (cost.state_dim() != d || cost.action_dim() != m || v_next.dim() != d) {
    throw ContractViolation("q_function: cost, value and belief dimensions disagree");
  }
  Matrix mt(d + 1, n);
  mt.topRows(d) = belief.mean_matrix();
  mt.row(d).setZero();
  mt(d, n - 1) = 1.0;

  const Matrix vq = symmetrized(v_next.quad);
  Matrix h = mt.transpose() * v_next.homogeneous() * mt + cost.stage_homogeneous();

  const Matrix& sig = belief.dist().cov();
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      h(a, b) += vq.cwiseProduct(sig.block(a * d, b * d, d, d)).sum();
    }
  }
  h(n - 1, n - 1) += vq.cwiseProduct(belief.noise_cov()).sum();
  return QuadraticQ::from_homogeneous(h, d, m);
}

QuadraticValue expect_over_policy(const Matrix& h, const PolicyStep& step) {
  const Index d = step.state_dim();
  const Index m = step.action_dim();
  if (h.rows() != d + m + 1 || h.cols() != d + m + 1) {
    throw ContractViolation("expect_over_policy: homogeneous form has the wrong size");
  }
  const Matrix t = lift(step.affine(), d);
  Matrix v = t.transpose() * h * t;
  v(d, d) += h.block(d, d, m, m).cwiseProduct(step.cov).sum();
  return QuadraticValue::from_homogeneous(v);
}

PolicyStepResult policy_step(const PolicyStep& prev, const QuadraticQ& q, double alpha, int step) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractViolation("policy_step: alpha must be positive");
  const Index d = prev.state_dim();
  const Index m = prev.action_dim();
  if (q.state_dim() != d || q.action_dim() != m) throw ContractViolation("policy_step: Q does not match policy");

  const Eigen::LLT<Matrix> llt(prev.cov);
  if (llt.info() != Eigen::Success) throw ContractViolation("policy_step: previous covariance is not PD");
  const Matrix l = llt.matrixL();

  // Whitened curvature: Sigma_new = L (I + E)^{-1} L^T.
  const Matrix e_mat = symmetrized((2.0 / alpha) * l.transpose() * symmetrized(q.uu) * l);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(e_mat);
  const Vector e = es.eigenvalues();
  const double min_shift = 1.0 + e.minCoeff();
  if (!(min_shift > 1e-12)) throw BackwardPassFailure(step, min_shift);

  Matrix cov_new;
  if (e_mat.isZero(0.0)) {
    cov_new = prev.cov;
  } else {
    const Matrix lu = l * es.eigenvectors();
    cov_new = symmetrized(lu * (1.0 + e.array()).inverse().matrix().asDiagonal() * lu.transpose());
  }

  Matrix g(m, d + 1);
  g << 2.0 * q.xu.transpose(), q.u_lin;
  const Matrix p_mu = prev.affine();
  const Matrix delta = -(1.0 / alpha) * cov_new * (g + 2.0 * q.uu * p_mu);
  const Matrix p_nu = p_mu + delta;

  PolicyStep next{p_nu.leftCols(d), p_nu.col(d), cov_new};

  const Matrix t = lift(p_nu, d);
  Matrix v = t.transpose() * q.homogeneous() * t;
  v.noalias() += (0.5 * alpha) * delta.transpose() * llt.solve(delta);
  v(d, d) += 0.5 * alpha * e.array().log1p().sum();
  if (!v.allFinite()) throw NumericalError("policy_step: non-finite soft value", step);
  return {std::move(next), QuadraticValue::from_homogeneous(v)};
}

PolicyBackward policy_backward(const LinearGaussianPolicy& prev, const std::vector<ParameterBelief>& beliefs,
                               const QuadraticCost& cost, double alpha) {
  if (prev.size() != beliefs.size()) {
    throw ContractViolation("policy_backward: policy has " + std::to_string(prev.size()) + " steps but " +
                            std::to_string(beliefs.size()) + " parameter beliefs were given");
  }
  const std::size_t steps = prev.size();
  PolicyBackward out;
  out.policy.steps.resize(steps);
  out.values.resize(steps + 1);
  out.values[steps] = cost.terminal_value();
  for (std::size_t i = steps; i-- > 0;) {
    const QuadraticQ q = q_function(cost, out.values[i + 1], beliefs[i]);
    PolicyStepResult r = policy_step(prev[i], q, alpha, static_cast<int>(i));
    out.policy.steps[i] = std::move(r.step);
    out.values[i] = std::move(r.value);
  }
  return out;
}

double expected_conditional_kl(const PolicyStep& next, const PolicyStep& prev, const Gaussian& state) {
  const Index d = prev.state_dim();
  const Index m = prev.action_dim();
  if (next.state_dim() != d || next.action_dim() != m || state.dim() != d) {
    throw ContractViolation("expected_conditional_kl: dimension mismatch");
  }
  const Matrix delta = next.affine() - prev.affine();
  const double cov_part = kl_gaussian(Gaussian(Vector::Zero(m), next.cov), Gaussian(Vector::Zero(m), prev.cov));
  if (delta.isZero(0.0)) return cov_part;

  Matrix zz(d + 1, d + 1);
  zz.topLeftCorner(d, d) = state.cov() + state.mean() * state.mean().transpose();
  zz.topRightCorner(d, 1) = state.mean();
  zz.bottomLeftCorner(1, d) = state.mean().transpose();
  zz(d, d) = 1.0;

  const Eigen::LLT<Matrix> llt(prev.cov);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("expected_conditional_kl: previous covariance", 0.0);
  const Matrix form = delta.transpose() * llt.solve(delta);
  return cov_part + std::max(0.0, 0.5 * form.cwiseProduct(zz).sum());
}

double policy_kl(const LinearGaussianPolicy& next, const LinearGaussianPolicy& prev, const StateBeliefTrajectory& traj) {
  if (next.size() != prev.size() || traj.size() < next.size()) {
    throw ContractViolation("policy_kl: policy and trajectory lengths disagree");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < next.size(); ++t) total += expected_conditional_kl(next[t], prev[t], traj[t]);
  return total;
}

DualValue policy_dual_and_grad(const LinearGaussianPolicy& next, const LinearGaussianPolicy& prev,
                               const StateBeliefTrajectory& traj, const QuadraticValue& v1, const Gaussian& mu1,
                               double epsilon, double alpha) {
  return {v1.expectation(mu1) - alpha * epsilon, policy_kl(next, prev, traj) - epsilon};
}

PolicyUpdate optimize_policy(const LinearGaussianPolicy& prev, const std::vector<ParameterBelief>& beliefs,
                             const Gaussian& mu1, const QuadraticCost& cost, double epsilon,
                             const PolicyOptions& opts) {
  if (!(epsilon > 0.0)) throw ContractViolation("optimize_policy: epsilon must be positive");
  if (!(opts.alpha_init > 0.0)) throw ContractViolation("optimize_policy: alpha_init must be positive");

  PolicyReport report;
  auto probe = [&](double s) -> std::optional<std::pair<double, PolicyUpdate>> {
    const double alpha = std::exp(s);
    try {
      PolicyBackward back = policy_backward(prev, beliefs, cost, alpha);
      StateBeliefTrajectory traj = forward_pass(mu1, back.policy, beliefs);
      const double kl = policy_kl(back.policy, prev, traj);
      if (!std::isfinite(kl)) throw NumericalError("optimize_policy: non-finite KL", -1);
      report.trace.push_back({alpha, kl});
      return std::make_pair(kl, PolicyUpdate{std::move(back.policy), std::move(traj), std::move(back.values), {}});
    } catch (const BackwardPassFailure&) {
    } catch (const NumericalError&) {
    } catch (const NotPositiveDefinite&) {
    }
    report.trace.push_back({alpha, std::numeric_limits<double>::quiet_NaN()});
    return std::nullopt;
  };

  TemperatureSearchSettings cfg;
  cfg.target = epsilon;
  cfg.rel_tol = opts.dual_tol;
  cfg.s_min = std::log(opts.alpha_min);
  cfg.s_max = std::log(opts.alpha_max);
  cfg.max_probes = opts.max_probes;
  auto outcome = search_temperature<PolicyUpdate>(probe, std::log(opts.alpha_init), cfg);
  if (!outcome.result) {
    throw InfeasibleTrustRegion("optimize_policy: no temperature keeps the policy KL within " +
                                std::to_string(epsilon));
  }
  PolicyUpdate out = std::move(*outcome.result);
  report.alpha = std::exp(outcome.temperature_log);
  report.kl = outcome.metric;
  report.active = outcome.active;
  report.probes = static_cast<int>(outcome.trace.size());
  out.report = std::move(report);
  return out;
}

}  // namespace drto

#include "drto/adversary.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drto/errors.hpp"
#include "drto/temperature_search.hpp"

namespace drto {

namespace {

std::vector<Matrix> precisions(const std::vector<ParameterBelief>& beliefs) {
  std::vector<Matrix> out;
  out.reserve(beliefs.size());
  for (const auto& b : beliefs) out.push_back(b.dist().precision());
  return out;
}

std::vector<double> kl_steps(const std::vector<ParameterBelief>& p, const std::vector<ParameterBelief>& q) {
  if (p.size() != q.size()) throw ContractViolation("parameter KL: sequences differ in length");
  std::vector<double> out(p.size());
  for (std::size_t t = 0; t < p.size(); ++t) out[t] = kl_gaussian(p[t].dist(), q[t].dist());
  return out;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

ParamBackward backward_impl(const StateBeliefTrajectory& q_traj, const LinearGaussianPolicy& policy,
                            const QuadraticCost& cost, const std::vector<ParameterBelief>& center,
                            const std::vector<Matrix>* center_prec, double beta) {
  const std::size_t steps = policy.size();
  if (center.size() != steps) {
    throw ContractViolation("param_backward: policy has " + std::to_string(steps) + " steps but " +
                            std::to_string(center.size()) + " parameter beliefs were given");
  }
  if (q_traj.size() < steps) throw ContractViolation("param_backward: state trajectory is too short");

  ParamBackward out;
  out.values.resize(steps + 1);
  out.values[steps] = cost.terminal_value();
  std::vector<ParameterBelief> reversed;
  reversed.reserve(steps);
  for (std::size_t i = steps; i-- > 0;) {
    const int t = static_cast<int>(i);
    const WStep w = w_function(out.values[i + 1], q_traj[i], policy[i], center[i].noise_cov());
    ParameterBelief worst = worst_case_step(center[i], w, beta, t, center_prec ? &(*center_prec)[i] : nullptr);
    const QuadraticQ q = q_function(cost, out.values[i + 1], worst);
    out.values[i] = expect_over_policy(q.homogeneous(), policy[i]);
    reversed.push_back(std::move(worst));
  }
  out.worst.assign(std::make_move_iterator(reversed.rbegin()), std::make_move_iterator(reversed.rend()));
  return out;
}

struct FixedPointRun {
  AdversaryResult result;
  int iterations = 0;
};

FixedPointRun fixed_point_impl(const std::vector<ParameterBelief>& center, const std::vector<Matrix>& center_prec,
                               const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                               const Gaussian& mu1, const QuadraticCost& cost, double beta,
                               const AdversaryOptions& opts, const std::optional<StateBeliefTrajectory>& q_init) {
  if (!(opts.lambda > 0.0 && opts.lambda <= 1.0)) throw ContractViolation("adversary: lambda must lie in (0, 1]");
  StateBeliefTrajectory q = q_init ? *q_init : forward_pass(mu1, policy, center);
  if (q.size() != policy.size() + 1) throw ContractViolation("adversary: initial state trajectory has wrong length");

  double best_gap = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int it = 1; it <= opts.inner_max_iters; ++it) {
    ParamBackward back = backward_impl(q, policy, cost, center, &center_prec, beta);
    StateBeliefTrajectory mu = forward_pass(mu1, policy, back.worst);

    double gap = 0.0;
    for (std::size_t t = 0; t < q.size(); ++t) gap = std::max(gap, kl_gaussian(q[t], mu[t]));
    if (!std::isfinite(gap)) throw NumericalError("adversary: non-finite fixed-point gap", -1);

    if (gap <= opts.inner_tol) {
      FixedPointRun run;
      run.iterations = it;
      AdversaryState& st = run.result.state;
      st.beta = beta;
      st.kl_per_step = kl_steps(back.worst, nominal);
      st.worst = std::move(back.worst);
      st.v_theta = std::move(back.values);
      st.q_traj = std::move(q);
      run.result.traj = std::move(mu);
      return run;
    }
    if (gap < best_gap) {
      best_gap = gap;
      stall = 0;
    } else if (++stall >= opts.stall_rounds) {
      throw NumericalError("adversary: inner fixed point stalled at gap " + std::to_string(gap), -1);
    }
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = barycentric(mu[t], q[t], opts.lambda);
  }
  throw NumericalError("adversary: inner fixed point did not converge in " + std::to_string(opts.inner_max_iters) +
                           " iterations",
                       -1);
}

}  // namespace

WStep w_function(const QuadraticValue& v_next, const Gaussian& mu, const PolicyStep& step, const Matrix& noise_cov) {
  const Index d = mu.dim();
  const Index m = step.action_dim();
  const Index n = d + m + 1;
  if (step.state_dim() != d || v_next.dim() != d || noise_cov.rows() != d || noise_cov.cols() != d) {
    throw ContractViolation("w_function: dimension mismatch");
  }
  const Matrix r = tau_second_moment(mu, step);
  const Vector mean = r.col(n - 1);

  const Matrix vq = symmetrized(v_next.quad);
  const Index p = n * d;
  WStep w{Matrix(p, p), Vector(p), v_next.constant + vq.cwiseProduct(noise_cov).sum()};
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) w.quad.block(a * d, b * d, d, d) = r(a, b) * vq;
    w.lin.segment(a * d, d) = mean(a) * v_next.lin;
  }
  return w;
}

ParameterBelief worst_case_step(const ParameterBelief& center, const WStep& w, double beta, int step,
                                const Matrix* center_precision) {
  if (!(beta < 0.0) || !std::isfinite(beta)) throw ContractViolation("worst_case_step: beta must be negative");
  const Index p = center.dist().dim();
  if (w.quad.rows() != p || w.quad.cols() != p || w.lin.size() != p) {
    throw ContractViolation("worst_case_step: W has dimension " + std::to_string(w.lin.size()) +
                            ", belief has " + std::to_string(p));
  }
  if (w.quad.isZero(0.0) && w.lin.isZero(0.0)) return center;

  const Matrix lam = center_precision ? *center_precision : center.dist().precision();
  const Matrix omega = symmetrized(lam + (2.0 / beta) * w.quad);
  const Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(omega, Eigen::EigenvaluesOnly).eigenvalues()(0);
    throw ExistenceFailure(step, min_eig);
  }
  const Vector& mu = center.dist().mean();
  const Vector rhs = -(1.0 / beta) * w.lin - (2.0 / beta) * (w.quad * mu);
  Vector mean = mu + llt.solve(rhs);
  Matrix cov = llt.solve(Matrix::Identity(p, p));
  if (!mean.allFinite() || !cov.allFinite()) throw NumericalError("worst_case_step: non-finite tilted belief", step);
  return center.with_dist(Gaussian(std::move(mean), std::move(cov)));
}

ParamBackward param_backward(const StateBeliefTrajectory& q_traj, const LinearGaussianPolicy& policy,
                             const QuadraticCost& cost, const std::vector<ParameterBelief>& center, double beta) {
  return backward_impl(q_traj, policy, cost, center, nullptr, beta);
}

DualValue param_dual_and_grad(const QuadraticValue& v1, const Gaussian& mu1, const std::vector<ParameterBelief>& worst,
                              const std::vector<ParameterBelief>& nominal, double beta, double delta) {
  const double kl = sum(kl_steps(worst, nominal));
  return {v1.expectation(mu1) + beta * kl - beta * delta, kl - delta};
}

AdversaryResult adversary_fixed_point(const std::vector<ParameterBelief>& center,
                                      const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                                      const Gaussian& mu1, const QuadraticCost& cost, double beta,
                                      const AdversaryOptions& opts, const std::optional<StateBeliefTrajectory>& q_init) {
  FixedPointRun run = fixed_point_impl(center, precisions(center), nominal, policy, mu1, cost, beta, opts, q_init);
  AdversaryReport& rep = run.result.report;
  rep.beta = beta;
  rep.kl = sum(run.result.state.kl_per_step);
  rep.inner_iterations = run.iterations;
  rep.probes = 1;
  return std::move(run.result);
}

AdversaryResult optimize_worst_case(const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                                    const Gaussian& mu1, const QuadraticCost& cost, double delta,
                                    const AdversaryOptions& opts, const AdversaryHint* hint) {
  if (!(delta > 0.0)) throw ContractViolation("optimize_worst_case: delta must be positive");
  if (!(opts.beta_init < 0.0)) throw ContractViolation("optimize_worst_case: beta_init must be negative");
  if (nominal.size() != policy.size()) throw ContractViolation("optimize_worst_case: policy and beliefs differ in length");

  const std::vector<Matrix> nominal_prec = precisions(nominal);
  AdversaryReport report;
  std::optional<StateBeliefTrajectory> warm;
  int inner_total = 0;
  double s_start = std::log(-opts.beta_init);
  if (hint) {
    if (hint->q_traj.size() == policy.size() + 1) warm = hint->q_traj;
    if (hint->beta < 0.0) s_start = std::log(-hint->beta);
  }

  auto run = [&](const std::vector<ParameterBelief>& center, const std::vector<Matrix>& prec,
                 double beta) -> std::optional<AdversaryResult> {
    try {
      FixedPointRun r = fixed_point_impl(center, prec, nominal, policy, mu1, cost, beta, opts, warm);
      inner_total += r.iterations;
      warm = r.result.state.q_traj;
      return std::move(r.result);
    } catch (const ExistenceFailure&) {
    } catch (const NumericalError&) {
    } catch (const NotPositiveDefinite&) {
    }
    return std::nullopt;
  };
  auto record = [&](double beta, double kl) { report.trace.push_back({beta, kl}); };
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TemperatureSearchSettings cfg;
  cfg.rel_tol = opts.dual_tol;
  cfg.s_min = std::log(opts.beta_abs_min);
  cfg.s_max = std::log(opts.beta_abs_max);
  cfg.max_probes = opts.max_probes;

  auto finish = [&](AdversaryResult r, bool active) {
    r.report.beta = r.state.beta;
    r.report.kl = sum(r.state.kl_per_step);
    r.report.active = active;
    r.report.used_fallback = report.used_fallback;
    r.report.fallback_rounds = report.fallback_rounds;
    r.report.probes = static_cast<int>(report.trace.size());
    r.report.inner_iterations = inner_total;
    r.report.trace = std::move(report.trace);
    return r;
  };

  // Direct mode: one tilt of the nominal with sum KL = delta.
  auto probe_main = [&](double s) -> std::optional<std::pair<double, AdversaryResult>> {
    const double beta = -std::exp(s);
    auto r = run(nominal, nominal_prec, beta);
    if (!r) {
      record(beta, nan);
      return std::nullopt;
    }
    const double kl = sum(r->state.kl_per_step);
    record(beta, kl);
    return std::make_pair(kl, std::move(*r));
  };
  cfg.target = delta;
  cfg.abort_on_infeasible = opts.allow_fallback && opts.fallback_on_first_failure;
  if (hint && hint->beta < 0.0) {
    // Near the previous root: small first steps that grow geometrically.
    cfg.log_step = std::log(1.25);
    cfg.step_growth = 2.0;
  }
  auto direct = search_temperature<AdversaryResult>(probe_main, s_start, cfg);
  if (direct.result && (direct.active || direct.inactive || !opts.allow_fallback)) {
    return finish(std::move(*direct.result), direct.active);
  }
  if (!opts.allow_fallback) {
    throw AdversaryInfeasible("optimize_worst_case: no beta produced an admissible worst case (" +
                              std::to_string(report.trace.size()) + " probes)");
  }

  // Sequential mode: tilt the current iterate within delta_k per round.
  report.used_fallback = true;
  double s_hint = s_start;
  for (const auto& sample : report.trace) {
    if (!std::isnan(sample.kl)) s_hint = std::log(-sample.temperature);
  }
  std::vector<ParameterBelief> center = nominal;
  std::vector<Matrix> center_prec = nominal_prec;
  std::optional<AdversaryResult> current;
  bool active = false;
  const double delta_k = opts.fallback_fraction * delta;

  for (int round = 1; round <= opts.fallback_rounds; ++round) {
    report.fallback_rounds = round;
    auto probe_round = [&](double s) -> std::optional<std::pair<double, AdversaryResult>> {
      const double beta = -std::exp(s);
      auto r = run(center, center_prec, beta);
      if (!r) {
        record(beta, nan);
        return std::nullopt;
      }
      record(beta, sum(r->state.kl_per_step));
      return std::make_pair(sum(kl_steps(r->state.worst, center)), std::move(*r));
    };
    cfg.target = delta_k;
    cfg.abort_on_infeasible = false;
    auto step = search_temperature<AdversaryResult>(probe_round, s_hint, cfg);
    if (!step.result) break;
    const double round_kl = step.metric;
    AdversaryResult r = std::move(*step.result);
    const double total = sum(r.state.kl_per_step);

    if (total > (1.0 + opts.dual_tol) * delta) {
      auto probe_cap = [&](double s) -> std::optional<std::pair<double, AdversaryResult>> {
        const double beta = -std::exp(s);
        auto rc = run(center, center_prec, beta);
        if (!rc) {
          record(beta, nan);
          return std::nullopt;
        }
        const double kl = sum(rc->state.kl_per_step);
        record(beta, kl);
        return std::make_pair(kl, std::move(*rc));
      };
      cfg.target = delta;
      auto cap = search_temperature<AdversaryResult>(probe_cap, step.temperature_log, cfg);
      if (cap.result) {
        current = std::move(*cap.result);
        active = cap.active;
      }
      break;
    }
    current = std::move(r);
    if (total >= (1.0 - opts.dual_tol) * delta) {
      active = true;
      break;
    }
    if (!(round_kl > 1e-9 * delta_k)) break;
    center = current->state.worst;
    center_prec = precisions(center);
    s_hint = step.temperature_log;
  }

  if (!current) {
    throw AdversaryInfeasible("optimize_worst_case: existence failure in the direct search and no admissible "
                              "smaller trust-region step (" +
                              std::to_string(report.trace.size()) + " probes, delta=" + std::to_string(delta) + ")");
  }
  return finish(std::move(*current), active);
}

}  // namespace drto

#include "drto/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "drto/errors.hpp"
#include "drto/eval.hpp"

namespace drto {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool small_change(double now, double before, double tol) {
  return std::isfinite(before) && std::abs(now - before) <= tol * std::max(std::abs(before), 1e-300);
}

// No ambiguity: the worst case is the nominal itself.
AdversaryResult nominal_as_worst(const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy,
                                 const Gaussian& mu1) {
  AdversaryResult r;
  r.state.worst = nominal;
  r.state.kl_per_step.assign(nominal.size(), 0.0);
  r.traj = forward_pass(mu1, policy, nominal);
  r.state.q_traj = r.traj;
  return r;
}

template <typename F>
auto annotate(int k, const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ContractViolation&) {
    throw;
  } catch (const Error& e) {
    throw SolverFailure(k, stage, e.what());
  }
}

}  // namespace

void SolveConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon", "must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta", "must be non-negative");
  if (outer_iters < 1) throw ConfigError("solver.outer_iters", "must be at least 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("solver.lambda", "must lie in (0, 1]");
  if (!(inner_tol > 0.0)) throw ConfigError("solver.inner_tol", "must be positive");
  if (!(dual_tol > 0.0 && dual_tol < 1.0)) throw ConfigError("solver.dual_tol", "must lie in (0, 1)");
  if (!(budget_tol >= dual_tol)) throw ConfigError("solver.budget_tol", "must be at least dual_tol");
  if (!(conv_tol >= 0.0)) throw ConfigError("solver.conv_tol", "must be non-negative");
  if (!(sigma_pi > 0.0) || !std::isfinite(sigma_pi)) throw ConfigError("sigma_pi", "must be positive");
}

AdversaryOptions SolveConfig::adversary_options() const {
  AdversaryOptions o;
  o.lambda = lambda;
  o.inner_tol = inner_tol;
  o.dual_tol = dual_tol;
  o.budget_tol = budget_tol;
  o.fallback_on_first_failure = fallback_on_first_failure;
  return o;
}

PolicyOptions SolveConfig::policy_options() const {
  PolicyOptions o;
  o.dual_tol = dual_tol;
  return o;
}

std::vector<ParameterBelief> relinearize_about(const Problem& problem, const LinearGaussianPolicy& policy,
                                               const StateBeliefTrajectory& traj) {
  if (!problem.system) throw ContractViolation("relinearize_about: problem has no nonlinear system");
  if (traj.size() != policy.size() + 1) throw ContractViolation("relinearize_about: trajectory length mismatch");
  std::vector<Vector> states, actions;
  for (std::size_t t = 0; t < policy.size(); ++t) {
    states.push_back(traj[t].mean());
    actions.push_back(policy[t].mean_action(traj[t].mean()));
  }
  return nominal_belief(linearize(*problem.system, states, actions), problem.sigma_theta);
}

RobustSolution solve_robust(const Problem& problem, const SolveConfig& config) {
  config.validate();
  problem.validate();
  const auto start = std::chrono::steady_clock::now();
  const Gaussian& mu1 = problem.initial;
  const QuadraticCost& cost = problem.cost;

  RobustSolution out;
  out.nominal = problem.nominal;
  out.policy = LinearGaussianPolicy::zero_mean(problem.nominal.size(), problem.state_dim(), problem.action_dim(),
                                               config.sigma_pi);
  const AdversaryOptions aopts = config.adversary_options();
  const PolicyOptions popts = config.policy_options();
  double previous = std::numeric_limits<double>::quiet_NaN();
  std::optional<AdversaryHint> hint;

  for (int k = 1; k <= config.outer_iters; ++k) {
    AdversaryResult adv = annotate(k, "adversary", [&] {
      return config.delta > 0.0
                 ? optimize_worst_case(out.nominal, out.policy, mu1, cost, config.delta, aopts, hint ? &*hint : nullptr)
                 : nominal_as_worst(out.nominal, out.policy, mu1);
    });
    if (config.warm_start && config.delta > 0.0) {
      hint = AdversaryHint{adv.report.used_fallback ? 0.0 : adv.state.beta, adv.state.q_traj};
    }

    IterationRecord rec;
    rec.k = k;
    rec.cost_worst_before = expected_cost_along(adv.traj, out.policy, cost);
    rec.adversary_kl = adv.report.kl;
    rec.beta = adv.state.beta;
    rec.adversary_active = adv.report.active;
    rec.used_fallback = adv.report.used_fallback;

    PolicyUpdate upd = annotate(k, "policy",
                                [&] { return optimize_policy(out.policy, adv.state.worst, mu1, cost, config.epsilon, popts); });
    out.policy = std::move(upd.policy);
    out.worst = std::move(adv.state.worst);
    rec.cost_worst = expected_cost_along(upd.traj, out.policy, cost);
    rec.cost_nominal = annotate(k, "evaluation", [&] { return expected_cost(out.policy, out.nominal, mu1, cost); });
    rec.policy_kl = upd.report.kl;
    rec.alpha = upd.report.alpha;
    rec.policy_active = upd.report.active;
    out.report.iterations.push_back(rec);

    const bool adversary_ok = rec.adversary_active || config.delta == 0.0;
    if (adversary_ok && rec.policy_active && small_change(rec.cost_worst, previous, config.conv_tol)) {
      out.report.converged = true;
      break;
    }
    previous = rec.cost_worst;
    if (k < config.outer_iters && config.relinearize && problem.system) {
      out.nominal = annotate(k, "relinearization", [&] { return relinearize_about(problem, out.policy, upd.traj); });
    }
  }
  out.report.wall_seconds = seconds_since(start);
  return out;
}

StochasticSolution solve_stochastic(const Problem& problem, const SolveConfig& config) {
  config.validate();
  problem.validate();
  const auto start = std::chrono::steady_clock::now();
  const Gaussian& mu1 = problem.initial;
  const QuadraticCost& cost = problem.cost;

  StochasticSolution out;
  out.nominal = problem.nominal;
  out.policy = LinearGaussianPolicy::zero_mean(problem.nominal.size(), problem.state_dim(), problem.action_dim(),
                                               config.sigma_pi);
  const PolicyOptions popts = config.policy_options();
  double previous = std::numeric_limits<double>::quiet_NaN();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int k = 1; k <= config.outer_iters; ++k) {
    PolicyUpdate upd = annotate(k, "policy",
                                [&] { return optimize_policy(out.policy, out.nominal, mu1, cost, config.epsilon, popts); });
    out.policy = std::move(upd.policy);

    IterationRecord rec;
    rec.k = k;
    rec.cost_nominal = expected_cost_along(upd.traj, out.policy, cost);
    rec.cost_worst = nan;
    rec.cost_worst_before = nan;
    rec.beta = nan;
    rec.policy_kl = upd.report.kl;
    rec.alpha = upd.report.alpha;
    rec.policy_active = upd.report.active;
    out.report.iterations.push_back(rec);

    if (small_change(rec.cost_nominal, previous, config.conv_tol)) {
      out.report.converged = true;
      break;
    }
    previous = rec.cost_nominal;
    if (k < config.outer_iters && config.relinearize && problem.system) {
      out.nominal = annotate(k, "relinearization", [&] { return relinearize_about(problem, out.policy, upd.traj); });
    }
  }
  out.report.wall_seconds = seconds_since(start);
  return out;
}

AdversaryResult attack(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& nominal,
                       const Problem& problem, const SolveConfig& config) {
  config.validate();
  if (config.delta == 0.0) return nominal_as_worst(nominal, policy, problem.initial);
  return optimize_worst_case(nominal, policy, problem.initial, problem.cost, config.delta, config.adversary_options());
}

}  // namespace drto

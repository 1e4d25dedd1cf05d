#include "drto/eval.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "drto/errors.hpp"

namespace drto {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// out = mean + L e with e standard normal, drawn into the scratch vector `e`.
void draw(Vector& out, const Vector& mean, const Matrix& sqrt_cov, Vector& e, std::mt19937_64& rng,
          std::normal_distribution<double>& z) {
  for (Index i = 0; i < e.size(); ++i) e(i) = z(rng);
  out = mean;
  out.noalias() += sqrt_cov.triangularView<Eigen::Lower>() * e;
}

}  // namespace

double expected_cost_along(const StateBeliefTrajectory& traj, const LinearGaussianPolicy& policy,
                           const QuadraticCost& cost) {
  if (traj.size() != policy.size() + 1) throw ContractViolation("expected_cost: trajectory length mismatch");
  const Matrix h = cost.stage_homogeneous();
  double total = 0.0;
  for (std::size_t t = 0; t < policy.size(); ++t) total += h.cwiseProduct(tau_second_moment(traj[t], policy[t])).sum();
  const Gaussian& last = traj.back();
  const Vector e = last.mean() - cost.goal();
  total += e.dot(cost.terminal_weight() * e) + cost.terminal_weight().cwiseProduct(last.cov()).sum();
  return total;
}

double expected_cost(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& beliefs,
                     const Gaussian& mu1, const QuadraticCost& cost) {
  return expected_cost_along(forward_pass(mu1, policy, beliefs), policy, cost);
}

std::vector<double> sweep_grid(int points, double lambda_max) {
  if (points < 2) throw ContractViolation("sweep_grid: need at least two points");
  if (!(lambda_max > 0.0)) throw ContractViolation("sweep_grid: lambda_max must be positive");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lambda_max * i / (points - 1);
  return grid;
}

std::vector<SweepRow> adversary_sweep(const LinearGaussianPolicy& stochastic, const LinearGaussianPolicy& robust,
                                      const std::vector<ParameterBelief>& nominal,
                                      const std::vector<ParameterBelief>& worst, const std::vector<double>& grid,
                                      const Gaussian& mu1, const QuadraticCost& cost) {
  if (worst.size() != nominal.size()) throw ContractViolation("adversary_sweep: belief sequences differ in length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double lambda : grid) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractViolation("adversary_sweep: lambda must be >= 0");
    SweepRow row{lambda, nan, nan, nan, false};
    try {
      std::vector<ParameterBelief> beliefs;
      beliefs.reserve(nominal.size());
      double distance = 0.0;
      for (std::size_t t = 0; t < nominal.size(); ++t) {
        beliefs.push_back(nominal[t].with_dist(precision_interpolate(worst[t].dist(), nominal[t].dist(), lambda)));
        distance += kl_gaussian(beliefs.back().dist(), nominal[t].dist());
      }
      const double cs = expected_cost(stochastic, beliefs, mu1, cost);
      const double cr = expected_cost(robust, beliefs, mu1, cost);
      if (std::isfinite(distance) && std::isfinite(cs) && std::isfinite(cr)) row = {lambda, distance, cs, cr, true};
    } catch (const NotPositiveDefinite&) {
    } catch (const NumericalError&) {
    }
    rows.push_back(row);
  }
  return rows;
}

bool sweep_distance_monotone(const std::vector<SweepRow>& rows) {
  double last = -std::numeric_limits<double>::infinity();
  double last_lambda = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (!r.valid || r.lambda > 1.0) continue;
    if (r.lambda < last_lambda) return false;
    if (r.distance < last) return false;
    last = r.distance;
    last_lambda = r.lambda;
  }
  return true;
}

std::vector<double> kl_profile(const std::vector<ParameterBelief>& worst, const std::vector<ParameterBelief>& nominal) {
  if (worst.size() != nominal.size()) throw ContractViolation("kl_profile: belief sequences differ in length");
  std::vector<double> out(worst.size());
  for (std::size_t t = 0; t < worst.size(); ++t) out[t] = kl_gaussian(worst[t].dist(), nominal[t].dist());
  return out;
}

RolloutStats mc_rollout(const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& beliefs,
                        const Gaussian& mu1, const QuadraticCost& cost, std::size_t samples, std::uint64_t seed,
                        std::size_t keep) {
  if (samples < 1) throw ContractViolation("mc_rollout: need at least one sample");
  if (policy.size() != beliefs.size()) throw ContractViolation("mc_rollout: policy and beliefs differ in length");
  const std::size_t steps = policy.size();
  const Index d = mu1.dim();

  const Matrix x0_sqrt = safe_cholesky(mu1.cov(), "mc_rollout: initial covariance").lower;
  std::vector<Matrix> action_sqrt, means;
  for (std::size_t t = 0; t < steps; ++t) {
    action_sqrt.push_back(safe_cholesky(policy[t].cov, "mc_rollout: action covariance").lower);
    means.push_back(beliefs[t].mean_matrix());
  }

  RolloutStats stats;
  stats.samples = samples;
  double mean = 0.0;
  double m2 = 0.0;
  const Index m = policy.size() ? policy[0].action_dim() : 0;
  Vector x(d), u(m), tau(d + m + 1);
  Vector ex(d), eu(m);
  Matrix next_cov(d, d), next_sqrt(d, d), spread(param_dim(d, m), d);
  Eigen::LLT<Matrix> llt(d);
  for (std::size_t i = 0; i < samples; ++i) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
    std::normal_distribution<double> z;
    std::vector<Vector> states;
    const bool keep_this = i < keep;

    draw(x, mu1.mean(), x0_sqrt, ex, rng, z);
    double c = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      if (keep_this) states.push_back(x);
      draw(u, policy[t].mean_action(x), action_sqrt[t], eu, rng, z);
      c += cost.stage(x, u);
      // Theta tau given tau is Gaussian, so theta itself need not be drawn.
      tau << x, u, 1.0;
      // spread = Sigma_theta S(tau)^T column by column, then S(tau) spread
      const Matrix& pc = beliefs[t].dist().cov();
      spread.setZero();
      for (Index a = 0; a < tau.size(); ++a) {
        for (Index r = 0; r < d; ++r) spread.col(r).noalias() += tau(a) * pc.col(a * d + r);
      }
      next_cov = beliefs[t].noise_cov();
      for (Index a = 0; a < tau.size(); ++a) next_cov.noalias() += tau(a) * spread.middleRows(a * d, d);
      llt.compute(next_cov);
      if (llt.info() == Eigen::Success) {
        next_sqrt = llt.matrixL();
      } else {
        next_sqrt = safe_cholesky(next_cov, "mc_rollout: next-state covariance").lower;
      }
      draw(x, means[t] * tau, next_sqrt, ex, rng, z);
    }
    if (keep_this) {
      states.push_back(x);
      stats.trajectories.push_back(std::move(states));
    }
    c += cost.terminal(x);

    // Welford update.
    const double delta = c - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (c - mean);
  }
  stats.mean = mean;
  const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  stats.std_error = std::sqrt(var / static_cast<double>(samples));
  return stats;
}

}  // namespace drto

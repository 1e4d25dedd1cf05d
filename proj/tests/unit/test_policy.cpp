#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "drto/errors.hpp"
#include "drto/eval.hpp"
#include "drto/policy.hpp"
#include "helpers.hpp"
#include "riccati.hpp"

using namespace drto;

namespace {

QuadraticQ scalar_q(double xx, double uu, double xu, double xl, double ul, double c) {
  QuadraticQ q;
  q.xx = Matrix::Constant(1, 1, xx);
  q.uu = Matrix::Constant(1, 1, uu);
  q.xu = Matrix::Constant(1, 1, xu);
  q.x_lin = Vector::Constant(1, xl);
  q.u_lin = Vector::Constant(1, ul);
  q.constant = c;
  return q;
}

PolicyStep scalar_step(double gain, double offset, double var) {
  return PolicyStep{Matrix::Constant(1, 1, gain), Vector::Constant(1, offset), Matrix::Constant(1, 1, var)};
}

struct Tilted {
  double mean, var, soft_value;
};

// Grid quadrature of pi(u|x) exp(-Q(x,u)/alpha).
Tilted tilt_on_grid(const PolicyStep& prev, const QuadraticQ& q, double alpha, double x) {
  const double m = prev.gain(0, 0) * x + prev.offset(0);
  const double s = prev.cov(0, 0);
  const Vector xv = Vector::Constant(1, x);
  // shift the exponent by Q at the prior mean to keep it in range
  const double q0 = q(xv, Vector::Constant(1, m));
  auto w = [&](double u) { return testing::normal_pdf(u, m, s) * std::exp(-(q(xv, Vector::Constant(1, u)) - q0) / alpha); };
  const double lo = m - 15 * std::sqrt(s), hi = m + 15 * std::sqrt(s);
  const double z = testing::simpson(w, lo, hi, 200000);
  const double mu = testing::simpson([&](double u) { return u * w(u); }, lo, hi, 200000) / z;
  const double var = testing::simpson([&](double u) { return (u - mu) * (u - mu) * w(u); }, lo, hi, 200000) / z;
  return {mu, var, q0 - alpha * std::log(z)};
}

struct Lqg {
  std::vector<ParameterBelief> beliefs;
  QuadraticCost cost;
  Gaussian mu1;
  Matrix a, b;
  Vector c;
  Matrix noise;
};

Lqg make_lqg(int horizon, double sigma_theta) {
  Matrix a(2, 2), b(2, 1), noise = 1e-3 * Matrix::Identity(2, 2);
  a << 1.0, 0.1, -0.05, 0.95;
  b << 0.0, 0.1;
  Vector c(2);
  c << 0.01, 0.0;
  Matrix theta(2, 4);
  theta << a, b, c;
  const Index n = param_dim(2, 1);
  const ParameterBelief pb(Gaussian(vectorize(theta), sigma_theta * sigma_theta * Matrix::Identity(n, n)), noise, 2, 1);
  Matrix cx(2, 2);
  cx << 10, 0, 0, 1;
  Vector goal(2);
  goal << 1.0, 0.0;
  return {std::vector<ParameterBelief>(horizon - 1, pb),
          QuadraticCost(cx, 0.1 * Matrix::Identity(1, 1), cx, goal),
          Gaussian(Vector::Zero(2), 0.01 * Matrix::Identity(2, 2)),
          a, b, c, noise};
}

testing::RiccatiSolution riccati_of(const Lqg& p) {
  const std::size_t n = p.beliefs.size();
  return testing::riccati(std::vector<Matrix>(n, p.a), std::vector<Matrix>(n, p.b), std::vector<Vector>(n, p.c), p.noise,
                          p.cost.state_weight(), p.cost.action_weight(), p.cost.terminal_weight(), p.cost.goal());
}

LinearGaussianPolicy random_policy(std::mt19937_64& rng, std::size_t steps, Index d, Index m) {
  LinearGaussianPolicy pol;
  for (std::size_t t = 0; t < steps; ++t) {
    pol.steps.push_back(PolicyStep{0.3 * Matrix::Random(m, d), 0.3 * Vector::Random(m), testing::random_spd(rng, m, 0.5)});
  }
  return pol;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("q function with zero continuation is the stage cost") {
  const Lqg p = make_lqg(3, 0.0);
  const QuadraticQ q = q_function(p.cost, QuadraticValue::zero(2), p.beliefs[0]);
  CHECK((q.homogeneous() - p.cost.stage_homogeneous()).norm() <= 1e-14);
}

TEST_CASE("q function scalar parameter expectation") {
  const double a = 0.8, s = 0.05, noise = 0.3;
  Vector pm(3);
  pm << a, 0, 0;
  Matrix pc = Matrix::Zero(3, 3);
  pc(0, 0) = s;
  const QuadraticCost cost(Matrix::Constant(1, 1, 2.0), Matrix::Identity(1, 1), Matrix::Zero(1, 1), Vector::Zero(1));
  QuadraticValue v = QuadraticValue::zero(1);
  v.quad(0, 0) = 1.0;
  const QuadraticQ q = q_function(cost, v, testing::scalar_belief(pm, pc, noise));
  CHECK(q.xx(0, 0) == doctest::Approx(2.0 + a * a + s).epsilon(1e-14));
  CHECK(q.constant == doctest::Approx(noise).epsilon(1e-14));
}

TEST_CASE("q function matches Monte Carlo over the parameters") {
  std::mt19937_64 rng(21);
  const Index d = 2, m = 1, n = param_dim(d, m);
  const Matrix pc = 0.05 * testing::random_spd(rng, n);
  const Matrix theta = 0.5 * Matrix::Random(d, d + m + 1);
  const Matrix noise = 0.1 * Matrix::Identity(d, d);
  const ParameterBelief belief(Gaussian(vectorize(theta), pc), noise, d, m);
  const QuadraticCost cost(Matrix::Identity(d, d), Matrix::Identity(m, m), Matrix::Identity(d, d), Vector::Ones(d));
  QuadraticValue v{testing::random_spd(rng, d), testing::random_vector(rng, d), 0.7};
  const QuadraticQ q = q_function(cost, v, belief);

  const Eigen::LLT<Matrix> l(pc);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = testing::random_vector(rng, d), u = testing::random_vector(rng, m);
    const Vector tau = StateActionVector(x, u).tau();
    const int samples = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < samples; ++i) {
      Vector e(n);
      for (auto& ei : e) ei = z(rng);
      const Vector next = unvectorize(vectorize(theta) + l.matrixL() * e, d) * tau;
      const double val = cost.stage(x, u) + v(next) + (v.quad * noise).trace();
      sum += val;
      sq += val * val;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sq / samples - mean * mean) / samples);
    CHECK(std::abs(q(x, u) - mean) <= 3 * se);
  }
}

TEST_CASE("policy step without tilt keeps the previous step") {
  const PolicyStep prev = scalar_step(0.4, -0.2, 0.9);
  const PolicyStepResult r = policy_step(prev, scalar_q(0, 0, 0, 0, 0, 1.5), 3.0);
  CHECK(r.step.gain(0, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(r.step.offset(0) == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(r.step.cov(0, 0) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(r.value.quad.norm() <= 1e-14);
  CHECK(r.value.lin.norm() <= 1e-14);
  CHECK(r.value.constant == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("infinite temperature freezes the policy") {
  const PolicyStep prev = scalar_step(0.4, -0.2, 0.9);
  const PolicyStepResult r = policy_step(prev, scalar_q(1.3, 0.7, -0.4, 0.3, -2.0, 0.5), 1e12);
  CHECK(std::abs(r.step.gain(0, 0) - 0.4) <= 1e-6);
  CHECK(std::abs(r.step.offset(0) + 0.2) <= 1e-6);
  CHECK(std::abs(r.step.cov(0, 0) - 0.9) <= 1e-6);
}

TEST_CASE("scalar tilt by hand") {
  // N(0,1) tilted by exp(-(u^2 - 2u)/2) is N(1/2, 1/2)
  const PolicyStepResult r = policy_step(scalar_step(0, 0, 1), scalar_q(0, 1, 0, 0, -2, 0), 2.0);
  CHECK(r.step.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.step.offset(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("policy step matches grid quadrature of the tilted density") {
  const PolicyStep prev = scalar_step(0.5, 0.2, 0.8);
  for (double alpha : {0.3, 2.0, 25.0}) {
    const QuadraticQ q = scalar_q(1.3, 0.7, -0.4, 0.3, -2.0, 0.5);
    const PolicyStepResult r = policy_step(prev, q, alpha);
    for (double x : {-1.0, 0.0, 1.5}) {
      const Tilted g = tilt_on_grid(prev, q, alpha, x);
      CHECK(std::abs(r.step.mean_action(Vector::Constant(1, x))(0) - g.mean) <= 1e-6);
      CHECK(std::abs(r.step.cov(0, 0) - g.var) <= 1e-6);
      CHECK(std::abs(r.value(Vector::Constant(1, x)) - g.soft_value) <= 1e-5);
    }
  }
}

TEST_CASE("negative curvature below the admissible temperature fails") {
  try {
    policy_step(scalar_step(0, 0, 1), scalar_q(0, -1, 0, 0, 0, 0), 1.0, 4);
    FAIL("expected BackwardPassFailure");
  } catch (const BackwardPassFailure& e) {
    CHECK(e.step() == 4);
    CHECK(e.eigenvalue() < 0.0);
  }
  CHECK_NOTHROW(policy_step(scalar_step(0, 0, 1), scalar_q(0, -1, 0, 0, 0, 0), 3.0));
}

TEST_CASE("two-step horizon reduces to a single policy step") {
  const Lqg p = make_lqg(2, 1e-3);
  const LinearGaussianPolicy prev = LinearGaussianPolicy::zero_mean(1, 2, 1, 1.0);
  const PolicyBackward back = policy_backward(prev, p.beliefs, p.cost, 5.0);
  const PolicyStepResult one = policy_step(prev[0], q_function(p.cost, p.cost.terminal_value(), p.beliefs[0]), 5.0);
  REQUIRE(back.values.size() == 2);
  CHECK((back.policy[0].gain - one.step.gain).norm() <= 1e-12);
  CHECK((back.policy[0].offset - one.step.offset).norm() <= 1e-12);
  CHECK((back.values[0].quad - one.value.quad).norm() <= 1e-12);
  CHECK((back.values[1].quad - p.cost.terminal_value().quad).norm() == 0.0);
}

TEST_CASE("soft values stay PSD-dominant for PSD costs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 2, m = 2, n = param_dim(d, m);
    const ParameterBelief b(Gaussian(vectorize(Matrix::Random(d, d + m + 1)), 1e-3 * testing::random_spd(rng, n)),
                            0.01 * Matrix::Identity(d, d), d, m);
    const QuadraticCost cost(testing::random_spd(rng, d, 0.0), testing::random_spd(rng, m), testing::random_spd(rng, d, 0.0),
                             testing::random_vector(rng, d));
    const LinearGaussianPolicy prev = random_policy(rng, 6, d, m);
    const PolicyBackward back = policy_backward(prev, std::vector<ParameterBelief>(6, b), cost, 0.5 + trial);
    for (const auto& v : back.values) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(v.quad);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
  }
}

TEST_CASE("expected conditional kl") {
  std::mt19937_64 rng(41);
  const PolicyStep a = PolicyStep{Matrix::Random(2, 3), Vector::Random(2), testing::random_spd(rng, 2)};
  const PolicyStep b = PolicyStep{Matrix::Random(2, 3), Vector::Random(2), testing::random_spd(rng, 2)};
  const Gaussian state = testing::random_gaussian(rng, 3);
  CHECK(std::abs(expected_conditional_kl(a, a, state)) <= 1e-12);

  const Eigen::LLT<Matrix> l(state.cov());
  std::normal_distribution<double> z;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector e(3);
    for (auto& v : e) v = z(rng);
    const Vector x = state.mean() + l.matrixL() * e;
    const double k = kl_gaussian(Gaussian(a.mean_action(x), a.cov), Gaussian(b.mean_action(x), b.cov));
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(expected_conditional_kl(a, b, state) - mean) <= 3 * se);
}

TEST_CASE("policy dual gradient") {
  std::mt19937_64 rng(51);
  const Lqg p = make_lqg(5, 1e-4);
  const LinearGaussianPolicy prev = random_policy(rng, 4, 2, 1);

  SUBCASE("unchanged policy gives minus epsilon") {
    const auto traj = forward_pass(p.mu1, prev, p.beliefs);
    const DualValue g = policy_dual_and_grad(prev, prev, traj, QuadraticValue::zero(2), p.mu1, 0.3, 1.0);
    CHECK(g.gradient == doctest::Approx(-0.3).epsilon(1e-12));
  }

  SUBCASE("zero epsilon with a changed policy gives a positive gradient") {
    const PolicyBackward back = policy_backward(prev, p.beliefs, p.cost, 10.0);
    const auto traj = forward_pass(p.mu1, back.policy, p.beliefs);
    const DualValue g = policy_dual_and_grad(back.policy, prev, traj, back.values[0], p.mu1, 0.0, 10.0);
    CHECK(g.gradient > 0.0);
  }

  SUBCASE("gradient matches a centered difference of the dual") {
    const double eps = 0.25;
    auto dual = [&](double alpha) {
      const PolicyBackward back = policy_backward(prev, p.beliefs, p.cost, alpha);
      const auto traj = forward_pass(p.mu1, back.policy, p.beliefs);
      return policy_dual_and_grad(back.policy, prev, traj, back.values[0], p.mu1, eps, alpha);
    };
    for (double alpha : {0.5, 5.0, 50.0}) {
      const double h = 1e-4 * alpha;
      const double fd = (dual(alpha + h).value - dual(alpha - h).value) / (2 * h);
      const double g = dual(alpha).gradient;
      CHECK(std::abs(g - fd) <= 1e-3 * std::abs(g));
    }
  }
}

TEST_CASE("vanishing trust region freezes the policy") {
  std::mt19937_64 rng(61);
  const Lqg p = make_lqg(6, 1e-4);
  const LinearGaussianPolicy prev = random_policy(rng, 5, 2, 1);
  const PolicyUpdate upd = optimize_policy(prev, p.beliefs, p.mu1, p.cost, 1e-9);
  CHECK(upd.report.kl <= 2e-9);
  CHECK(policy_kl(upd.policy, prev, upd.traj) <= 2e-9);
  const double before = expected_cost(prev, p.beliefs, p.mu1, p.cost);
  const double after = expected_cost(upd.policy, p.beliefs, p.mu1, p.cost);
  CHECK(std::abs(after - before) <= 1e-3 * before);
}

TEST_CASE("huge trust region on an LQG problem reaches the Riccati optimum") {
  const Lqg p = make_lqg(10, 0.0);
  const LinearGaussianPolicy prev = LinearGaussianPolicy::zero_mean(9, 2, 1, 1.0);
  const PolicyUpdate upd = optimize_policy(prev, p.beliefs, p.mu1, p.cost, 1e9);
  const auto lqr = riccati_of(p);
  const double optimum = testing::expected_value(lqr.value[0], p.mu1.mean(), p.mu1.cov());
  CHECK(expected_cost(upd.policy, p.beliefs, p.mu1, p.cost) == doctest::Approx(optimum).epsilon(1e-3));
  for (std::size_t t = 0; t < 9; ++t) {
    CHECK((upd.policy[t].gain - lqr.gains[t]).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((upd.policy[t].offset - lqr.offsets[t]).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("trust region is met and the kl trace is monotone in temperature") {
  std::mt19937_64 rng(71);
  const Lqg p = make_lqg(20, 1e-3);
  const LinearGaussianPolicy prev = random_policy(rng, 19, 2, 1);
  const PolicyUpdate upd = optimize_policy(prev, p.beliefs, p.mu1, p.cost, 0.25);
  CHECK(upd.report.active);
  CHECK(upd.report.kl <= 1.05 * 0.25);
  CHECK(upd.report.kl >= 0.95 * 0.25);
  CHECK(policy_kl(upd.policy, prev, upd.traj) == doctest::Approx(upd.report.kl).epsilon(1e-12));

  auto trace = upd.report.trace;
  trace.erase(std::remove_if(trace.begin(), trace.end(), [](const TemperatureSample& s) { return std::isnan(s.kl); }),
              trace.end());
  std::sort(trace.begin(), trace.end(),
            [](const TemperatureSample& a, const TemperatureSample& b) { return a.temperature < b.temperature; });
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].kl <= trace[i - 1].kl * (1 + 1e-9));
}

TEST_CASE("optimize_policy rejects a nonpositive epsilon") {
  const Lqg p = make_lqg(3, 1e-3);
  CHECK_THROWS_AS(optimize_policy(LinearGaussianPolicy::zero_mean(2, 2, 1, 1.0), p.beliefs, p.mu1, p.cost, 0.0),
                  ContractViolation);
}

TEST_CASE("expectation of a homogeneous quadratic over the policy") {
  std::mt19937_64 rng(81);
  const PolicyStep s{Matrix::Random(1, 2), Vector::Random(1), testing::random_spd(rng, 1)};
  const Matrix h = testing::random_spd(rng, 4);
  const QuadraticValue v = expect_over_policy(h, s);
  const Vector x = testing::random_vector(rng, 2);
  // E[u^T H_uu u] adds tr(H_uu cov) to the value at the mean action
  const Vector tau = StateActionVector(x, s.mean_action(x)).tau();
  CHECK(v(x) == doctest::Approx(tau.dot(h * tau) + h(2, 2) * s.cov(0, 0)).epsilon(1e-12));
}

}  // TEST_SUITE

#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "drto/errors.hpp"
#include "drto/model.hpp"
#include "drto/systems.hpp"
#include "helpers.hpp"

using namespace drto;

namespace {

Matrix noise(Index d, double var) { return var * Matrix::Identity(d, d); }

Vector x_of(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

// Central differences of the drift.
std::pair<Matrix, Matrix> fd_jacobians(const NonlinearSystem& s, const Vector& x, const Vector& u, double h = 1e-6) {
  Matrix jx(s.state_dim, s.state_dim), ju(s.state_dim, s.action_dim);
  for (Index j = 0; j < s.state_dim; ++j) {
    Vector e = Vector::Zero(s.state_dim);
    e(j) = h;
    jx.col(j) = (s.drift(x + e, u) - s.drift(x - e, u)) / (2 * h);
  }
  for (Index j = 0; j < s.action_dim; ++j) {
    Vector e = Vector::Zero(s.action_dim);
    e(j) = h;
    ju.col(j) = (s.drift(x, u + e) - s.drift(x, u - e)) / (2 * h);
  }
  return {jx, ju};
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("state-action vector layout") {
  const StateActionVector t(x_of({1, 2}), x_of({3}));
  CHECK(t.tau().size() == 4);
  CHECK(t.tau()(3) == 1.0);
  CHECK(t.tau()(2) == 3.0);
  CHECK(t.action_dim() == 1);
}

TEST_CASE("vectorization is column stacking and round-trips") {
  Matrix theta(2, 4);
  theta << 1, 2, 3, 4, 5, 6, 7, 8;
  const Vector v = vectorize(theta);
  CHECK(v(0) == 1);
  CHECK(v(1) == 5);
  CHECK(v(2) == 2);
  CHECK(v(7) == 8);
  CHECK(unvectorize(v, 2) == theta);
  CHECK(param_dim(2, 1) == 8);
  CHECK_THROWS_AS(unvectorize(v, 3), ContractViolation);
}

TEST_CASE("marginal dynamics of a scalar multiplicative parameter") {
  const double a = 0.7, s = 0.3, var = 0.05, x = 1.5;
  Vector mean = x_of({a, 0, 0});
  Matrix cov = Matrix::Zero(3, 3);
  cov(0, 0) = s;
  const ParameterBelief b = testing::scalar_belief(mean, cov, var);
  const Gaussian next = marginal_dynamics(b, StateActionVector(x_of({x}), x_of({0})));
  CHECK(next.mean()(0) == doctest::Approx(a * x).epsilon(1e-14));
  CHECK(next.cov()(0, 0) == doctest::Approx(var + s * x * x).epsilon(1e-14));
}

TEST_CASE("marginal dynamics with zero parameter covariance is the fixed linear map") {
  std::mt19937_64 rng(2);
  const Matrix theta = Matrix::Random(2, 4);
  const ParameterBelief b(Gaussian(vectorize(theta), Matrix::Zero(8, 8)), noise(2, 0.1), 2, 1);
  const StateActionVector tau(x_of({0.3, -1}), x_of({2}));
  const Gaussian next = marginal_dynamics(b, tau);
  CHECK((next.mean() - theta * tau.tau()).norm() <= 1e-14);
  CHECK((next.cov() - noise(2, 0.1)).norm() == 0.0);
}

TEST_CASE("unit selector picks the offset block") {
  Matrix cov = Matrix::Zero(8, 8);
  Matrix cc(2, 2);
  cc << 0.2, 0.05, 0.05, 0.3;
  cov.bottomRightCorner(2, 2) = cc;
  Vector mean = Vector::Zero(8);
  mean.tail(2) = x_of({1, -2});
  const ParameterBelief b(Gaussian(mean, cov), noise(2, 0.01), 2, 1);
  const Gaussian next = marginal_dynamics(b, StateActionVector(Vector::Zero(2), Vector::Zero(1)));
  CHECK((next.mean() - x_of({1, -2})).norm() <= 1e-15);
  CHECK((next.cov() - noise(2, 0.01) - cc).norm() <= 1e-15);
}

TEST_CASE("marginal dynamics moments match Monte Carlo") {
  std::mt19937_64 rng(17);
  const Matrix theta = 0.5 * Matrix::Random(2, 4);
  const Matrix pcov = 0.02 * testing::random_spd(rng, 8);
  const Matrix nc = 0.05 * Matrix::Identity(2, 2);
  const ParameterBelief b(Gaussian(vectorize(theta), pcov), nc, 2, 1);
  const StateActionVector tau(x_of({1.0, -0.5}), x_of({0.8}));
  const Gaussian exact = marginal_dynamics(b, tau);

  const Eigen::LLT<Matrix> lp(pcov), ln(nc);
  std::normal_distribution<double> z;
  const int n = 100000;
  std::vector<Vector> samples;
  samples.reserve(n);
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    Vector e8(8), e2(2);
    for (auto& v : e8) v = z(rng);
    for (auto& v : e2) v = z(rng);
    const Matrix th = unvectorize(vectorize(theta) + lp.matrixL() * e8, 2);
    samples.push_back(th * tau.tau() + ln.matrixL() * e2);
    sum += samples.back();
  }
  const Vector mc_mean = sum / n;
  Matrix mc_cov = Matrix::Zero(2, 2);
  for (const auto& s : samples) mc_cov += (s - mc_mean) * (s - mc_mean).transpose();
  mc_cov /= (n - 1);
  for (Index i = 0; i < 2; ++i) {
    const double se = std::sqrt(exact.cov()(i, i) / n);
    CHECK(std::abs(mc_mean(i) - exact.mean()(i)) <= 3 * se);
    // standard error of a normal variance estimate is var * sqrt(2/n)
    CHECK(std::abs(mc_cov(i, i) - exact.cov()(i, i)) <= 3 * exact.cov()(i, i) * std::sqrt(2.0 / n));
  }
}

TEST_CASE("marginal covariance minus noise is a PSD form in tau") {
  std::mt19937_64 rng(4);
  const Matrix pcov = testing::random_spd(rng, 8);
  const ParameterBelief b(Gaussian(Vector::Zero(8), pcov), noise(2, 0.0), 2, 1);
  for (int i = 0; i < 20; ++i) {
    const Vector tau3 = testing::random_vector(rng, 3);
    const Matrix extra = parameter_noise(pcov, (Vector(4) << tau3, 1.0).finished(), 2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(extra);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    // scaling tau scales the form quadratically
    const Matrix twice = parameter_noise(pcov, 2.0 * (Vector(4) << tau3, 1.0).finished(), 2);
    CHECK((twice - 4.0 * extra).norm() <= 1e-10 * (1 + extra.norm()));
  }
}

TEST_CASE("integrate: zero drift keeps the state") {
  NonlinearSystem s = systems::custom_linear(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Vector::Zero(2), 0.1, noise(2, 1));
  const Vector x = x_of({1.5, -2});
  CHECK(integrate(s, x, x_of({3})) == x);
}

TEST_CASE("mass-spring-damper step matches the matrix exponential") {
  const NonlinearSystem s = systems::mass_spring_damper(0.01, noise(2, 1e-4));
  Matrix f(2, 2);
  f << 0, 1, -0.01, -0.1;
  const Matrix phi = (f * 0.01).exp();
  const Vector x = x_of({1, 0});
  CHECK((integrate(s, x, x_of({0})) - phi * x).norm() <= 1e-8);

  // forced response: augmented exponential with the constant input as a state
  Matrix big = Matrix::Zero(3, 3);
  big.topLeftCorner(2, 2) = f;
  big(1, 2) = 1.0;
  const Matrix phi3 = (big * 0.01).exp();
  const Vector forced = phi3 * x_of({1, 0.5, 2.0});
  CHECK((integrate(s, x_of({1, 0.5}), x_of({2.0})) - forced.head(2)).norm() <= 1e-8);
}

TEST_CASE("car moving straight advances y") {
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8));
  const Vector next = integrate(car, x_of({0, 0, 0, 1}), x_of({0, 0}));
  CHECK(next(0) == doctest::Approx(0.0));
  CHECK(next(1) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(next(2) == doctest::Approx(0.0));
  CHECK(next(3) == doctest::Approx(1.0));
}

TEST_CASE("car jacobian at rest by hand") {
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8), 0.1);
  const auto [jx, ju] = car.jacobians(x_of({0, 0, 0, 0}), x_of({0, 0}));
  CHECK((jx.col(3) - x_of({0, 1, 0, 0})).norm() == 0.0);
  CHECK(ju(3, 0) == 1.0);
  CHECK(ju.col(1).norm() == 0.0);  // steering has no effect at zero speed
}

TEST_CASE("analytic drift jacobians agree with finite differences") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8), 0.1);
  const NonlinearSystem msd = systems::mass_spring_damper(0.01, noise(2, 1e-4));
  for (const NonlinearSystem* s : {&car, &msd}) {
    for (int i = 0; i < 20; ++i) {
      Vector x(s->state_dim), u(s->action_dim);
      for (auto& v : x) v = 2.0 * uni(rng);
      for (auto& v : u) v = uni(rng);
      const auto [jx, ju] = s->jacobians(x, u);
      const auto [fx, fu] = fd_jacobians(*s, x, u);
      CHECK((jx - fx).norm() <= 1e-5 * std::max(1.0, fx.norm()));
      CHECK((ju - fu).norm() <= 1e-5 * std::max(1.0, fu.norm()));
    }
  }
}

TEST_CASE("rk4 step jacobians agree with finite differences of the step") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8), 0.1);
  for (int i = 0; i < 10; ++i) {
    Vector x(4), u(2);
    for (auto& v : x) v = 2.0 * uni(rng);
    for (auto& v : u) v = uni(rng);
    const auto [ax, au] = integrate_jacobians(car, x, u);
    const double h = 1e-6;
    for (Index j = 0; j < 4; ++j) {
      Vector e = Vector::Zero(4);
      e(j) = h;
      const Vector col = (integrate(car, x + e, u) - integrate(car, x - e, u)) / (2 * h);
      CHECK((ax.col(j) - col).norm() <= 1e-6 * std::max(1.0, col.norm()));
    }
    for (Index j = 0; j < 2; ++j) {
      Vector e = Vector::Zero(2);
      e(j) = h;
      const Vector col = (integrate(car, x, u + e) - integrate(car, x, u - e)) / (2 * h);
      CHECK((au.col(j) - col).norm() <= 1e-6 * std::max(1.0, col.norm()));
    }
  }
}

TEST_CASE("linearization of an affine drift is reference independent") {
  Matrix f(2, 2);
  f << 0.1, 1, -0.3, -0.2;
  const NonlinearSystem s = systems::custom_linear(f, x_of({0, 1}), x_of({0.5, -0.1}), 0.05, noise(2, 1e-3));
  std::mt19937_64 rng(12);
  std::vector<Vector> xs, us;
  for (int t = 0; t < 6; ++t) {
    xs.push_back(testing::random_vector(rng, 2, 3.0));
    us.push_back(testing::random_vector(rng, 1, 3.0));
  }
  const auto steps = linearize(s, xs, us);
  REQUIRE(steps.size() == 6);
  for (const auto& st : steps) {
    CHECK((st.theta - steps[0].theta).norm() <= 1e-10);
    CHECK(st.noise_cov == noise(2, 1e-3));
  }
  // RK4 of a linear map is a degree-4 Taylor polynomial of exp(F dt)
  CHECK((steps[0].a() - (f * 0.05).exp()).norm() <= 1e-7);
}

TEST_CASE("linearization offset reproduces the one-step prediction") {
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8), 0.1);
  std::mt19937_64 rng(13);
  std::vector<Vector> xs, us;
  for (int t = 0; t < 5; ++t) {
    xs.push_back(testing::random_vector(rng, 4));
    us.push_back(testing::random_vector(rng, 2, 0.3));
  }
  const auto steps = linearize(car, xs, us);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Vector pred = steps[t].a() * xs[t] + steps[t].b() * us[t] + steps[t].c();
    CHECK((pred - integrate(car, xs[t], us[t])).norm() <= 1e-12);
  }
}

TEST_CASE("linearize reports non-finite jacobians with the step") {
  const NonlinearSystem car = systems::robot_car(0.025, noise(4, 1e-8), 0.1);
  std::vector<Vector> xs = {x_of({0, 0, 0, 1}), x_of({0, 0, 0, 1})};
  std::vector<Vector> us = {x_of({0, 0}), x_of({0, std::nan("")})};
  try {
    linearize(car, xs, us);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("nominal belief is isotropic around the linearization") {
  const NonlinearSystem msd = systems::mass_spring_damper(0.01, noise(2, 1e-4));
  const auto steps = linearize(msd, {x_of({0, 0})}, {x_of({0})});
  const auto beliefs = nominal_belief(steps, 1e-4);
  REQUIRE(beliefs.size() == 1);
  CHECK((beliefs[0].dist().cov() - 1e-8 * Matrix::Identity(8, 8)).norm() == 0.0);
  CHECK(beliefs[0].mean_matrix() == steps[0].theta);
  CHECK(beliefs[0].noise_cov() == noise(2, 1e-4));
  CHECK_THROWS_AS(nominal_belief(steps, 0.0), ContractViolation);
}

TEST_CASE("quadratic cost evaluation and homogeneous form") {
  Matrix cx(2, 2);
  cx << 100, 0, 0, 0;
  const QuadraticCost c(cx, Matrix::Constant(1, 1, 1e-3), cx, x_of({1, 0}));
  const Vector x = x_of({0.5, 2}), u = x_of({3});
  CHECK(c.stage(x, u) == doctest::Approx(100 * 0.25 + 1e-3 * 9));
  const Vector tau = StateActionVector(x, u).tau();
  CHECK(tau.dot(c.stage_homogeneous() * tau) == doctest::Approx(c.stage(x, u)).epsilon(1e-14));
  CHECK(c.terminal_value()(x) == doctest::Approx(c.terminal(x)).epsilon(1e-14));
  CHECK_THROWS_AS(QuadraticCost(cx, Matrix::Zero(1, 1), cx, x_of({1, 0})), ContractViolation);
}

TEST_CASE("problem validation") {
  const NonlinearSystem msd = systems::mass_spring_damper(0.01, noise(2, 1e-4));
  const QuadraticCost c(Matrix::Identity(2, 2), Matrix::Identity(1, 1), Matrix::Identity(2, 2), Vector::Zero(2));
  Problem p = make_problem(msd, 5, Gaussian::standard(2), c, 1e-4, false);
  CHECK(p.nominal.size() == 4);
  CHECK_FALSE(p.system.has_value());
  p.validate();
  p.nominal.pop_back();
  CHECK_THROWS_AS(p.validate(), ContractViolation);
}

}  // TEST_SUITE

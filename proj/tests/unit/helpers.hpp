#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "drto/gauss.hpp"
#include "drto/model.hpp"

namespace testing {

using drto::Matrix;
using drto::Vector;

inline Matrix random_spd(std::mt19937_64& rng, drto::Index n, double floor = 0.1) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (drto::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
  return a * a.transpose() / double(n) + floor * Matrix::Identity(n, n);
}

inline Vector random_vector(std::mt19937_64& rng, drto::Index n, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Vector v(n);
  for (drto::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

inline drto::Gaussian random_gaussian(std::mt19937_64& rng, drto::Index n) {
  return {random_vector(rng, n), random_spd(rng, n)};
}

/// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

/// Scalar system x' = a x + b u + c with a belief N(mean, cov) over [a, b, c].
inline drto::ParameterBelief scalar_belief(const Vector& mean, const Matrix& cov, double noise) {
  return drto::ParameterBelief(drto::Gaussian(mean, cov), Matrix::Constant(1, 1, noise), 1, 1);
}

}  // namespace testing

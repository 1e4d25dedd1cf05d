#pragma once

#include "drto/gauss.hpp"

namespace drto {

/// value(x) = x^T quad x + lin^T x + constant.
///
/// Used for both the policy value V^pi and the adversarial value V^theta.
struct QuadraticValue {
  Matrix quad;
  Vector lin;
  double constant = 0.0;

  static QuadraticValue zero(Index d);

  Index dim() const noexcept { return lin.size(); }
  double operator()(const Vector& x) const;

  /// E[value(x)] for x ~ g.
  double expectation(const Gaussian& g) const;

  /// Symmetric (d+1)x(d+1) matrix H with value(x) = [x;1]^T H [x;1].
  Matrix homogeneous() const;
  static QuadraticValue from_homogeneous(const Matrix& h);
};

/// Quadratic form in (x, u):
///   Q(x,u) = x^T xx x + u^T uu u + 2 x^T xu u + x_lin^T x + u_lin^T u + constant.
struct QuadraticQ {
  Matrix xx;
  Matrix uu;
  Matrix xu;
  Vector x_lin;
  Vector u_lin;
  double constant = 0.0;

  Index state_dim() const noexcept { return x_lin.size(); }
  Index action_dim() const noexcept { return u_lin.size(); }
  double operator()(const Vector& x, const Vector& u) const;

  /// Symmetric H over tau = [x; u; 1] with Q = tau^T H tau.
  Matrix homogeneous() const;
  static QuadraticQ from_homogeneous(const Matrix& h, Index state_dim, Index action_dim);
};

}  // namespace drto

#include "drto/quadratic.hpp"

#include "drto/errors.hpp"

namespace drto {

QuadraticValue QuadraticValue::zero(Index d) { return {Matrix::Zero(d, d), Vector::Zero(d), 0.0}; }

double QuadraticValue::operator()(const Vector& x) const {
  return x.dot(quad * x) + lin.dot(x) + constant;
}

double QuadraticValue::expectation(const Gaussian& g) const {
  if (g.dim() != dim()) throw ContractViolation("QuadraticValue::expectation: dimension mismatch");
  return (*this)(g.mean()) + quad.cwiseProduct(g.cov()).sum();
}

Matrix QuadraticValue::homogeneous() const {
  const Index d = dim();
  Matrix h(d + 1, d + 1);
  h.topLeftCorner(d, d) = symmetrized(quad);
  h.topRightCorner(d, 1) = 0.5 * lin;
  h.bottomLeftCorner(1, d) = 0.5 * lin.transpose();
  h(d, d) = constant;
  return h;
}

QuadraticValue QuadraticValue::from_homogeneous(const Matrix& h) {
  const Index d = h.rows() - 1;
  const Matrix s = symmetrized(h);
  return {s.topLeftCorner(d, d), 2.0 * s.topRightCorner(d, 1), s(d, d)};
}

double QuadraticQ::operator()(const Vector& x, const Vector& u) const {
  return x.dot(xx * x) + u.dot(uu * u) + 2.0 * x.dot(xu * u) + x_lin.dot(x) + u_lin.dot(u) + constant;
}

Matrix QuadraticQ::homogeneous() const {
  const Index d = state_dim();
  const Index m = action_dim();
  const Index n = d + m + 1;
  Matrix h = Matrix::Zero(n, n);
  h.block(0, 0, d, d) = xx;
  h.block(d, d, m, m) = uu;
  h.block(0, d, d, m) = xu;
  h.block(d, 0, m, d) = xu.transpose();
  h.block(0, n - 1, d, 1) = 0.5 * x_lin;
  h.block(n - 1, 0, 1, d) = 0.5 * x_lin.transpose();
  h.block(d, n - 1, m, 1) = 0.5 * u_lin;
  h.block(n - 1, d, 1, m) = 0.5 * u_lin.transpose();
  h(n - 1, n - 1) = constant;
  return symmetrized(h);
}

QuadraticQ QuadraticQ::from_homogeneous(const Matrix& h, Index d, Index m) {
  if (h.rows() != d + m + 1 || h.cols() != d + m + 1) {
    throw ContractViolation("QuadraticQ::from_homogeneous: wrong size");
  }
  const Matrix s = symmetrized(h);
  const Index n = d + m + 1;
  return {s.block(0, 0, d, d),        s.block(d, d, m, m),        s.block(0, d, d, m),
          2.0 * s.block(0, n - 1, d, 1), 2.0 * s.block(d, n - 1, m, 1), s(n - 1, n - 1)};
}

}  // namespace drto

#include "drto/gauss.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "drto/errors.hpp"

namespace drto {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kJitterStart = 1e-12;
constexpr double kJitterStop = 1e-6;

bool all_finite(const Matrix& m) { return m.allFinite(); }

Eigen::LLT<Matrix> strict_llt(const Matrix& s, std::string_view label) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success || !all_finite(llt.matrixL().toDenseMatrix())) {
    const double pivot = s.size() == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly)
                                                    .eigenvalues()
                                                    .minCoeff();
    throw NotPositiveDefinite(std::string(label), pivot);
  }
  return llt;
}

}  // namespace

Matrix symmetrized(const Matrix& s) { return 0.5 * (s + s.transpose()); }

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw ContractViolation("Gaussian: mean has dimension " + std::to_string(mean_.size()) +
                            " but covariance is " + std::to_string(cov_.rows()) + "x" +
                            std::to_string(cov_.cols()));
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw NumericalError("Gaussian: non-finite mean or covariance", -1);
  }
  cov_ = symmetrized(cov_);
}

Gaussian Gaussian::standard(Index n) { return {Vector::Zero(n), Matrix::Identity(n, n)}; }

Matrix Gaussian::precision() const {
  const Index n = dim();
  return strict_llt(cov_, "covariance").solve(Matrix::Identity(n, n));
}

bool operator==(const Gaussian& a, const Gaussian& b) {
  return a.dim() == b.dim() && a.mean() == b.mean() && a.cov() == b.cov();
}

CholeskyFactor safe_cholesky(const Matrix& s, std::string_view label) {
  if (s.rows() != s.cols()) throw ContractViolation("safe_cholesky: matrix is not square");
  const Index n = s.rows();
  if (n == 0) return {Matrix(0, 0), 0.0};
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw ContractViolation("safe_cholesky: '" + std::string(label) + "' is not symmetric");
  }
  if (!all_finite(s)) throw NotPositiveDefinite(std::string(label), std::nan(""));

  const Matrix sym = symmetrized(s);
  if (sym.isZero(0.0)) return {Matrix::Zero(n, n), 0.0};

  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  const double mean_diag = sym.trace() / static_cast<double>(n);
  if (mean_diag > 0.0) {
    for (double jitter = kJitterStart * mean_diag; jitter <= kJitterStop * mean_diag * (1 + 1e-9);
         jitter *= 10.0) {
      llt.compute(sym + jitter * Matrix::Identity(n, n));
      if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
    }
  }
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  throw NotPositiveDefinite(std::string(label), min_eig);
}

double log_det_spd(const Matrix& s, std::string_view label) {
  const Eigen::LLT<Matrix> llt = strict_llt(s, label);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double kl_gaussian(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) {
    throw ContractViolation("kl_gaussian: dimensions " + std::to_string(p.dim()) + " and " +
                            std::to_string(q.dim()) + " differ");
  }
  if (p == q) return 0.0;
  const Index n = p.dim();
  const Eigen::LLT<Matrix> lq = strict_llt(q.cov(), "kl_gaussian: q covariance");
  const Eigen::LLT<Matrix> lp = strict_llt(p.cov(), "kl_gaussian: p covariance");

  const Matrix whitened = lq.matrixL().solve(Matrix(lp.matrixL()));
  const Vector diff = lq.matrixL().solve(q.mean() - p.mean());
  const double log_det_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
  const double log_det_p = 2.0 * lp.matrixLLT().diagonal().array().log().sum();
  const double kl = 0.5 * (whitened.squaredNorm() + diff.squaredNorm() - static_cast<double>(n) +
                           log_det_q - log_det_p);
  return std::max(kl, 0.0);
}

Gaussian precision_interpolate(const Gaussian& p, const Gaussian& q, double lambda) {
  if (p.dim() != q.dim()) throw ContractViolation("barycentric: dimension mismatch");
  if (lambda == 1.0) return p;
  if (lambda == 0.0) return q;
  const Index n = p.dim();
  const Matrix prec_p = strict_llt(p.cov(), "barycentric: p covariance").solve(Matrix::Identity(n, n));
  const Matrix prec_q = strict_llt(q.cov(), "barycentric: q covariance").solve(Matrix::Identity(n, n));
  const Matrix prec = symmetrized(lambda * prec_p + (1.0 - lambda) * prec_q);
  const Eigen::LLT<Matrix> llt = strict_llt(prec, "barycentric: interpolated precision");
  const Vector info = lambda * (prec_p * p.mean()) + (1.0 - lambda) * (prec_q * q.mean());
  return {llt.solve(info), llt.solve(Matrix::Identity(n, n))};
}

Gaussian barycentric(const Gaussian& p, const Gaussian& q, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ContractViolation("barycentric: lambda = " + std::to_string(lambda) + " outside [0, 1]");
  }
  return precision_interpolate(p, q, lambda);
}

}  // namespace drto

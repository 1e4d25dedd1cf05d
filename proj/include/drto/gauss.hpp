#pragma once

#include <Eigen/Core>
#include <string_view>

namespace drto {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Multivariate normal N(mean, cov).
///
/// The covariance is symmetrized as (S + S^T)/2 on construction. Definiteness
/// is not enforced here: degenerate beliefs (zero parameter covariance, zero
/// process noise) are legitimate inputs to propagation, and operations that
/// need a factorization check it themselves.
class Gaussian {
 public:
  Gaussian(Vector mean, Matrix cov);

  /// N(0, I_n).
  static Gaussian standard(Index n);

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }
  Index dim() const noexcept { return mean_.size(); }

  /// Inverse covariance, via Cholesky. Throws NotPositiveDefinite.
  Matrix precision() const;

 private:
  Vector mean_;
  Matrix cov_;
};

bool operator==(const Gaussian& a, const Gaussian& b);

/// Lower Cholesky factor with the diagonal shift that was needed to obtain it.
struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;
};

/// Cholesky factorization with bounded jitter repair.
///
/// Tries S first, then S + j I with j = 1e-12 * trace(S)/n growing tenfold up to
/// 1e-6 * trace(S)/n. An exactly zero matrix factors as zero. Throws
/// NotPositiveDefinite naming `label` if no attempt succeeds.
CholeskyFactor safe_cholesky(const Matrix& s, std::string_view label = "matrix");

/// KL(p || q) in closed form, computed from Cholesky factors.
double kl_gaussian(const Gaussian& p, const Gaussian& q);

/// Minimizer of lambda KL(h||p) + (1-lambda) KL(h||q) over Gaussians h, i.e.
/// the precision-weighted interpolant. lambda must lie in [0, 1].
Gaussian barycentric(const Gaussian& p, const Gaussian& q, double lambda);

/// Same precision-space formula without the range check, for extrapolating
/// past either endpoint. Throws NotPositiveDefinite when the combined
/// precision lambda P_p + (1-lambda) P_q loses definiteness.
Gaussian precision_interpolate(const Gaussian& p, const Gaussian& q, double lambda);

/// Symmetric part (S + S^T)/2.
Matrix symmetrized(const Matrix& s);

/// log det of a symmetric positive definite matrix via its Cholesky factor.
double log_det_spd(const Matrix& s, std::string_view label = "matrix");

}  // namespace drto

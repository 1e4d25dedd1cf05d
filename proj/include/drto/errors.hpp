#pragma once

#include <stdexcept>
#include <string>

namespace drto {

/// Base class of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments of an operation was violated.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite could not be factorized.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::string matrix, double min_pivot);
  const std::string& matrix() const noexcept { return matrix_; }
  double min_pivot() const noexcept { return min_pivot_; }

 private:
  std::string matrix_;
  double min_pivot_;
};

/// Non-finite values or failed factorizations inside a recursion. `step` is
/// the time index where it happened, or -1 when not tied to a step.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int step);
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// The exponentially tilted action precision lost definiteness: the policy
/// temperature is too small for the curvature of Q at `step`.
class BackwardPassFailure : public Error {
 public:
  BackwardPassFailure(int step, double eigenvalue);
  int step() const noexcept { return step_; }
  /// Smallest eigenvalue of the whitened tilted precision I + (2/alpha) L^T Quu L.
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  int step_;
  double eigenvalue_;
};

/// The tilted parameter precision is not positive definite, so no Gaussian
/// worst case exists at the probed adversary temperature.
class ExistenceFailure : public Error {
 public:
  ExistenceFailure(int step, double eigenvalue);
  int step() const noexcept { return step_; }
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  int step_;
  double eigenvalue_;
};

/// No policy temperature produced a usable update inside the trust region.
class InfeasibleTrustRegion : public Error {
 public:
  using Error::Error;
};

/// Neither the direct temperature search nor the sequential fallback found an
/// admissible worst-case distribution.
class AdversaryInfeasible : public Error {
 public:
  using Error::Error;
};

/// A sub-solver failed inside the outer loop. `iteration` is the 1-based
/// outer iteration and `stage` names the sub-solver.
class SolverFailure : public Error {
 public:
  SolverFailure(int iteration, std::string stage, const std::string& cause);
  int iteration() const noexcept { return iteration_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  int iteration_;
  std::string stage_;
};

/// Invalid experiment configuration. `field` is a dotted path into the config.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Reading or writing an experiment file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace drto

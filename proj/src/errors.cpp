#include "drto/errors.hpp"

#include <sstream>

namespace drto {

namespace {

std::string describe_pd(const std::string& matrix, double pivot) {
  std::ostringstream os;
  os << "matrix '" << matrix << "' is not positive definite (min pivot " << pivot << ")";
  return os.str();
}

std::string with_step(const std::string& what, int step) {
  if (step < 0) return what;
  std::ostringstream os;
  os << what << " at t=" << step;
  return os.str();
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::string matrix, double min_pivot)
    : Error(describe_pd(matrix, min_pivot)), matrix_(std::move(matrix)), min_pivot_(min_pivot) {}

NumericalError::NumericalError(const std::string& what, int step)
    : Error(with_step(what, step)), step_(step) {}

BackwardPassFailure::BackwardPassFailure(int step, double eigenvalue)
    : Error(with_step("tilted action precision not positive definite (eigenvalue " +
                          std::to_string(eigenvalue) + "); increase the policy temperature",
                      step)),
      step_(step),
      eigenvalue_(eigenvalue) {}

ExistenceFailure::ExistenceFailure(int step, double eigenvalue)
    : Error(with_step("worst-case parameter precision not positive definite (min eigenvalue " +
                          std::to_string(eigenvalue) + "); no Gaussian worst case exists",
                      step)),
      step_(step),
      eigenvalue_(eigenvalue) {}

SolverFailure::SolverFailure(int iteration, std::string stage, const std::string& cause)
    : Error("outer iteration " + std::to_string(iteration) + ", " + stage + ": " + cause),
      iteration_(iteration),
      stage_(std::move(stage)) {}

ConfigError::ConfigError(std::string field, const std::string& message)
    : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

}  // namespace drto

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drto/model.hpp"
#include "drto/solver.hpp"

namespace drto {

enum class SystemKind { mass_spring_damper, robot_car, custom_linear };

/// "mass_spring_damper", "robot_car", "custom_linear".
std::string to_string(SystemKind kind);

/// Continuous-time x_dot = F x + G u + c.
struct CustomLinearSpec {
  Matrix drift_state;
  Matrix drift_action;
  Vector drift_offset;
};

struct SweepSpec {
  int points = 21;
  double lambda_max = 2.0;
  std::vector<double> grid;  ///< explicit lambdas; overrides points/lambda_max when non-empty

  std::vector<double> lambdas() const;
};

/// One experiment: the problem, both solvers' settings, the sweep and the output location.
/// Standard deviations are per dimension; sigma_x and sigma_theta are isotropic.
struct ExperimentConfig {
  SystemKind system = SystemKind::mass_spring_damper;
  int horizon = 0;
  double dt = 0.0;
  Vector initial_mean;
  Vector initial_std;
  Vector goal;
  Vector state_cost;                   ///< diagonal of Cx
  Vector action_cost;                  ///< diagonal of Cu
  std::optional<Vector> terminal_cost;  ///< diagonal of CT, defaults to Cx
  double car_length = 0.1;
  std::optional<CustomLinearSpec> custom_linear;
  double sigma_theta = 0.0;
  double sigma_x = 0.0;
  SolveConfig solver;  ///< carries epsilon, delta, sigma_pi and seed too
  std::optional<int> baseline_outer_iters;  ///< iteration cap of the stochastic solve, defaults to solver.outer_iters
  SweepSpec sweep;
  std::string output_dir = "results";

  /// Settings of the stochastic baseline solve.
  SolveConfig baseline_solver() const;

  Index state_dim() const;
  Index action_dim() const;
  /// Throws ConfigError with the offending field path.
  void validate() const;
};

/// Parses a JSON document. Unknown keys, wrong types and violated invariants
/// raise ConfigError naming the field, e.g. "solver.lambda".
ExperimentConfig parse_config(const std::string& text);

/// Reads and parses a file. Throws IoError when it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON rendering with every default resolved. parse_config(echo(c)) == c.
std::string echo_config(const ExperimentConfig& config);

NonlinearSystem build_system(const ExperimentConfig& config);

/// Nominal linearized along the zero-action rollout; the system is kept when
/// the solver re-linearizes.
Problem build_problem(const ExperimentConfig& config);

}  // namespace drto

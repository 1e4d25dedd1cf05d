#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drto/config.hpp"
#include "drto/eval.hpp"
#include "drto/solver.hpp"

namespace drto {

struct ExperimentResult {
  RobustSolution robust;
  StochasticSolution stochastic;
  AdversaryResult attack;  ///< worst case against the stochastic policy and its final nominal
  std::vector<SweepRow> sweep;
  bool sweep_monotone = true;
};

/// Robust solve, stochastic solve, attack on the stochastic policy, then the
/// interpolation sweep between that attack's worst case and the nominal.
/// `parallel` runs the two solves on separate threads; results are identical.
ExperimentResult run_experiment(const ExperimentConfig& config, const Problem& problem, bool parallel = false);

struct TrajectoryCell {
  std::string name;
  StateBeliefTrajectory traj;
};

/// robust_nominal, robust_worst, stochastic_nominal, stochastic_worst.
std::vector<TrajectoryCell> trajectory_cells(const ExperimentResult& result, const Problem& problem);

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_number(double value);

std::string trajectory_csv(const std::vector<TrajectoryCell>& cells);  ///< cell,t,dim,mean,std
std::string kl_profile_csv(const std::vector<double>& kl);              ///< t,kl
std::string sweep_csv(const std::vector<SweepRow>& rows);               ///< lambda,distance,cost_stochastic,cost_robust,valid
std::string report_text(const ExperimentConfig& config, const ExperimentResult& result);
std::string failure_report(const ExperimentConfig& config, const std::string& diagnostics);

/// Writes trajectory.csv, kl_profile.csv, sweep.csv, report.txt and
/// config_echo.json into `dir`, creating it if needed. Throws IoError.
void write_artifacts(const ExperimentConfig& config, const Problem& problem, const ExperimentResult& result,
                     const std::filesystem::path& dir);

/// Writes a single text file, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace drto

#include "drto/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <system_error>

#include "drto/errors.hpp"

namespace drto {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Problem& problem, bool parallel) {
  config.validate();
  ExperimentResult out;
  if (parallel) {
    auto robust = std::async(std::launch::async, [&] { return solve_robust(problem, config.solver); });
    out.stochastic = solve_stochastic(problem, config.baseline_solver());
    out.robust = robust.get();
  } else {
    out.robust = solve_robust(problem, config.solver);
    out.stochastic = solve_stochastic(problem, config.baseline_solver());
  }
  try {
    out.attack = attack(out.stochastic.policy, out.stochastic.nominal, problem, config.solver);
  } catch (const ContractViolation&) {
    throw;
  } catch (const Error& e) {
    throw SolverFailure(0, "attack on the stochastic policy", e.what());
  }
  out.sweep = adversary_sweep(out.stochastic.policy, out.robust.policy, out.stochastic.nominal, out.attack.state.worst,
                              config.sweep.lambdas(), problem.initial, problem.cost);
  out.sweep_monotone = sweep_distance_monotone(out.sweep);
  return out;
}

std::vector<TrajectoryCell> trajectory_cells(const ExperimentResult& r, const Problem& problem) {
  const Gaussian& mu1 = problem.initial;
  return {{"robust_nominal", forward_pass(mu1, r.robust.policy, r.robust.nominal)},
          {"robust_worst", forward_pass(mu1, r.robust.policy, r.robust.worst)},
          {"stochastic_nominal", forward_pass(mu1, r.stochastic.policy, r.stochastic.nominal)},
          {"stochastic_worst", r.attack.traj}};
}

std::string trajectory_csv(const std::vector<TrajectoryCell>& cells) {
  std::ostringstream os;
  os << "cell,t,dim,mean,std\n";
  for (const auto& cell : cells) {
    for (std::size_t t = 0; t < cell.traj.size(); ++t) {
      const Gaussian& g = cell.traj[t];
      for (Index i = 0; i < g.dim(); ++i) {
        os << cell.name << ',' << t + 1 << ',' << i << ',' << format_number(g.mean()(i)) << ','
           << format_number(std::sqrt(g.cov()(i, i))) << '\n';
      }
    }
  }
  return os.str();
}

std::string kl_profile_csv(const std::vector<double>& kl) {
  std::ostringstream os;
  os << "t,kl\n";
  for (std::size_t t = 0; t < kl.size(); ++t) os << t + 1 << ',' << format_number(kl[t]) << '\n';
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "lambda,distance,cost_stochastic,cost_robust,valid\n";
  for (const auto& r : rows) {
    os << format_number(r.lambda) << ',' << format_number(r.distance) << ',' << format_number(r.cost_stochastic) << ','
       << format_number(r.cost_robust) << ',' << (r.valid ? 1 : 0) << '\n';
  }
  return os.str();
}

namespace {

void render_iterations(std::ostringstream& os, const SolveReport& report, bool robust) {
  os << "iterations: " << report.iterations.size() << "\n";
  os << "converged: " << (report.converged ? "yes" : "no") << "\n";
  if (report.iterations.empty()) return;
  const IterationRecord& last = report.iterations.back();
  os << "final cost_nominal: " << format_number(last.cost_nominal) << "\n";
  if (robust) {
    os << "final cost_worst: " << format_number(last.cost_worst) << "\n";
    os << "final beta: " << format_number(last.beta) << "\n";
  }
  os << "final alpha: " << format_number(last.alpha) << "\n";
  os << "\n";
  if (robust) {
    os << "k,cost_nominal,cost_worst,cost_worst_before,adversary_kl,policy_kl,alpha,beta,adversary_active,"
          "policy_active,fallback\n";
  } else {
    os << "k,cost_nominal,policy_kl,alpha,policy_active\n";
  }
  for (const auto& r : report.iterations) {
    os << r.k << ',' << format_number(r.cost_nominal) << ',';
    if (robust) {
      os << format_number(r.cost_worst) << ',' << format_number(r.cost_worst_before) << ','
         << format_number(r.adversary_kl) << ',';
    }
    os << format_number(r.policy_kl) << ',' << format_number(r.alpha) << ',';
    if (robust) os << format_number(r.beta) << ',' << r.adversary_active << ',';
    os << r.policy_active;
    if (robust) os << ',' << r.used_fallback;
    os << '\n';
  }
}

}  // namespace

std::string report_text(const ExperimentConfig& config, const ExperimentResult& r) {
  std::ostringstream os;
  os << "status: ok\n";
  os << "system: " << to_string(config.system) << "\n";
  os << "d=" << config.state_dim() << " m=" << config.action_dim() << " T=" << config.horizon << "\n";
  os << "epsilon: " << format_number(config.solver.epsilon) << "\n";
  os << "delta: " << format_number(config.solver.delta) << "\n";
  os << "seed: " << config.solver.seed << "\n";

  os << "\n[robust]\n";
  render_iterations(os, r.robust.report, true);
  os << "\n[stochastic]\n";
  render_iterations(os, r.stochastic.report, false);

  const auto& a = r.attack.report;
  os << "\n[attack on stochastic policy]\n";
  os << "kl: " << format_number(a.kl) << "\n";
  os << "beta: " << format_number(a.beta) << "\n";
  os << "active: " << (a.active ? "yes" : "no") << "\n";
  os << "fallback: " << (a.used_fallback ? "yes" : "no") << " (" << a.fallback_rounds << " rounds)\n";
  os << "probes: " << a.probes << "\n";

  os << "\n[sweep]\n";
  os << "rows: " << r.sweep.size() << "\n";
  std::size_t valid = 0;
  for (const auto& row : r.sweep) valid += row.valid ? 1 : 0;
  os << "valid rows: " << valid << "\n";
  os << "distance monotone on [0,1]: " << (r.sweep_monotone ? "yes" : "no") << "\n";
  return os.str();
}

std::string failure_report(const ExperimentConfig& config, const std::string& diagnostics) {
  std::ostringstream os;
  os << "status: failed\n";
  os << "system: " << to_string(config.system) << "\n";
  os << "d=" << config.state_dim() << " m=" << config.action_dim() << " T=" << config.horizon << "\n";
  os << "error: " << diagnostics << "\n";
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_artifacts(const ExperimentConfig& config, const Problem& problem, const ExperimentResult& result,
                     const std::filesystem::path& dir) {
  write_file(dir / "trajectory.csv", trajectory_csv(trajectory_cells(result, problem)));
  write_file(dir / "kl_profile.csv",
             kl_profile_csv(kl_profile(result.attack.state.worst, result.stochastic.nominal)));
  write_file(dir / "sweep.csv", sweep_csv(result.sweep));
  write_file(dir / "report.txt", report_text(config, result));
  write_file(dir / "config_echo.json", echo_config(config));
}

}  // namespace drto

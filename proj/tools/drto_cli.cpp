// drto: solve and inspect robust trajectory optimization experiments.
//
//   drto check --config configs/car.json
//   drto solve --config configs/linear.json --out results/linear [--seed N] [--parallel]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "drto/config.hpp"
#include "drto/errors.hpp"
#include "drto/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSolverFailure = 3;
constexpr int kIoFailure = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool parallel = false;
};

drto::ExperimentConfig load(const Options& o) {
  drto::ExperimentConfig c = drto::load_config(o.config);
  if (o.seed) c.solver.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

int run_check(const Options& o) {
  const drto::ExperimentConfig c = load(o);
  const drto::Problem p = drto::build_problem(c);
  std::cout << "system: " << drto::to_string(c.system) << "\n"
            << "d=" << p.state_dim() << "\n"
            << "m=" << p.action_dim() << "\n"
            << "T=" << p.horizon << "\n"
            << "params per step: " << drto::param_dim(p.state_dim(), p.action_dim()) << "\n"
            << "\n"
            << drto::echo_config(c);
  return kOk;
}

int run_solve(const Options& o) {
  const drto::ExperimentConfig c = load(o);
  const std::filesystem::path dir = c.output_dir;
  const drto::Problem p = drto::build_problem(c);
  drto::ExperimentResult r;
  try {
    r = drto::run_experiment(c, p, o.parallel);
  } catch (const drto::ConfigError&) {
    throw;
  } catch (const drto::Error& e) {
    drto::write_file(dir / "report.txt", drto::failure_report(c, e.what()));
    drto::write_file(dir / "config_echo.json", drto::echo_config(c));
    std::cerr << "drto: solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  drto::write_artifacts(c, p, r, dir);
  std::cout << "wrote " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust trajectory optimization"};
  app.require_subcommand(1);
  Options o;

  auto* check = app.add_subcommand("check", "Validate a config and print the problem dimensions");
  check->add_option("--config", o.config, "Experiment config (JSON)")->required();

  auto* solve = app.add_subcommand("solve", "Run the robust and stochastic solvers and write artifacts");
  solve->add_option("--config", o.config, "Experiment config (JSON)")->required();
  solve->add_option("--out", o.out, "Output directory (overrides output_dir)");
  solve->add_option("--seed", o.seed, "Seed (overrides the config)");
  solve->add_flag("--parallel", o.parallel, "Run the two solves concurrently");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*check) return run_check(o);
    return run_solve(o);
  } catch (const drto::ConfigError& e) {
    std::cerr << "drto: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const drto::IoError& e) {
    std::cerr << "drto: I/O error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const drto::Error& e) {
    std::cerr << "drto: error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "drto/adversary.hpp"
#include "drto/config.hpp"
#include "drto/errors.hpp"
#include "drto/eval.hpp"
#include "drto/experiment.hpp"
#include "drto/gauss.hpp"
#include "drto/model.hpp"
#include "drto/policy.hpp"
#include "drto/propagate.hpp"
#include "drto/solver.hpp"
#include "drto/systems.hpp"

namespace py = pybind11;
using namespace drto;

namespace {

py::dict iteration_dict(const IterationRecord& r) {
  py::dict d;
  d["k"] = r.k;
  d["cost_nominal"] = r.cost_nominal;
  d["cost_worst"] = r.cost_worst;
  d["cost_worst_before"] = r.cost_worst_before;
  d["adversary_kl"] = r.adversary_kl;
  d["policy_kl"] = r.policy_kl;
  d["alpha"] = r.alpha;
  d["beta"] = r.beta;
  d["adversary_active"] = r.adversary_active;
  d["policy_active"] = r.policy_active;
  d["used_fallback"] = r.used_fallback;
  return d;
}

}  // namespace

PYBIND11_MODULE(_drto, m) {
  m.doc() = "Distributionally robust trajectory optimization under parameter uncertainty";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ContractViolation>(m, "ContractViolation", error.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<BackwardPassFailure>(m, "BackwardPassFailure", error.ptr());
  py::register_exception<ExistenceFailure>(m, "ExistenceFailure", error.ptr());
  py::register_exception<InfeasibleTrustRegion>(m, "InfeasibleTrustRegion", error.ptr());
  py::register_exception<AdversaryInfeasible>(m, "AdversaryInfeasible", error.ptr());
  py::register_exception<SolverFailure>(m, "SolverFailure", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  // Gaussian algebra
  py::class_<Gaussian>(m, "Gaussian")
      .def(py::init<Vector, Matrix>(), py::arg("mean"), py::arg("cov"))
      .def_property_readonly("mean", &Gaussian::mean)
      .def_property_readonly("cov", &Gaussian::cov)
      .def_property_readonly("dim", &Gaussian::dim)
      .def("__repr__", [](const Gaussian& g) { return "Gaussian(dim=" + std::to_string(g.dim()) + ")"; });
  m.def("kl_gaussian", &kl_gaussian, py::arg("p"), py::arg("q"));
  m.def("barycentric", &barycentric, py::arg("p"), py::arg("q"), py::arg("lam"));
  m.def(
      "safe_cholesky",
      [](const Matrix& s) {
        const CholeskyFactor f = safe_cholesky(s);
        return py::make_tuple(f.lower, f.jitter);
      },
      py::arg("s"), "Returns (lower factor, applied jitter).");

  // Model
  py::class_<ParameterBelief>(m, "ParameterBelief")
      .def(py::init<Gaussian, Matrix, Index, Index>(), py::arg("dist"), py::arg("noise_cov"), py::arg("state_dim"),
           py::arg("action_dim"))
      .def_property_readonly("dist", &ParameterBelief::dist)
      .def_property_readonly("noise_cov", &ParameterBelief::noise_cov)
      .def_property_readonly("mean_matrix", &ParameterBelief::mean_matrix);
  py::class_<QuadraticCost>(m, "QuadraticCost")
      .def(py::init<Matrix, Matrix, Matrix, Vector>(), py::arg("state_weight"), py::arg("action_weight"),
           py::arg("terminal_weight"), py::arg("goal"))
      .def("stage", &QuadraticCost::stage)
      .def("terminal", &QuadraticCost::terminal);
  py::class_<NonlinearSystem>(m, "NonlinearSystem")
      .def_readonly("name", &NonlinearSystem::name)
      .def_readonly("state_dim", &NonlinearSystem::state_dim)
      .def_readonly("action_dim", &NonlinearSystem::action_dim)
      .def_readonly("dt", &NonlinearSystem::dt)
      .def("step", [](const NonlinearSystem& s, const Vector& x, const Vector& u) { return integrate(s, x, u); });
  m.def("mass_spring_damper", &systems::mass_spring_damper, py::arg("dt"), py::arg("process_noise_cov"));
  m.def("robot_car", &systems::robot_car, py::arg("dt"), py::arg("process_noise_cov"), py::arg("length") = 0.1);
  m.def("marginal_dynamics", [](const ParameterBelief& b, const Vector& x, const Vector& u) {
    return marginal_dynamics(b, StateActionVector(x, u));
  });
  py::class_<Problem>(m, "Problem")
      .def_readonly("horizon", &Problem::horizon)
      .def_readonly("initial", &Problem::initial)
      .def_readonly("cost", &Problem::cost)
      .def_readonly("nominal", &Problem::nominal)
      .def_property_readonly("state_dim", &Problem::state_dim)
      .def_property_readonly("action_dim", &Problem::action_dim);
  m.def("make_problem", &make_problem, py::arg("system"), py::arg("horizon"), py::arg("initial"), py::arg("cost"),
        py::arg("sigma_theta"), py::arg("keep_system") = false);

  // Policies and propagation
  py::class_<PolicyStep>(m, "PolicyStep")
      .def(py::init([](Matrix gain, Vector offset, Matrix cov) { return PolicyStep{gain, offset, cov}; }),
           py::arg("gain"), py::arg("offset"), py::arg("cov"))
      .def_readwrite("gain", &PolicyStep::gain)
      .def_readwrite("offset", &PolicyStep::offset)
      .def_readwrite("cov", &PolicyStep::cov);
  py::class_<LinearGaussianPolicy>(m, "LinearGaussianPolicy")
      .def(py::init([](std::vector<PolicyStep> steps) { return LinearGaussianPolicy{std::move(steps)}; }))
      .def_readwrite("steps", &LinearGaussianPolicy::steps)
      .def("__len__", &LinearGaussianPolicy::size)
      .def_static("zero_mean", &LinearGaussianPolicy::zero_mean, py::arg("steps"), py::arg("state_dim"),
                  py::arg("action_dim"), py::arg("sigma"));
  m.def("forward_pass", &forward_pass, py::arg("mu1"), py::arg("policy"), py::arg("params"));

  // Solvers
  py::class_<SolveConfig>(m, "SolveConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &SolveConfig::epsilon)
      .def_readwrite("delta", &SolveConfig::delta)
      .def_readwrite("outer_iters", &SolveConfig::outer_iters)
      .def_readwrite("lambda_", &SolveConfig::lambda)
      .def_readwrite("inner_tol", &SolveConfig::inner_tol)
      .def_readwrite("dual_tol", &SolveConfig::dual_tol)
      .def_readwrite("budget_tol", &SolveConfig::budget_tol)
      .def_readwrite("conv_tol", &SolveConfig::conv_tol)
      .def_readwrite("sigma_pi", &SolveConfig::sigma_pi)
      .def_readwrite("relinearize", &SolveConfig::relinearize)
      .def_readwrite("warm_start", &SolveConfig::warm_start)
      .def_readwrite("fallback_on_first_failure", &SolveConfig::fallback_on_first_failure)
      .def_readwrite("seed", &SolveConfig::seed);
  py::class_<RobustSolution>(m, "RobustSolution")
      .def_readonly("policy", &RobustSolution::policy)
      .def_readonly("worst", &RobustSolution::worst)
      .def_readonly("nominal", &RobustSolution::nominal)
      .def_property_readonly("converged", [](const RobustSolution& s) { return s.report.converged; })
      .def_property_readonly("iterations", [](const RobustSolution& s) {
        py::list out;
        for (const auto& r : s.report.iterations) out.append(iteration_dict(r));
        return out;
      });
  py::class_<StochasticSolution>(m, "StochasticSolution")
      .def_readonly("policy", &StochasticSolution::policy)
      .def_readonly("nominal", &StochasticSolution::nominal)
      .def_property_readonly("converged", [](const StochasticSolution& s) { return s.report.converged; })
      .def_property_readonly("iterations", [](const StochasticSolution& s) {
        py::list out;
        for (const auto& r : s.report.iterations) out.append(iteration_dict(r));
        return out;
      });
  py::class_<AdversaryResult>(m, "AdversaryResult")
      .def_property_readonly("worst", [](const AdversaryResult& r) { return r.state.worst; })
      .def_property_readonly("beta", [](const AdversaryResult& r) { return r.state.beta; })
      .def_property_readonly("kl", [](const AdversaryResult& r) { return r.report.kl; })
      .def_property_readonly("kl_per_step", [](const AdversaryResult& r) { return r.state.kl_per_step; })
      .def_property_readonly("active", [](const AdversaryResult& r) { return r.report.active; })
      .def_property_readonly("used_fallback", [](const AdversaryResult& r) { return r.report.used_fallback; })
      .def_readonly("traj", &AdversaryResult::traj);

  // The heavy entry points release the GIL.
  m.def("solve_robust", &solve_robust, py::arg("problem"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("solve_stochastic", &solve_stochastic, py::arg("problem"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("attack", &attack, py::arg("policy"), py::arg("nominal"), py::arg("problem"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "optimize_worst_case",
      [](const std::vector<ParameterBelief>& nominal, const LinearGaussianPolicy& policy, const Gaussian& mu1,
         const QuadraticCost& cost, double delta) { return optimize_worst_case(nominal, policy, mu1, cost, delta); },
      py::arg("nominal"), py::arg("policy"), py::arg("mu1"), py::arg("cost"), py::arg("delta"),
      py::call_guard<py::gil_scoped_release>());

  // Evaluation
  m.def("expected_cost", &expected_cost, py::arg("policy"), py::arg("beliefs"), py::arg("mu1"), py::arg("cost"));
  m.def(
      "mc_rollout",
      [](const LinearGaussianPolicy& policy, const std::vector<ParameterBelief>& beliefs, const Gaussian& mu1,
         const QuadraticCost& cost, std::size_t samples, std::uint64_t seed) {
        RolloutStats s;
        {
          py::gil_scoped_release release;
          s = mc_rollout(policy, beliefs, mu1, cost, samples, seed);
        }
        return py::make_tuple(s.mean, s.std_error);
      },
      py::arg("policy"), py::arg("beliefs"), py::arg("mu1"), py::arg("cost"), py::arg("samples"), py::arg("seed") = 0,
      "Returns (mean, standard error).");
  m.def("kl_profile", &kl_profile, py::arg("worst"), py::arg("nominal"));

  // Experiments
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_property_readonly("system", [](const ExperimentConfig& c) { return to_string(c.system); })
      .def_readwrite("horizon", &ExperimentConfig::horizon)
      .def_readwrite("solver", &ExperimentConfig::solver)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_property_readonly("state_dim", &ExperimentConfig::state_dim)
      .def_property_readonly("action_dim", &ExperimentConfig::action_dim)
      .def("validate", &ExperimentConfig::validate)
      .def("echo", [](const ExperimentConfig& c) { return echo_config(c); });
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("build_problem", &build_problem, py::arg("config"));
  m.def(
      "run_experiment",
      [](const ExperimentConfig& config, std::optional<std::filesystem::path> out) {
        py::dict result;
        Problem problem = build_problem(config);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config, problem);
          if (out) write_artifacts(config, problem, r, *out);
        }
        py::list sweep;
        for (const auto& row : r.sweep) {
          py::dict d;
          d["lambda"] = row.lambda;
          d["distance"] = row.distance;
          d["cost_stochastic"] = row.cost_stochastic;
          d["cost_robust"] = row.cost_robust;
          d["valid"] = row.valid;
          sweep.append(d);
        }
        result["robust"] = r.robust;
        result["stochastic"] = r.stochastic;
        result["attack"] = r.attack;
        result["sweep"] = sweep;
        result["report"] = report_text(config, r);
        return result;
      },
      py::arg("config"), py::arg("out") = py::none(),
      "Robust and stochastic solves, the attack on the stochastic policy and the sweep. Writes the CSV artifacts "
      "when `out` is given.");
}

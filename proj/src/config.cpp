#include "drto/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drto/errors.hpp"
#include "drto/eval.hpp"
#include "drto/systems.hpp"
#include "json.hpp"

namespace drto {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object view that remembers which keys were read, so leftovers can be rejected.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required key");
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }

  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v.get<int>();
  }

  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  Vector vector(const std::string& key) { return to_vector(at(key), path(key)); }

  // A scalar is broadcast to `size` entries.
  Vector vector_or_scalar(const std::string& key, Index size) {
    const json& v = at(key);
    if (v.is_number()) return Vector::Constant(size, v.get<double>());
    return to_vector(v, path(key));
  }

  Matrix matrix(const std::string& key) {
    const json& v = at(key);
    const std::string p = path(key);
    if (!v.is_array() || v.empty()) throw ConfigError(p, "expected a non-empty array of rows");
    const Index rows = static_cast<Index>(v.size());
    Index cols = -1;
    Matrix m;
    for (Index i = 0; i < rows; ++i) {
      const Vector row = to_vector(v[static_cast<std::size_t>(i)], p + "[" + std::to_string(i) + "]");
      if (cols < 0) {
        cols = row.size();
        m.resize(rows, cols);
      } else if (row.size() != cols) {
        throw ConfigError(p, "rows differ in length");
      }
      m.row(i) = row.transpose();
    }
    return m;
  }

  Object object(const std::string& key) { return Object(at(key), path(key)); }

  void reject_unknown() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(join(path_, item.key()), "unknown key");
    }
  }

 private:
  static Vector to_vector(const json& v, const std::string& p) {
    if (!v.is_array() || v.empty()) throw ConfigError(p, "expected a non-empty array of numbers");
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(p + "[" + std::to_string(i) + "]", "expected a number");
      out(static_cast<Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SystemKind parse_system(const std::string& name, const std::string& path) {
  if (name == "mass_spring_damper") return SystemKind::mass_spring_damper;
  if (name == "robot_car") return SystemKind::robot_car;
  if (name == "custom_linear" || name == "custom-linear") return SystemKind::custom_linear;
  throw ConfigError(path, "unknown system '" + name + "' (expected mass_spring_damper, robot_car or custom_linear)");
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be positive and finite");
}

void require_size(const Vector& v, Index size, const std::string& field) {
  if (v.size() != size) {
    throw ConfigError(field, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
}

void require_nonnegative(const Vector& v, const std::string& field) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= 0.0) || !std::isfinite(v(i))) throw ConfigError(field, "entries must be non-negative and finite");
  }
}

void require_finite(const Vector& v, const std::string& field) {
  if (!v.allFinite()) throw ConfigError(field, "entries must be finite");
}

Matrix diagonal(const Vector& v) { return v.asDiagonal(); }

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::mass_spring_damper:
      return "mass_spring_damper";
    case SystemKind::robot_car:
      return "robot_car";
    case SystemKind::custom_linear:
      return "custom_linear";
  }
  return "unknown";
}

std::vector<double> SweepSpec::lambdas() const { return grid.empty() ? sweep_grid(points, lambda_max) : grid; }

SolveConfig ExperimentConfig::baseline_solver() const {
  SolveConfig s = solver;
  if (baseline_outer_iters) s.outer_iters = *baseline_outer_iters;
  return s;
}

Index ExperimentConfig::state_dim() const {
  switch (system) {
    case SystemKind::mass_spring_damper:
      return 2;
    case SystemKind::robot_car:
      return 4;
    case SystemKind::custom_linear:
      return custom_linear ? custom_linear->drift_state.rows() : 0;
  }
  return 0;
}

Index ExperimentConfig::action_dim() const {
  switch (system) {
    case SystemKind::mass_spring_damper:
      return 1;
    case SystemKind::robot_car:
      return 2;
    case SystemKind::custom_linear:
      return custom_linear ? custom_linear->drift_action.cols() : 0;
  }
  return 0;
}

void ExperimentConfig::validate() const {
  if (system == SystemKind::custom_linear) {
    if (!custom_linear) throw ConfigError("custom_linear", "required when system is custom_linear");
    const Index d = custom_linear->drift_state.rows();
    if (custom_linear->drift_state.cols() != d) throw ConfigError("custom_linear.drift_state", "must be square");
    if (custom_linear->drift_action.rows() != d) {
      throw ConfigError("custom_linear.drift_action", "must have " + std::to_string(d) + " rows");
    }
    require_size(custom_linear->drift_offset, d, "custom_linear.drift_offset");
    if (!custom_linear->drift_state.allFinite() || !custom_linear->drift_action.allFinite()) {
      throw ConfigError("custom_linear", "entries must be finite");
    }
    require_finite(custom_linear->drift_offset, "custom_linear.drift_offset");
  } else if (custom_linear) {
    throw ConfigError("custom_linear", "only allowed when system is custom_linear");
  }
  const Index d = state_dim();
  const Index m = action_dim();

  if (horizon < 2) throw ConfigError("horizon", "must be at least 2");
  require_positive(dt, "dt");
  require_size(initial_mean, d, "initial_mean");
  require_finite(initial_mean, "initial_mean");
  require_size(initial_std, d, "initial_std");
  for (Index i = 0; i < d; ++i) require_positive(initial_std(i), "initial_std");
  require_size(goal, d, "goal");
  require_finite(goal, "goal");
  require_size(state_cost, d, "state_cost");
  require_nonnegative(state_cost, "state_cost");
  require_size(action_cost, m, "action_cost");
  require_nonnegative(action_cost, "action_cost");
  if (terminal_cost) {
    require_size(*terminal_cost, d, "terminal_cost");
    require_nonnegative(*terminal_cost, "terminal_cost");
  }
  require_positive(car_length, "car_length");
  require_positive(sigma_theta, "sigma_theta");
  require_positive(sigma_x, "sigma_x");
  solver.validate();
  if (baseline_outer_iters && *baseline_outer_iters < 1) {
    throw ConfigError("solver.baseline_outer_iters", "must be at least 1");
  }

  if (sweep.grid.empty()) {
    if (sweep.points < 2) throw ConfigError("sweep.points", "must be at least 2");
    require_positive(sweep.lambda_max, "sweep.lambda_max");
  } else {
    for (double l : sweep.grid) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("sweep.grid", "values must be non-negative and finite");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }

  ExperimentConfig c;
  try {
    Object root(doc, "");
    c.system = parse_system(root.string("system"), "system");
    if (root.has("custom_linear")) {
      Object cl = root.object("custom_linear");
      CustomLinearSpec spec;
      spec.drift_state = cl.matrix("drift_state");
      spec.drift_action = cl.matrix("drift_action");
      spec.drift_offset = cl.has("drift_offset") ? cl.vector("drift_offset") : Vector::Zero(spec.drift_state.rows());
      cl.reject_unknown();
      c.custom_linear = std::move(spec);
    }
    const Index d = c.state_dim();

    c.horizon = root.integer("horizon");
    c.dt = root.number("dt");
    c.initial_mean = root.vector_or_scalar("initial_mean", d);
    c.initial_std = root.vector_or_scalar("initial_std", d);
    c.goal = root.vector_or_scalar("goal", d);
    c.state_cost = root.vector("state_cost");
    c.action_cost = root.vector("action_cost");
    if (root.has("terminal_cost")) c.terminal_cost = root.vector("terminal_cost");
    c.car_length = root.number("car_length", c.car_length);
    c.sigma_theta = root.number("sigma_theta");
    c.sigma_x = root.number("sigma_x");
    c.solver.sigma_pi = root.number("sigma_pi");
    c.solver.epsilon = root.number("epsilon");
    c.solver.delta = root.number("delta");
    if (root.has("seed")) {
      const json& s = root.at("seed");
      if (!s.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
      c.solver.seed = s.get<std::uint64_t>();
    }
    c.output_dir = root.string("output_dir", c.output_dir);

    if (root.has("solver")) {
      Object s = root.object("solver");
      SolveConfig& sc = c.solver;
      sc.outer_iters = s.integer("outer_iters", sc.outer_iters);
      if (s.has("baseline_outer_iters")) c.baseline_outer_iters = s.integer("baseline_outer_iters");
      sc.lambda = s.number("lambda", sc.lambda);
      sc.inner_tol = s.number("inner_tol", sc.inner_tol);
      sc.dual_tol = s.number("dual_tol", sc.dual_tol);
      sc.budget_tol = s.number("budget_tol", sc.budget_tol);
      sc.conv_tol = s.number("conv_tol", sc.conv_tol);
      sc.relinearize = s.boolean("relinearize", sc.relinearize);
      sc.warm_start = s.boolean("warm_start", sc.warm_start);
      sc.fallback_on_first_failure = s.boolean("fallback_on_first_failure", sc.fallback_on_first_failure);
      s.reject_unknown();
    }
    if (root.has("sweep")) {
      Object s = root.object("sweep");
      c.sweep.points = s.integer("points", c.sweep.points);
      c.sweep.lambda_max = s.number("lambda_max", c.sweep.lambda_max);
      if (s.has("grid")) {
        const Vector g = s.vector("grid");
        c.sweep.grid.assign(g.data(), g.data() + g.size());
      }
      s.reject_unknown();
    }
    root.reject_unknown();
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("malformed value: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file '" + path.string() + "'");
  return parse_config(buf.str());
}

std::string echo_config(const ExperimentConfig& c) {
  json j;
  j["system"] = to_string(c.system);
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["initial_mean"] = to_json(c.initial_mean);
  j["initial_std"] = to_json(c.initial_std);
  j["goal"] = to_json(c.goal);
  j["state_cost"] = to_json(c.state_cost);
  j["action_cost"] = to_json(c.action_cost);
  if (c.terminal_cost) j["terminal_cost"] = to_json(*c.terminal_cost);
  if (c.system == SystemKind::robot_car) j["car_length"] = c.car_length;
  if (c.custom_linear) {
    j["custom_linear"] = {{"drift_state", to_json(c.custom_linear->drift_state)},
                          {"drift_action", to_json(c.custom_linear->drift_action)},
                          {"drift_offset", to_json(c.custom_linear->drift_offset)}};
  }
  j["sigma_theta"] = c.sigma_theta;
  j["sigma_x"] = c.sigma_x;
  j["sigma_pi"] = c.solver.sigma_pi;
  j["epsilon"] = c.solver.epsilon;
  j["delta"] = c.solver.delta;
  j["seed"] = c.solver.seed;
  j["output_dir"] = c.output_dir;
  j["solver"] = {{"outer_iters", c.solver.outer_iters}, {"lambda", c.solver.lambda},
                 {"inner_tol", c.solver.inner_tol},     {"dual_tol", c.solver.dual_tol},
                 {"budget_tol", c.solver.budget_tol},   {"conv_tol", c.solver.conv_tol},
                 {"relinearize", c.solver.relinearize}, {"warm_start", c.solver.warm_start},
                 {"fallback_on_first_failure", c.solver.fallback_on_first_failure}};
  if (c.baseline_outer_iters) j["solver"]["baseline_outer_iters"] = *c.baseline_outer_iters;
  json sweep = {{"points", c.sweep.points}, {"lambda_max", c.sweep.lambda_max}};
  if (!c.sweep.grid.empty()) sweep["grid"] = c.sweep.grid;
  j["sweep"] = sweep;
  return j.dump(2) + "\n";
}

NonlinearSystem build_system(const ExperimentConfig& c) {
  c.validate();
  const Matrix noise = c.sigma_x * c.sigma_x * Matrix::Identity(c.state_dim(), c.state_dim());
  switch (c.system) {
    case SystemKind::mass_spring_damper:
      return systems::mass_spring_damper(c.dt, noise);
    case SystemKind::robot_car:
      return systems::robot_car(c.dt, noise, c.car_length);
    case SystemKind::custom_linear:
      return systems::custom_linear(c.custom_linear->drift_state, c.custom_linear->drift_action,
                                    c.custom_linear->drift_offset, c.dt, noise);
  }
  throw ContractViolation("build_system: unknown system kind");
}

Problem build_problem(const ExperimentConfig& c) {
  const NonlinearSystem system = build_system(c);
  const Gaussian initial(c.initial_mean, diagonal(c.initial_std.cwiseProduct(c.initial_std)));
  const Matrix cx = diagonal(c.state_cost);
  const QuadraticCost cost(cx, diagonal(c.action_cost), c.terminal_cost ? diagonal(*c.terminal_cost) : cx, c.goal);
  return make_problem(system, c.horizon, initial, cost, c.sigma_theta, c.solver.relinearize);
}

}  // namespace drto

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace drto {

/// Settings for a root search on a KL-type constraint that decreases as the
/// temperature magnitude grows. The search variable is s = log|temperature|.
struct TemperatureSearchSettings {
  double target = 1.0;     ///< constraint budget
  double rel_tol = 0.02;   ///< accept |metric - target| <= rel_tol * target
  double log_step = 2.302585092994046;  ///< bracket expansion step in s (ln 10)
  double s_min = -30.0;    ///< smallest temperature probed; metric still below target here means inactive
  double s_max = 80.0;
  double step_growth = 1.0;  ///< bracket step multiplier per expansion
  int max_probes = 200;
  bool abort_on_infeasible = false;  ///< otherwise an infeasible probe counts as "too strong"
};

struct TemperatureProbe {
  double temperature_log = 0.0;
  std::optional<double> metric;  ///< empty when infeasible
};

template <typename Result>
struct TemperatureSearchOutcome {
  std::optional<Result> result;  ///< accepted iterate, metric <= (1 + rel_tol) target
  double temperature_log = 0.0;
  double metric = 0.0;
  bool active = false;   ///< metric within the tolerance band
  bool aborted = false;  ///< hit an infeasible probe with abort_on_infeasible
  bool inactive = false; ///< metric stayed below target down to s_min
  std::vector<TemperatureProbe> trace;
};

/// Bracketing then Illinois false position in s, falling back to bisection
/// when an end of the bracket is infeasible. `probe(s)` returns std::optional<std::pair<double, Result>>
/// holding (metric, result), or nullopt when the temperature is infeasible.
///
/// Infeasible probes are treated as lying on the strong side (metric above
/// target). If the metric stays below target down to s_min the constraint is
/// inactive and the iterate at the smallest probed s is returned.
template <typename Result, typename Probe>
TemperatureSearchOutcome<Result> search_temperature(Probe&& probe, double s0, const TemperatureSearchSettings& cfg) {
  TemperatureSearchOutcome<Result> out;
  const double lo_band = cfg.target * (1.0 - cfg.rel_tol);
  const double hi_band = cfg.target * (1.0 + cfg.rel_tol);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Bracket ends with f = log(metric / target); NaN when unknown (infeasible).
  std::optional<double> s_strong;  // metric > target, or infeasible
  std::optional<double> s_weak;    // metric < target
  double f_strong = nan;
  double f_weak = nan;
  std::optional<std::pair<double, Result>> best_weak;
  int probes = 0;
  int last_side = 0;  // +1 strong, -1 weak

  auto log_ratio = [&](double metric) { return metric > 0.0 ? std::log(metric / cfg.target) : nan; };

  // Returns true when the search is finished.
  auto evaluate = [&](double s) -> bool {
    ++probes;
    auto r = probe(s);
    out.trace.push_back({s, r ? std::optional<double>(r->first) : std::nullopt});
    if (!r) {
      if (cfg.abort_on_infeasible) {
        out.aborted = true;
        return true;
      }
      s_strong = s;
      f_strong = nan;
      last_side = 1;
      return false;
    }
    const double metric = r->first;
    if (metric >= lo_band && metric <= hi_band) {
      out.metric = metric;
      out.temperature_log = s;
      out.active = true;
      out.result = std::move(r->second);
      return true;
    }
    if (metric > hi_band) {
      if (last_side == 1 && std::isfinite(f_weak)) f_weak *= 0.5;  // Illinois step
      s_strong = s;
      f_strong = log_ratio(metric);
      last_side = 1;
    } else {
      if (last_side == -1 && std::isfinite(f_strong)) f_strong *= 0.5;
      s_weak = s;
      f_weak = log_ratio(metric);
      best_weak = std::move(*r);
      last_side = -1;
    }
    return false;
  };

  auto finish_weak = [&](bool active) {
    if (best_weak) {
      out.metric = best_weak->first;
      out.temperature_log = *s_weak;
      out.active = active;
      out.result = std::move(best_weak->second);
    }
    return out;
  };

  double s = std::min(std::max(s0, cfg.s_min), cfg.s_max);
  if (evaluate(s)) return out;

  // Expand until the root is bracketed.
  double step = cfg.log_step;
  while (!(s_strong && s_weak)) {
    if (probes >= cfg.max_probes) return finish_weak(false);
    if (!s_weak) {
      s += step;
      if (s > cfg.s_max) return out;  // never got below target
    } else {
      s -= step;
      if (s < cfg.s_min) {
        out.inactive = true;
        return finish_weak(false);
      }
    }
    step *= cfg.step_growth;
    if (evaluate(s)) return out;
  }

  // False position on f(s) while both ends are known, bisection otherwise.
  while (probes < cfg.max_probes && std::abs(*s_weak - *s_strong) > 1e-12) {
    const double a = *s_weak;
    const double b = *s_strong;
    double next = 0.5 * (a + b);
    if (std::isfinite(f_weak) && std::isfinite(f_strong) && f_strong > f_weak) {
      const double cand = a - f_weak * (b - a) / (f_strong - f_weak);
      const double margin = 0.02 * std::abs(b - a);
      if (std::isfinite(cand) && cand > std::min(a, b) + margin && cand < std::max(a, b) - margin) next = cand;
    }
    if (evaluate(next)) return out;
  }
  return finish_weak(best_weak && best_weak->first >= lo_band);
}

}  // namespace drto

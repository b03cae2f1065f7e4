#pragma once

// INI experiment files.
//
//   [map]        q_star, h_star, theta_star                 (required)
//   [dither]     amplitude, omega                           (required)
//   [controller] k, omega_r (required); scheme = newton|gradient;
//                extremum = max|min
//   [trigger]    sigma, beta, refine_tol, xi_floor
//   [init]       theta_hat0 (required), gamma0 (required for newton)
//   [sim]        t_end (required), dt, record_stride, max_events_per_period,
//                divergence_limit
//   [demod]      mode = period_average|raw, window_passes,
//                hessian_lpf_order, hessian_lpf_ratio
//   [experiment] mode = run|compare|sweep|average, sweep_axis, sweep_values,
//                average_variant, window_start, window_end
//
// Unknown sections or keys are rejected so that typos cannot fall back to
// defaults silently.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "etes/sim.hpp"

namespace etes {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentMode { run, compare, sweep, average };
enum class SweepAxis { omega, a, sigma, beta };

struct ExperimentSpec {
  SimConfig base;
  ExperimentMode mode = ExperimentMode::run;
  std::optional<SweepAxis> sweep_axis;
  std::vector<double> sweep_values;
  AverageVariant average_variant = AverageVariant::nonlinear;
  double window_start = 0.0;  ///< averaging-deviation window
  double window_end = 200.0;
  std::vector<std::string> warnings;

  void validate() const {
    base.validate();
    if ((mode == ExperimentMode::sweep) != sweep_axis.has_value()) {
      throw ConfigError("experiment.sweep_axis must be set exactly when experiment.mode = sweep");
    }
    if (mode == ExperimentMode::sweep) {
      if (sweep_values.empty()) throw ConfigError("experiment.sweep_values must not be empty");
      for (double v : sweep_values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw ConfigError("experiment.sweep_values must all be positive");
        }
      }
    }
    if (!(window_end > window_start)) {
      throw ConfigError("experiment.window_end must exceed experiment.window_start");
    }
  }
};

inline const char* to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::run: return "run";
    case ExperimentMode::compare: return "compare";
    case ExperimentMode::sweep: return "sweep";
    case ExperimentMode::average: return "average";
  }
  return "?";
}

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::omega: return "omega";
    case SweepAxis::a: return "a";
    case SweepAxis::sigma: return "sigma";
    case SweepAxis::beta: return "beta";
  }
  return "?";
}

inline const char* to_string(Scheme s) { return s == Scheme::newton ? "newton" : "gradient"; }

inline const char* to_string(AverageVariant v) {
  return v == AverageVariant::nonlinear ? "nonlinear" : "linearized";
}

inline ExperimentMode parse_mode(const std::string& s, const std::string& key) {
  if (s == "run") return ExperimentMode::run;
  if (s == "compare") return ExperimentMode::compare;
  if (s == "sweep") return ExperimentMode::sweep;
  if (s == "average") return ExperimentMode::average;
  throw ConfigError(fmt::format("{} must be one of run|compare|sweep|average, got '{}'", key, s));
}

/// Applies one swept value to a copy of the base configuration.
inline SimConfig with_axis(SimConfig cfg, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::omega:
      cfg.dither.omega = v;
      // A default step follows the dither period; an explicit one is kept.
      break;
    case SweepAxis::a: cfg.dither.amplitude = v; break;
    case SweepAxis::sigma: cfg.trigger.sigma = v; break;
    case SweepAxis::beta: cfg.trigger.beta = v; break;
  }
  return cfg;
}

namespace detail {

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) {
      std::string s = *v;
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }
    return std::nullopt;
  }

  std::optional<double> number(const std::string& key) {
    auto s = raw(key);
    if (!s) return std::nullopt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(*s, &pos);
      if (pos != s->size()) throw std::invalid_argument("trailing");
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{} must be a finite number, got '{}'", key, *s));
    }
  }

  double number_or(const std::string& key, double fallback) {
    return number(key).value_or(fallback);
  }

  std::optional<int> integer(const std::string& key) {
    auto v = number(key);
    if (!v) return std::nullopt;
    if (std::floor(*v) != *v || std::abs(*v) > 1e9) {
      throw ConfigError(fmt::format("{} must be an integer", key));
    }
    return static_cast<int>(*v);
  }

  std::vector<double> list(const std::string& key) {
    std::vector<double> out;
    auto s = raw(key);
    if (!s) return out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) throw std::invalid_argument("empty");
        item = item.substr(b);
        out.push_back(std::stod(item, &pos));
        if (item.find_first_not_of(" \t", pos) != std::string::npos) {
          throw std::invalid_argument("trailing");
        }
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("{} must be a comma-separated list of numbers", key));
      }
    }
    return out;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        out.push_back(section);
        continue;
      }
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) out.push_back(full);
      }
    }
    return out;
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses an experiment from INI text. `origin` labels error messages.
inline ExperimentSpec parse_config(const std::string& text, const std::string& origin = "config") {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: line {}: {}", origin, e.line(), e.message()));
  }
  detail::IniReader r(tree);
  ExperimentSpec spec;
  SimConfig& c = spec.base;

  const std::vector<std::string> required_map = {"map.q_star", "map.h_star", "map.theta_star",
                                                 "dither.amplitude", "dither.omega",
                                                 "controller.k", "controller.omega_r",
                                                 "init.theta_hat0", "sim.t_end"};
  std::vector<std::string> missing;
  std::map<std::string, double> req;
  for (const auto& key : required_map) {
    if (auto v = r.number(key)) {
      req[key] = *v;
    } else {
      missing.push_back(key);
    }
  }

  const std::string scheme = r.raw("controller.scheme").value_or("newton");
  if (scheme == "newton") {
    c.scheme = Scheme::newton;
  } else if (scheme == "gradient") {
    c.scheme = Scheme::gradient;
  } else {
    throw ConfigError(fmt::format("controller.scheme must be newton or gradient, got '{}'", scheme));
  }
  auto gamma0 = r.number("init.gamma0");
  if (c.scheme == Scheme::newton && !gamma0) missing.push_back("init.gamma0");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError(fmt::format("{}: missing required keys: {}", origin, list));
  }

  c.map = MapParams{req["map.q_star"], req["map.h_star"], req["map.theta_star"]};
  c.dither = Dither{req["dither.amplitude"], req["dither.omega"]};
  c.gains = Gains{req["controller.k"], req["controller.omega_r"]};
  c.theta_hat0 = req["init.theta_hat0"];
  c.t_end = req["sim.t_end"];
  c.gamma0 = gamma0.value_or(c.gamma0);

  const std::string extremum = r.raw("controller.extremum").value_or("max");
  if (extremum != "max" && extremum != "min") {
    throw ConfigError(fmt::format("controller.extremum must be max or min, got '{}'", extremum));
  }
  c.maximize = extremum == "max";

  c.trigger.sigma = r.number_or("trigger.sigma", c.trigger.sigma);
  c.trigger.beta = r.number_or("trigger.beta", c.trigger.beta);
  c.trigger.refine_tol = r.number_or("trigger.refine_tol", c.trigger.refine_tol);
  c.trigger.xi_floor = r.number_or("trigger.xi_floor", c.trigger.xi_floor);

  c.dt = r.number_or("sim.dt", 0.0);
  if (auto d = r.number("sim.dt"); d && !(*d > 0.0)) {
    throw ConfigError("sim.dt must be > 0 (omit it for T/200)");
  }
  c.record_stride = r.integer("sim.record_stride").value_or(1);
  c.max_events_per_period = r.number_or("sim.max_events_per_period", 0.0);
  c.divergence_limit = r.number_or("sim.divergence_limit", c.divergence_limit);

  const std::string dmode = r.raw("demod.mode").value_or("period_average");
  if (dmode == "period_average") {
    c.demod.mode = DemodMode::period_average;
  } else if (dmode == "raw") {
    c.demod.mode = DemodMode::raw;
  } else {
    throw ConfigError(fmt::format("demod.mode must be period_average or raw, got '{}'", dmode));
  }
  c.demod.window_passes = r.integer("demod.window_passes").value_or(c.demod.window_passes);
  c.demod.hessian_lpf_order =
      r.integer("demod.hessian_lpf_order").value_or(c.demod.hessian_lpf_order);
  c.demod.hessian_lpf_ratio = r.number_or("demod.hessian_lpf_ratio", c.demod.hessian_lpf_ratio);

  spec.mode = parse_mode(r.raw("experiment.mode").value_or("run"), "experiment.mode");
  if (auto axis = r.raw("experiment.sweep_axis")) {
    if (*axis == "omega") {
      spec.sweep_axis = SweepAxis::omega;
    } else if (*axis == "a") {
      spec.sweep_axis = SweepAxis::a;
    } else if (*axis == "sigma") {
      spec.sweep_axis = SweepAxis::sigma;
    } else if (*axis == "beta") {
      spec.sweep_axis = SweepAxis::beta;
    } else {
      throw ConfigError(fmt::format(
          "experiment.sweep_axis must be one of omega|a|sigma|beta, got '{}'", *axis));
    }
  }
  spec.sweep_values = r.list("experiment.sweep_values");
  const std::string variant = r.raw("experiment.average_variant").value_or("nonlinear");
  if (variant == "nonlinear") {
    spec.average_variant = AverageVariant::nonlinear;
  } else if (variant == "linearized") {
    spec.average_variant = AverageVariant::linearized;
  } else {
    throw ConfigError(fmt::format(
        "experiment.average_variant must be nonlinear or linearized, got '{}'", variant));
  }
  spec.window_start = r.number_or("experiment.window_start", spec.window_start);
  spec.window_end = r.number_or("experiment.window_end", spec.window_end);

  if (auto unknown = r.unknown(); !unknown.empty()) {
    throw ConfigError(fmt::format("{}: unknown key '{}'", origin, unknown.front()));
  }

  try {
    spec.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  spec.warnings = c.warnings();
  return spec;
}

}  // namespace etes

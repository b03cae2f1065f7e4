// Command-line driver: run, compare, sweep and average experiments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "etes/analysis.hpp"
#include "etes/config.hpp"
#include "etes/io.hpp"
#include "etes/sim.hpp"
#include "etes/svg.hpp"

namespace fs = std::filesystem;
using namespace etes;

namespace {

enum ExitCode : int {
  kOk = 0,
  kConfig = 1,
  kIo = 2,
  kDivergence = 3,
  kZeno = 4,
  kInternal = 5,
};

struct Options {
  std::string config;
  std::string mode;
  std::string out = "out";
  bool no_plots = false;
  bool seedless = false;  // no-op: no run draws random numbers
};

std::string real(double v) { return format_real(v); }

MetricRows metric_rows(const SimConfig& cfg, const RunResult& run, const std::string& prefix) {
  const Metrics m = compute_metrics(cfg, run);
  const EnvelopeFit et = envelope_check_theta(run.trajectory, cfg.map, cfg);
  const EnvelopeFit ey = envelope_check_y(run.trajectory, cfg.map, cfg);
  const EnvelopeFit eg = envelope_check_gamma(run.trajectory, cfg.map, cfg);
  const DwellStats dw = dwell_stats(run.events, m.tau_star);
  return {
      {prefix + "scheme", to_string(cfg.scheme)},
      {prefix + "update_count", std::to_string(m.update_count)},
      {prefix + "min_dwell", real(m.min_dwell)},
      {prefix + "mean_dwell", real(m.mean_dwell)},
      {prefix + "tau_star", real(m.tau_star)},
      {prefix + "min_dwell_below_tau_star", dw.violates_bound ? "1" : "0"},
      {prefix + "convergence_time_theta", real(m.convergence_time_theta)},
      {prefix + "steady_residual_theta", real(m.steady_residual_theta)},
      {prefix + "steady_residual_gamma", real(m.steady_residual_gamma)},
      {prefix + "theta_final", real(m.theta_final)},
      {prefix + "gamma_final", real(m.gamma_final)},
      {prefix + "max_abs_u", real(m.max_abs_u)},
      {prefix + "envelope_c_theta", real(et.c)},
      {prefix + "envelope_c_y", real(ey.c)},
      {prefix + "envelope_c_gamma", real(eg.c)},
  };
}

void write_run(const fs::path& dir, const SimConfig& cfg, const RunResult& run, bool plots,
               const std::string& label) {
  fs::create_directories(dir);
  std::ostringstream traj;
  write_trajectory(traj, run.trajectory);
  write_text(dir / "trajectory.csv", traj.str());
  std::ostringstream ev;
  write_events(ev, run.events);
  write_text(dir / "events.csv", ev.str());
  std::ostringstream met;
  write_metrics(met, metric_rows(cfg, run, ""));
  write_text(dir / "metrics.csv", met.str());
  if (plots) {
    const std::vector<PlotSeries> s = {{label, "#1f4e9c", &run.trajectory, &run.events}};
    write_text(dir / "plot.svg", render_svg(s, label, cfg.map.theta_star,
                                            cfg.scheme == Scheme::newton
                                                ? 1.0 / cfg.map.h_star
                                                : std::numeric_limits<double>::quiet_NaN()));
  }
}

int mode_run(const ExperimentSpec& spec, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult run = run_full(spec.base);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run(opt.out, spec.base, run, !opt.no_plots, to_string(spec.base.scheme));
  const Metrics m = compute_metrics(spec.base, run);
  fmt::print("run: scheme={} updates={} theta_final={:.6g} gamma_final={:.6g} ({:.2f} s)\n",
             to_string(spec.base.scheme), m.update_count, m.theta_final, m.gamma_final, secs);
  return kOk;
}

int mode_compare(const ExperimentSpec& spec, const Options& opt) {
  SimConfig newton = spec.base;
  newton.scheme = Scheme::newton;
  SimConfig gradient = spec.base;
  gradient.scheme = Scheme::gradient;
  auto fn = std::async(std::launch::async, [&] { return run_full(newton); });
  auto fg = std::async(std::launch::async, [&] { return run_full(gradient); });
  const RunResult rn = fn.get();
  const RunResult rg = fg.get();
  const fs::path out(opt.out);
  write_run(out / "newton", newton, rn, false, "newton");
  write_run(out / "gradient", gradient, rg, false, "gradient");

  MetricRows rows = metric_rows(newton, rn, "newton.");
  for (auto& row : metric_rows(gradient, rg, "gradient.")) rows.push_back(row);
  const Metrics mn = compute_metrics(newton, rn);
  const Metrics mg = compute_metrics(gradient, rg);
  rows.push_back({"newton_updates_le_gradient", mn.update_count <= mg.update_count ? "1" : "0"});
  std::ostringstream met;
  write_metrics(met, rows);
  write_text(out / "summary.csv", met.str());
  if (!opt.no_plots) {
    const std::vector<PlotSeries> s = {{"newton", "#1f4e9c", &rn.trajectory, &rn.events},
                                       {"gradient", "#c0392b", &rg.trajectory, &rg.events}};
    write_text(out / "plot.svg", render_svg(s, "newton vs gradient", newton.map.theta_star,
                                            1.0 / newton.map.h_star));
  }
  fmt::print("compare: newton updates={} gradient updates={}\n", mn.update_count,
             mg.update_count);
  fmt::print("         newton t_conv={:.4g} s max|u|={:.4g}; gradient t_conv={:.4g} s max|u|={:.4g}\n",
             mn.convergence_time_theta, mn.max_abs_u, mg.convergence_time_theta, mg.max_abs_u);
  return kOk;
}

struct SweepPoint {
  double value = 0.0;
  Metrics full;
  double deviation = 0.0;
};

int mode_sweep(const ExperimentSpec& spec, const Options& opt) {
  const SweepAxis axis = *spec.sweep_axis;
  const AverageVariant variant =
      spec.base.scheme == Scheme::gradient ? AverageVariant::nonlinear : spec.average_variant;
  const fs::path out(opt.out);
  std::vector<std::future<SweepPoint>> jobs;
  for (double v : spec.sweep_values) {
    jobs.push_back(std::async(std::launch::async, [&, v] {
      const SimConfig cfg = with_axis(spec.base, axis, v);
      cfg.validate();
      const RunResult full = run_full(cfg);
      const RunResult avg = run_average(cfg, variant);
      SweepPoint p;
      p.value = v;
      p.full = compute_metrics(cfg, full);
      p.deviation = averaging_deviation(full.trajectory, avg.trajectory, spec.window_start,
                                        spec.window_end, cfg.map.theta_star);
      write_run(out / fmt::format("{}_{}", to_string(axis), v), cfg, full, !opt.no_plots,
                fmt::format("{} = {}", to_string(axis), v));
      return p;
    }));
  }
  std::vector<SweepPoint> points;
  for (auto& j : jobs) points.push_back(j.get());

  std::string table = fmt::format("{},update_count,convergence_time_theta,min_dwell,averaging_sup_dev\n",
                                  to_string(axis));
  fmt::print("{:>10} {:>8} {:>12} {:>12} {:>14}\n", to_string(axis), "updates", "t_conv",
             "min_dwell", "avg_sup_dev");
  bool monotone = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    table += fmt::format("{},{},{},{},{}\n", real(p.value), p.full.update_count,
                         real(p.full.convergence_time_theta), real(p.full.min_dwell),
                         real(p.deviation));
    fmt::print("{:>10.4g} {:>8} {:>12.4g} {:>12.4g} {:>14.6g}\n", p.value, p.full.update_count,
               p.full.convergence_time_theta, p.full.min_dwell, p.deviation);
    if (i > 0 && p.deviation > 1.1 * points[i - 1].deviation) monotone = false;
  }
  fs::create_directories(out);
  write_text(out / "sweep.csv", table);
  fmt::print("deviation non-increasing (10% slack): {}\n", monotone ? "yes" : "no");
  return kOk;
}

int mode_average(const ExperimentSpec& spec, const Options& opt) {
  const SimConfig& cfg = spec.base;
  const AverageVariant variant =
      cfg.scheme == Scheme::gradient ? AverageVariant::nonlinear : spec.average_variant;
  auto ff = std::async(std::launch::async, [&] { return run_full(cfg); });
  auto fa = std::async(std::launch::async, [&] { return run_average(cfg, variant); });
  const RunResult full = ff.get();
  const RunResult avg = fa.get();
  const fs::path out(opt.out);
  write_run(out / "full", cfg, full, false, "full");
  write_run(out / "average", cfg, avg, false, "average");

  const double dev = averaging_deviation(full.trajectory, avg.trajectory, spec.window_start,
                                         spec.window_end, cfg.map.theta_star);
  const double margin = lyapunov_decay_check(avg.trajectory, avg.events, cfg);
  MetricRows rows = metric_rows(cfg, full, "full.");
  for (auto& row : metric_rows(cfg, avg, "average.")) rows.push_back(row);
  rows.push_back({"average_variant", to_string(variant)});
  rows.push_back({"lyapunov_margin", real(margin)});
  rows.push_back({"averaging_sup_dev", real(dev)});
  std::ostringstream met;
  write_metrics(met, rows);
  write_text(out / "summary.csv", met.str());
  if (!opt.no_plots) {
    const std::vector<PlotSeries> s = {{"full", "#1f4e9c", &full.trajectory, &full.events},
                                       {"average", "#27ae60", &avg.trajectory, &avg.events}};
    write_text(out / "plot.svg",
               render_svg(s, fmt::format("full vs {} average", to_string(variant)),
                          cfg.map.theta_star,
                          cfg.scheme == Scheme::newton ? 1.0 / cfg.map.h_star
                                                       : std::numeric_limits<double>::quiet_NaN()));
  }
  fmt::print("average ({}): full updates={} average updates={} lyapunov_margin={:.6g} sup_dev={:.6g}\n",
             to_string(variant), update_count(full.events), update_count(avg.events), margin, dev);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered Newton-based extremum seeking simulator"};
  Options opt;
  app.add_option("--config", opt.config, "experiment INI file")->required();
  app.add_option("--mode", opt.mode, "run | compare | sweep | average (overrides the file)")
      ->check(CLI::IsMember({"run", "compare", "sweep", "average"}));
  app.add_option("--out", opt.out, "output directory");
  app.add_flag("--no-plots", opt.no_plots, "skip SVG output");
  app.add_flag("--seedless", opt.seedless, "no effect; runs are deterministic and use no RNG");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    ExperimentSpec spec = load_config(opt.config);
    if (!opt.mode.empty()) {
      spec.mode = parse_mode(opt.mode, "--mode");
      spec.validate();
    }
    for (const auto& w : spec.warnings) fmt::print(stderr, "warning: {}\n", w);
    switch (spec.mode) {
      case ExperimentMode::run: return mode_run(spec, opt);
      case ExperimentMode::compare: return mode_compare(spec, opt);
      case ExperimentMode::sweep: return mode_sweep(spec, opt);
      case ExperimentMode::average: return mode_average(spec, opt);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    fmt::print(stderr, "io error: {}\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "io error: {}\n", e.what());
    return kIo;
  } catch (const ZenoError& e) {
    fmt::print(stderr, "zeno guard: {}\n", e.what());
    return kZeno;
  } catch (const DivergenceError& e) {
    fmt::print(stderr, "divergence: {}\n", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return kInternal;
  }
  return kInternal;
}

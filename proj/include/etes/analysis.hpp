#pragma once

// Post-run checks against the convergence envelopes, the Lyapunov decay of
// the averaged loop, dwell-time statistics and full-versus-average
// deviation. Everything here is a pure function of recorded runs and may use
// the true map parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "etes/sim.hpp"

namespace etes {

struct Metrics {
  std::size_t update_count = 0;
  double min_dwell = std::numeric_limits<double>::quiet_NaN();
  double mean_dwell = std::numeric_limits<double>::quiet_NaN();
  double tau_star = std::numeric_limits<double>::quiet_NaN();
  double convergence_time_theta = std::numeric_limits<double>::quiet_NaN();
  double steady_residual_theta = std::numeric_limits<double>::quiet_NaN();
  double steady_residual_gamma = std::numeric_limits<double>::quiet_NaN();
  double lyapunov_margin = std::numeric_limits<double>::quiet_NaN();
  double averaging_sup_dev = std::numeric_limits<double>::quiet_NaN();
  double max_abs_u = 0.0;
  double theta_final = std::numeric_limits<double>::quiet_NaN();
  double gamma_final = std::numeric_limits<double>::quiet_NaN();
};

/// Control refreshes after t0.
inline std::size_t update_count(const EventLog& log) {
  return log.times.empty() ? 0 : log.times.size() - 1;
}

/// Smallest C >= 0 with err_i <= exp(-rate t_i) err_0 + C scale for all samples.
struct EnvelopeFit {
  bool rate_ok = false;
  double c = std::numeric_limits<double>::infinity();
};

/// Minimal C for explicit (t, err) data; err_0 is the first entry.
inline EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& err,
                                double rate, double scale) {
  if (t.size() != err.size()) throw std::invalid_argument("fit_envelope: size mismatch");
  if (!(scale > 0.0)) throw std::invalid_argument("fit_envelope: residual scale must be > 0");
  EnvelopeFit fit{true, 0.0};
  if (t.empty()) return fit;
  const double e0 = err.front();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double excess = err[i] - std::exp(-rate * (t[i] - t.front())) * e0;
    fit.c = std::max(fit.c, excess / scale);
  }
  fit.rate_ok = std::isfinite(fit.c);
  return fit;
}

/// Envelope rate shared by the theta and y bounds: (1 - sigma) a^2 K / 2.
inline double envelope_rate(const SimConfig& cfg) {
  const double a = cfg.dither.amplitude;
  return (1.0 - cfg.trigger.sigma) * a * a * cfg.gains.k / 2.0;
}

inline EnvelopeFit envelope_check_theta(const Trajectory& traj, const MapParams& p,
                                        const SimConfig& cfg) {
  std::vector<double> t;
  std::vector<double> err;
  for (const Sample& s : traj.samples) {
    t.push_back(s.t);
    err.push_back(std::abs(s.theta - p.theta_star));
  }
  const double w = cfg.dither.omega;
  return fit_envelope(t, err, envelope_rate(cfg), cfg.dither.amplitude + 1.0 / w);
}

inline EnvelopeFit envelope_check_y(const Trajectory& traj, const MapParams& p,
                                    const SimConfig& cfg) {
  std::vector<double> t;
  std::vector<double> err;
  for (const Sample& s : traj.samples) {
    t.push_back(s.t);
    err.push_back(std::abs(s.y - p.q_star));
  }
  const double a = cfg.dither.amplitude;
  const double w = cfg.dither.omega;
  return fit_envelope(t, err, envelope_rate(cfg), a * a + 1.0 / (w * w));
}

inline EnvelopeFit envelope_check_gamma(const Trajectory& traj, const MapParams& p,
                                        const SimConfig& cfg) {
  std::vector<double> t;
  std::vector<double> err;
  for (const Sample& s : traj.samples) {
    t.push_back(s.t);
    err.push_back(std::abs(gamma_error(s.gamma, p)));
  }
  return fit_envelope(t, err, cfg.gains.omega_r, 1.0 / cfg.dither.omega);
}

/// Decay rate of V = G^2 between events: (1 - sigma) a^2 K.
inline double lyapunov_rate(const SimConfig& cfg) {
  const double a = cfg.dither.amplitude;
  return (1.0 - cfg.trigger.sigma) * a * a * cfg.gains.k;
}

/// Worst ratio V(t) / (V(t_k) exp(-rate (t - t_k))) over every inter-event
/// segment. Values <= 1 mean the decay inequality holds.
inline double lyapunov_decay_check(const Trajectory& avg, const EventLog& log,
                                   const SimConfig& cfg) {
  const double rate = lyapunov_rate(cfg);
  double margin = 0.0;
  std::size_t k = 0;
  double t_k = std::numeric_limits<double>::quiet_NaN();
  double v_k = 0.0;
  for (const Sample& s : avg.samples) {
    while (k < log.times.size() && log.times[k] <= s.t) {
      ++k;
      t_k = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isnan(t_k)) {
      // First sample at or after the latest event opens the segment.
      t_k = s.t;
      v_k = s.g_hat * s.g_hat;
      continue;
    }
    if (v_k == 0.0) continue;
    const double bound = v_k * std::exp(-rate * (s.t - t_k));
    margin = std::max(margin, s.g_hat * s.g_hat / bound);
  }
  return margin;
}

/// sup over [t0, t1] of |theta_tilde_full| - |theta_tilde_avg|, clipped at 0.
/// The averaged run is resampled at the full run's sample times.
inline double averaging_deviation(const Trajectory& full, const Trajectory& avg, double t0,
                                  double t1, double theta_star) {
  if (full.samples.empty() || avg.samples.empty() || !(t1 > t0)) {
    throw std::invalid_argument("averaging_deviation: empty trajectory or window");
  }
  const double lo = std::max({t0, full.samples.front().t, avg.samples.front().t});
  const double hi = std::min({t1, full.samples.back().t, avg.samples.back().t});
  if (!(hi > lo)) throw std::invalid_argument("averaging_deviation: windows do not overlap");

  double dev = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < full.samples.size(); ++i) {
    const double t = full.samples[i].t;
    if (t < lo || t > hi) continue;
    while (j + 1 < avg.samples.size() && avg.samples[j + 1].t < t) ++j;
    double avg_tilde = avg.theta_tilde(j, theta_star);
    if (j + 1 < avg.samples.size()) {
      const double ta = avg.samples[j].t;
      const double tb = avg.samples[j + 1].t;
      if (tb > ta && t >= ta) {
        const double w = std::min(1.0, (t - ta) / (tb - ta));
        avg_tilde += w * (avg.theta_tilde(j + 1, theta_star) - avg_tilde);
      }
    }
    dev = std::max(dev, std::abs(full.theta_tilde(i, theta_star)) - std::abs(avg_tilde));
  }
  return dev;
}

struct DwellStats {
  bool defined = false;  ///< false when there is no interval to measure
  double min = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  bool violates_bound = false;  ///< min < tau*; a warning only
};

inline DwellStats dwell_stats(const EventLog& log, double tau_star) {
  const std::vector<double> iv = log.intervals();
  DwellStats st;
  if (iv.empty()) return st;
  st.defined = true;
  st.min = *std::min_element(iv.begin(), iv.end());
  double sum = 0.0;
  for (double v : iv) sum += v;
  st.mean = sum / static_cast<double>(iv.size());
  st.violates_bound = st.min < tau_star;
  return st;
}

/// First time after which |theta - theta*| <= band holds for every later sample.
inline std::optional<double> convergence_time(const Trajectory& traj, double theta_star,
                                              double band) {
  std::optional<double> entry;
  for (const Sample& s : traj.samples) {
    if (std::abs(s.theta - theta_star) > band) {
      entry.reset();
    } else if (!entry) {
      entry = s.t;
    }
  }
  return entry;
}

/// phi = sqrt(p/q)|e|/|G| just before each trigger crossing; forced samples skipped.
inline std::vector<double> phi_before_events(const EventLog& log, const TriggerConfig& trig) {
  std::vector<double> out;
  for (const TriggerSnapshot& s : log.before) {
    if (!s.forced) out.push_back(phi_ratio(trig.sigma, trig.beta, s.g_hat, s.e));
  }
  return out;
}

inline double tau_star_for(const SimConfig& cfg) {
  return min_dwell_time(cfg.dither.amplitude, cfg.gains.k, cfg.map.h_star, cfg.trigger.sigma,
                        cfg.trigger.beta, 0.0);
}

/// Metrics of one run. Lyapunov margin and averaging deviation need a second
/// run and are filled by the caller.
inline Metrics compute_metrics(const SimConfig& cfg, const RunResult& run) {
  Metrics m;
  const auto& samples = run.trajectory.samples;
  m.update_count = update_count(run.events);
  const DwellStats dw = dwell_stats(run.events, 0.0);
  m.min_dwell = dw.min;
  m.mean_dwell = dw.mean;
  m.tau_star = tau_star_for(cfg);
  if (auto tc = convergence_time(run.trajectory, cfg.map.theta_star,
                                 3.0 * cfg.dither.amplitude)) {
    m.convergence_time_theta = *tc;
  }
  if (!samples.empty()) {
    const double t_tail = 0.8 * samples.back().t;
    double rt = 0.0;
    double rg = 0.0;
    for (const Sample& s : samples) {
      m.max_abs_u = std::max(m.max_abs_u, std::abs(s.u));
      if (s.t < t_tail) continue;
      rt = std::max(rt, std::abs(s.theta - cfg.map.theta_star));
      rg = std::max(rg, std::abs(gamma_error(s.gamma, cfg.map)));
    }
    m.steady_residual_theta = rt;
    m.steady_residual_gamma = rg;
    m.theta_final = samples.back().theta;
    m.gamma_final = samples.back().gamma;
  }
  return m;
}

}  // namespace etes

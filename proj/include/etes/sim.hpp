#pragma once

// Closed-loop simulation of event-triggered extremum seeking.
//
// Two loops share one fixed-step event-driven engine:
//   * the full loop: map, dither, demodulation, Riccati filter and the
//     zero-order hold, integrated in original time;
//   * the averaged loop: the period-averaged dynamics of (G, theta_tilde,
//     Gamma) with its own trigger, also in original time so both runs share
//     a time axis.
//
// The engine advances on a fixed grid t_n = n dt. After each step it checks
// the trigger; on a sign change it bisects inside the step, moves the state
// to the refined instant, refreshes the hold and continues to the same grid
// point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "etes/demodulation.hpp"
#include "etes/estimators.hpp"
#include "etes/plant.hpp"
#include "etes/rk4.hpp"
#include "etes/trigger.hpp"

namespace etes {

enum class Scheme { newton, gradient };
enum class AverageVariant { nonlinear, linearized };

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class ZenoError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

struct SimConfig {
  MapParams map;
  Dither dither;
  Gains gains;
  TriggerConfig trigger;
  DemodConfig demod;
  Scheme scheme = Scheme::newton;
  /// Declared extremum type. Sets the gradient-law direction and the
  /// expected sign of Gamma(0).
  bool maximize = true;
  double theta_hat0 = 0.0;
  double gamma0 = -0.1;
  double dt = 0.0;  ///< <= 0 selects T/200
  double t_end = 0.0;
  int record_stride = 1;
  double max_events_per_period = 0.0;  ///< <= 0 selects 100 T/dt
  double divergence_limit = 1e8;

  double period() const { return dither.period(); }
  double step() const { return dt > 0.0 ? dt : period() / 200.0; }
  double event_cap() const {
    return max_events_per_period > 0.0 ? max_events_per_period : 100.0 * period() / step();
  }
  /// Gamma stand-in for the gradient law: u = -K s G.
  double direction() const { return maximize ? -1.0 : 1.0; }

  void validate() const {
    map.validate();
    dither.validate();
    gains.validate();
    trigger.validate();
    demod.validate();
    if (!std::isfinite(theta_hat0)) throw std::invalid_argument("init.theta_hat0 must be finite");
    if (scheme == Scheme::newton && (gamma0 == 0.0 || !std::isfinite(gamma0))) {
      throw std::invalid_argument("init.gamma0 must be finite and nonzero");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
      throw std::invalid_argument("sim.t_end must be > 0 and finite");
    }
    if (!(step() > 0.0) || step() > period() / 50.0 * (1.0 + 1e-12)) {
      throw std::invalid_argument("sim.dt must satisfy 0 < dt <= T/50");
    }
    if (record_stride < 1) throw std::invalid_argument("sim.record_stride must be >= 1");
    if (!(divergence_limit > 0.0)) throw std::invalid_argument("sim.divergence_limit must be > 0");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (scheme == Scheme::newton && (gamma0 < 0.0) != maximize) {
      out.push_back(fmt::format(
          "init.gamma0 = {} has the wrong sign for a {}; the Riccati filter will not reach 1/H*",
          gamma0, maximize ? "maximum" : "minimum"));
    }
    if (map.is_maximum() != maximize) {
      out.push_back("controller.extremum does not match the sign of map.h_star");
    }
    if (trigger.beta <= std::abs(map.h_star)) {
      out.push_back(fmt::format("trigger.beta = {} <= |h_star|; the decay guarantee needs beta > |H*|",
                                trigger.beta));
    }
    return out;
  }
};

/// Continuous controller state together with the hold.
struct FullState {
  double t = 0.0;
  double theta_hat = 0.0;
  double gamma = 0.0;
  HoldState hold;
};

/// One recorded instant. For averaged runs theta is theta* + theta_tilde_av.
struct Sample {
  double t = 0.0;
  double theta = 0.0;
  double y = 0.0;
  double g_hat = 0.0;
  double h_hat = 0.0;
  double gamma = 0.0;
  double u = 0.0;
  double e = 0.0;
  double xi = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  /// Dither added to theta_hat; empty for averaged runs.
  std::optional<Dither> probe;

  /// Estimate error theta_hat - theta* at sample i.
  double theta_tilde(std::size_t i, double theta_star) const {
    const Sample& s = samples.at(i);
    const double dither = probe ? dither_signal(*probe, s.t) : 0.0;
    return s.theta - dither - theta_star;
  }
};

/// Trigger state just before an event fired.
struct TriggerSnapshot {
  double g_hat = 0.0;
  double e = 0.0;
  bool forced = false;  ///< first sample after warm-up, not a trigger crossing
};

struct EventLog {
  std::vector<double> times{0.0};
  std::vector<TriggerSnapshot> before;  ///< one per event after t0

  std::vector<double> intervals() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < times.size(); ++i) out.push_back(times[i] - times[i - 1]);
    return out;
  }
};

struct RunResult {
  Trajectory trajectory;
  EventLog events;
};

/// (dtheta_hat/dt, dGamma/dt) with the Riccati filter fed by `h_feed`.
struct ClosedLoopRate {
  double theta_hat = 0.0;
  double gamma = 0.0;
};

inline ClosedLoopRate closed_loop_rhs(const FullState& s, const SimConfig& cfg, double h_feed) {
  if (!std::isfinite(s.theta_hat) || !std::isfinite(s.gamma)) {
    throw DivergenceError(fmt::format("non-finite state at t = {}", s.t));
  }
  ClosedLoopRate r;
  r.theta_hat = s.hold.u_k;
  r.gamma = cfg.scheme == Scheme::newton ? riccati_rhs(cfg.gains, h_feed, s.gamma) : 0.0;
  return r;
}

/// Rates with the instantaneous Hessian estimate measured at the dithered input.
inline ClosedLoopRate closed_loop_rhs(const FullState& s, const SimConfig& cfg) {
  const double y = eval_map(cfg.map, plant_input(s.theta_hat, cfg.dither, s.t));
  return closed_loop_rhs(s, cfg, hessian_estimate(cfg.dither, s.t, y));
}

/// One RK4 step of (theta_hat, Gamma) over [t, t+dt] with the control frozen
/// at u_k and the instantaneous Hessian estimate evaluated at stage times.
inline FullState integrate_step(const FullState& s, const SimConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be > 0");
  using State = std::array<double, 2>;
  auto f = [&](double t, const State& x) {
    FullState tmp = s;
    tmp.t = t;
    tmp.theta_hat = x[0];
    tmp.gamma = x[1];
    const ClosedLoopRate r = closed_loop_rhs(tmp, cfg);
    return State{r.theta_hat, r.gamma};
  };
  const State next = rk4_step(State{s.theta_hat, s.gamma}, s.t, dt, f);
  if (!std::isfinite(next[0]) || !std::isfinite(next[1])) {
    throw DivergenceError(fmt::format("non-finite state after step at t = {}", s.t + dt));
  }
  FullState out = s;
  out.t = s.t + dt;
  out.theta_hat = next[0];
  out.gamma = next[1];
  return out;
}

namespace detail {

using StateVec = std::vector<double>;

/// Quantities the trigger and the recorder need at one instant.
struct Signals {
  double g_hat = 0.0;
  double gamma = 0.0;   ///< Gamma multiplying G in the control law
  double h_feed = 0.0;  ///< Hessian value driving the Riccati filter
  double h_est = 0.0;   ///< demodulated Hessian before the low-pass stages
  double theta = 0.0;
  double y = 0.0;
};

// Full loop. State layout: [theta_hat, Gamma, lpf_1 .. lpf_n].
class FullLoopModel {
 public:
  explicit FullLoopModel(const SimConfig& cfg)
      : cfg_(cfg),
        prior_(cfg.scheme == Scheme::newton ? 1.0 / cfg.gamma0 : 0.0),
        averager_(cfg.map, cfg.dither, prior_, cfg.demod.window_passes),
        lpf_omega_(cfg.demod.hessian_lpf_ratio * cfg.dither.omega) {}

  StateVec initial() const {
    StateVec x(2 + static_cast<std::size_t>(cfg_.demod.hessian_lpf_order), prior_);
    x[0] = cfg_.theta_hat0;
    x[1] = cfg_.scheme == Scheme::newton ? cfg_.gamma0 : cfg_.direction();
    return x;
  }

  double theta_hat(const StateVec& x) const { return x[0]; }

  /// Trigger resolution set by roundoff in the demodulated estimates.
  double xi_floor() const { return cfg_.trigger.xi_floor; }

  /// First instant with a complete demodulation window.
  double warmup() const {
    return cfg_.demod.mode == DemodMode::raw ? 0.0 : averager_.warmup();
  }

  Signals signals(double t, const StateVec& x, const AffineSegment& live) const {
    Signals s;
    s.theta = plant_input(x[0], cfg_.dither, t);
    s.y = eval_map(cfg_.map, s.theta);
    double h_est = 0.0;
    if (cfg_.demod.mode == DemodMode::raw) {
      s.g_hat = gradient_estimate(cfg_.dither, t, s.y);
      h_est = hessian_estimate(cfg_.dither, t, s.y);
    } else {
      const DemodEstimates est = averager_.at(t, live);
      s.g_hat = est.g_hat;
      h_est = est.h_hat;
    }
    s.h_est = h_est;
    s.h_feed = cfg_.demod.hessian_lpf_order > 0 ? x.back() : h_est;
    s.gamma = x[1];
    return s;
  }

  StateVec rhs(double t, const StateVec& x, const AffineSegment& live, double u) const {
    StateVec d(x.size(), 0.0);
    d[0] = u;
    if (cfg_.scheme == Scheme::newton) {
      const Signals s = signals(t, x, live);
      const std::size_t n = x.size() - 2;
      if (n > 0) {
        double input = s.h_est;
        for (std::size_t i = 0; i < n; ++i) {
          d[2 + i] = lpf_omega_ * (input - x[2 + i]);
          input = x[2 + i];
        }
      }
      d[1] = riccati_rhs(cfg_.gains, s.h_feed, x[1]);
    }
    return d;
  }

  void commit(const AffineSegment& seg) {
    if (cfg_.demod.mode == DemodMode::period_average) averager_.commit(seg);
  }

  std::optional<Dither> probe() const { return cfg_.dither; }

 private:
  const SimConfig& cfg_;
  double prior_;
  PeriodAverager averager_;
  double lpf_omega_;
};

// Averaged loop. State layout: [G_av, theta_tilde_av, Gamma_av] (nonlinear)
// or [G_av, theta_tilde_av, Gamma_tilde_av] (linearized).
class AverageLoopModel {
 public:
  AverageLoopModel(const SimConfig& cfg, AverageVariant variant) : cfg_(cfg), variant_(variant) {
    if (variant == AverageVariant::linearized && cfg.scheme != Scheme::newton) {
      throw std::invalid_argument("the linearized average loop exists only for the Newton scheme");
    }
  }

  StateVec initial() const {
    const double a = cfg_.dither.amplitude;
    const double tt = cfg_.theta_hat0 - cfg_.map.theta_star;
    const double g = 0.5 * a * a * cfg_.map.h_star * tt;
    double third = 0.0;
    if (cfg_.scheme == Scheme::gradient) {
      third = cfg_.direction();
    } else if (variant_ == AverageVariant::nonlinear) {
      third = cfg_.gamma0;
    } else {
      third = cfg_.gamma0 - 1.0 / cfg_.map.h_star;
    }
    return {g, tt, third};
  }

  double theta_hat(const StateVec& x) const { return cfg_.map.theta_star + x[1]; }

  double warmup() const { return 0.0; }

  /// The averaged estimates carry no demodulation roundoff.
  double xi_floor() const { return 0.0; }

  Signals signals(double, const StateVec& x, const AffineSegment&) const {
    Signals s;
    s.g_hat = x[0];
    s.gamma = gamma_used(x);
    s.h_feed = cfg_.map.h_star;
    s.theta = cfg_.map.theta_star + x[1];
    s.y = eval_map(cfg_.map, s.theta);
    return s;
  }

  StateVec rhs(double, const StateVec& x, const AffineSegment&, double u) const {
    const double a2 = cfg_.dither.amplitude * cfg_.dither.amplitude;
    const double k = cfg_.gains.k;
    const double wr = cfg_.gains.omega_r;
    const double h = cfg_.map.h_star;
    // u = -K held, so the actuation error is held - Gamma G = -u/K - Gamma G.
    const double gamma = gamma_used(x);
    const double e = -u / k - gamma * x[0];
    StateVec d(3, 0.0);
    if (variant_ == AverageVariant::nonlinear) {
      d[0] = -0.5 * a2 * h * k * gamma * x[0] - 0.5 * a2 * h * k * e;
      d[1] = -0.5 * a2 * k * gamma * h * x[1] - k * e;
      d[2] = cfg_.scheme == Scheme::newton ? wr * x[2] - wr * h * x[2] * x[2] : 0.0;
    } else {
      d[0] = -0.5 * a2 * k * x[0] - 0.5 * a2 * h * k * e;
      d[1] = -0.5 * a2 * k * x[1] - k * e;
      d[2] = -wr * x[2];
    }
    return d;
  }

  void commit(const AffineSegment&) {}

  std::optional<Dither> probe() const { return std::nullopt; }

 private:
  double gamma_used(const StateVec& x) const {
    if (cfg_.scheme == Scheme::gradient) return cfg_.direction();
    return variant_ == AverageVariant::nonlinear ? x[2] : 1.0 / cfg_.map.h_star + x[2];
  }

  const SimConfig& cfg_;
  AverageVariant variant_;
};

template <class Model>
class EventDrivenRun {
 public:
  EventDrivenRun(const SimConfig& cfg, Model& model) : cfg_(cfg), model_(model) {}

  RunResult run() {
    const double dt = cfg_.step();
    const double t_end = cfg_.t_end;
    const double period = cfg_.period();
    const double cap = cfg_.event_cap();

    RunResult out;
    out.trajectory.probe = model_.probe();

    StateVec x = model_.initial();
    double t = 0.0;
    AffineSegment live = segment_at(t, x);
    {
      const Signals s = model_.signals(t, x, live);
      hold_ = make_hold(cfg_.gains, t, s.gamma, s.g_hat);
    }
    live.slope = hold_.u_k;
    double xi_start = record(out, t, x, live);

    // A horizon shorter than one step yields the initial sample only.
    if (t_end < dt) return out;

    // The hold starts at zero (G(0) = 0). The first update is forced once the
    // demodulation window is full; until then the trigger is not monitored.
    const double t_first = model_.warmup();
    bool sampled = t_first <= 0.0;

    std::int64_t n = 0;  // index of the grid interval holding t
    std::deque<double> recent;
    while (t < t_end) {
      double grid_next = std::min(static_cast<double>(n + 1) * dt, t_end);
      if (!sampled) grid_next = std::min(grid_next, t_first);
      if (!(grid_next > t)) {
        ++n;
        continue;
      }
      const double h = grid_next - t;
      live = segment_at(t, x);
      const StateVec x_next = step(t, x, h, live);
      live.t1 = grid_next;
      const double xi_next = trigger(grid_next, x_next, live);

      if (sampled && xi_next < -model_.xi_floor()) {
        const StateVec x0 = x;
        const double t0 = t;
        const AffineSegment seg0 = live;
        const double floor = model_.xi_floor();
        auto xi_of = [&](double tau) {
          if (tau == 0.0) return xi_start + floor;
          return trigger(t0 + tau, step(t0, x0, tau, seg0), seg0) + floor;
        };
        const double tau = refine_event_time(0.0, h, xi_of, cfg_.trigger.refine_tol);
        x = step(t0, x0, tau, seg0);
        t = t0 + tau;
        AffineSegment done = seg0;
        done.t1 = t;
        model_.commit(done);

        const Signals s = model_.signals(t, x, segment_at(t, x));
        out.events.before.push_back({s.g_hat, actuation_error(hold_, s.gamma, s.g_hat)});
        refresh_hold(hold_, cfg_.gains, t, s.gamma, s.g_hat);
        out.events.times.push_back(t);
        xi_start = record(out, t, x, segment_at(t, x));

        recent.push_back(t);
        while (!recent.empty() && recent.front() < t - period) recent.pop_front();
        if (static_cast<double>(recent.size()) > cap) {
          throw ZenoError(fmt::format(
              "event storm: {} events within one dither period ending at t = {:.9g}",
              recent.size(), t));
        }
      } else {
        x = x_next;
        model_.commit(live);
        t = grid_next;
        const bool on_grid = t >= static_cast<double>(n + 1) * dt;
        if (on_grid) ++n;
        xi_start = xi_next;
        if (!sampled && t >= t_first) {
          sampled = true;
          const Signals s = model_.signals(t, x, segment_at(t, x));
          out.events.before.push_back({s.g_hat, actuation_error(hold_, s.gamma, s.g_hat), true});
          refresh_hold(hold_, cfg_.gains, t, s.gamma, s.g_hat);
          out.events.times.push_back(t);
          xi_start = record(out, t, x, segment_at(t, x));
        } else if ((on_grid && n % cfg_.record_stride == 0) || t >= t_end) {
          xi_start = record(out, t, x, segment_at(t, x));
        }
      }
    }
    return out;
  }

 private:
  AffineSegment segment_at(double t, const StateVec& x) const {
    return AffineSegment{t, t, model_.theta_hat(x), hold_.u_k};
  }

  StateVec step(double t, const StateVec& x, double h, const AffineSegment& live) const {
    auto f = [&](double s, const StateVec& y) { return model_.rhs(s, y, live, hold_.u_k); };
    StateVec next = rk4_step(x, t, h, f);
    for (double v : next) {
      if (!std::isfinite(v) || std::abs(v) > cfg_.divergence_limit) {
        throw DivergenceError(fmt::format("state diverged near t = {:.9g}", t + h));
      }
    }
    return next;
  }

  double trigger(double t, const StateVec& x, const AffineSegment& live) const {
    const Signals s = model_.signals(t, x, live);
    return trigger_value(cfg_.trigger, s.g_hat, actuation_error(hold_, s.gamma, s.g_hat));
  }

  double record(RunResult& out, double t, const StateVec& x, const AffineSegment& live) const {
    const Signals s = model_.signals(t, x, live);
    Sample smp;
    smp.t = t;
    smp.theta = s.theta;
    smp.y = s.y;
    smp.g_hat = s.g_hat;
    smp.h_hat = s.h_feed;
    smp.gamma = s.gamma;
    smp.u = hold_.u_k;
    smp.e = actuation_error(hold_, s.gamma, s.g_hat);
    smp.xi = trigger_value(cfg_.trigger, s.g_hat, smp.e);
    out.trajectory.samples.push_back(smp);
    return smp.xi;
  }

  const SimConfig& cfg_;
  Model& model_;
  HoldState hold_;
};

}  // namespace detail

/// Full closed loop from t = 0 to t_end.
inline RunResult run_full(const SimConfig& cfg) {
  cfg.validate();
  detail::FullLoopModel model(cfg);
  detail::EventDrivenRun<detail::FullLoopModel> engine(cfg, model);
  return engine.run();
}

/// Averaged closed loop with the averaged trigger, in original time.
inline RunResult run_average(const SimConfig& cfg, AverageVariant variant) {
  cfg.validate();
  detail::AverageLoopModel model(cfg, variant);
  detail::EventDrivenRun<detail::AverageLoopModel> engine(cfg, model);
  return engine.run();
}

}  // namespace etes

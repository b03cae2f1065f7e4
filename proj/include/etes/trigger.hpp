#pragma once

// Static event trigger with zero-order hold.
//
// The held control is u_k = -K Gamma(t_k) G(t_k). Between events the
// actuation error e = Gamma(t_k) G(t_k) - Gamma(t) G(t) grows, and the next
// event fires at the first instant where sigma|G| - beta|e| < 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>

#include "etes/estimators.hpp"

namespace etes {

struct TriggerConfig {
  double sigma = 0.9;
  double beta = 1.0;
  double refine_tol = 1e-9;  ///< event-time bisection tolerance [s]
  /// Resolution of the trigger value: an event fires once xi < -xi_floor.
  /// Keeps roundoff in G near the optimum from driving the hold.
  double xi_floor = 1e-14;

  static TriggerConfig make(double sigma, double beta, double refine_tol = 1e-9,
                            double xi_floor = 1e-14) {
    TriggerConfig c{sigma, beta, refine_tol, xi_floor};
    c.validate();
    return c;
  }

  void validate() const {
    if (!(sigma > 0.0 && sigma < 1.0)) {
      throw std::invalid_argument("trigger.sigma must lie in (0,1)");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("trigger.beta must be > 0");
    }
    if (!(refine_tol > 0.0) || !std::isfinite(refine_tol)) {
      throw std::invalid_argument("trigger.refine_tol must be > 0");
    }
    if (!(xi_floor >= 0.0) || !std::isfinite(xi_floor)) {
      throw std::invalid_argument("trigger.xi_floor must be >= 0");
    }
  }

};

/// Zero-order-hold memory refreshed at every event.
struct HoldState {
  double t_k = 0.0;
  double held_product = 0.0;  ///< Gamma(t_k) G(t_k)
  double u_k = 0.0;
  std::int64_t k = 0;
};

inline double held_control(const Gains& g, double gamma_k, double g_hat_k) {
  return -g.k * gamma_k * g_hat_k;
}

inline HoldState make_hold(const Gains& g, double t, double gamma, double g_hat) {
  return HoldState{t, gamma * g_hat, held_control(g, gamma, g_hat), 0};
}

/// Refresh at an event: e drops to zero and the index advances.
inline void refresh_hold(HoldState& h, const Gains& g, double t, double gamma, double g_hat) {
  if (t < h.t_k) {
    throw std::logic_error("refresh_hold: event time moved backwards");
  }
  h.t_k = t;
  h.held_product = gamma * g_hat;
  h.u_k = held_control(g, gamma, g_hat);
  ++h.k;
}

inline double actuation_error(const HoldState& h, double gamma, double g_hat) {
  return h.held_product - gamma * g_hat;
}

inline double trigger_value(const TriggerConfig& cfg, double g_hat, double e) {
  return cfg.sigma * std::abs(g_hat) - cfg.beta * std::abs(e);
}

/// Bisection for the first instant where xi turns negative.
///
/// Requires xi(lo) >= 0 and xi(hi) < 0. Returns a time where xi < 0 that is
/// within `tol` of the last time observed with xi >= 0.
inline double refine_event_time(double lo, double hi, const std::function<double(double)>& xi,
                                double tol) {
  if (!(lo < hi)) {
    throw std::invalid_argument("refine_event_time: empty bracket");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("refine_event_time: tolerance must be positive");
  }
  if (!(xi(lo) >= 0.0) || !(xi(hi) < 0.0)) {
    throw std::logic_error("refine_event_time: trigger does not change sign on the bracket");
  }
  while (hi - lo > tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (xi(mid) < 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

/// Peter-Paul split of the trigger: sigma|G|^2 - beta|e||G| >= q|G|^2 - p|e|^2.
struct PeterPaul {
  double q;
  double p;
};

inline PeterPaul peter_paul(double sigma, double beta) {
  return {0.5 * sigma, beta * beta / (2.0 * sigma)};
}

/// Ratio sqrt(p/q)|e|/|G|; it climbs from 0 after an event to 1 at the next.
inline double phi_ratio(double sigma, double beta, double g_hat, double e) {
  const auto [q, p] = peter_paul(sigma, beta);
  if (g_hat == 0.0) {
    return e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(p / q) * std::abs(e) / std::abs(g_hat);
}

/// Lower bound on the inter-event time of the averaged loop:
///
///   tau* = 2 / (a^2 K max{1/|H*|, 1, |H*|}) * (beta/sigma)^2 * (1-c)/(1+beta/sigma-c)
///
/// `omega_correction` is the unspecified O(1/omega) constant c, 0 <= c < 1.
inline double min_dwell_time(double a, double k, double h_star, double sigma, double beta,
                             double omega_correction = 0.0) {
  if (!(a > 0.0) || !(k > 0.0) || !(sigma > 0.0) || !(beta > 0.0) || h_star == 0.0) {
    throw std::invalid_argument("min_dwell_time: arguments must be positive and h_star nonzero");
  }
  if (!(omega_correction >= 0.0 && omega_correction < 1.0)) {
    throw std::invalid_argument("min_dwell_time: correction must lie in [0,1)");
  }
  const double hs = std::abs(h_star);
  const double curvature = std::max({1.0 / hs, 1.0, hs});
  const double ratio = beta / sigma;
  const double c = omega_correction;
  return 2.0 / (a * a * k * curvature) * ratio * ratio * (1.0 - c) / (1.0 + ratio - c);
}

}  // namespace etes

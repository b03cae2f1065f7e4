#pragma once

// Static quadratic map and the sinusoidal probing signal.

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace etes {

/// Parameters of the unknown map y = Q* + (H*/2)(theta - theta*)^2.
///
/// Only the simulator and the analysis code read these; the controller path
/// sees nothing but the measured output y.
struct MapParams {
  double q_star = 0.0;
  double h_star = 0.0;
  double theta_star = 0.0;

  static MapParams make(double q_star, double h_star, double theta_star) {
    MapParams p{q_star, h_star, theta_star};
    p.validate();
    return p;
  }

  void validate() const {
    if (!std::isfinite(q_star) || !std::isfinite(h_star) || !std::isfinite(theta_star)) {
      throw std::invalid_argument("map parameters must be finite");
    }
    if (h_star == 0.0) {
      throw std::invalid_argument("map.h_star must be nonzero");
    }
  }

  bool is_maximum() const { return h_star < 0.0; }
};

/// Probing signal a*sin(omega*t). The period is derived, never stored.
struct Dither {
  double amplitude = 0.0;
  double omega = 0.0;

  static Dither make(double amplitude, double omega) {
    Dither d{amplitude, omega};
    d.validate();
    return d;
  }

  void validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
      throw std::invalid_argument("dither.a must be > 0");
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) {
      throw std::invalid_argument("dither.omega must be > 0");
    }
  }

  double period() const { return 2.0 * std::numbers::pi / omega; }
};

inline double eval_map(const MapParams& p, double theta) {
  const double d = theta - p.theta_star;
  return p.q_star + 0.5 * p.h_star * d * d;
}

inline double dither_signal(const Dither& d, double t) {
  return d.amplitude * std::sin(d.omega * t);
}

/// Map input: current estimate plus the probing perturbation.
inline double plant_input(double theta_hat, const Dither& d, double t) {
  return theta_hat + dither_signal(d, t);
}

}  // namespace etes

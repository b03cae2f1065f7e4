#pragma once

// Demodulated gradient and Hessian estimates and the Riccati filter whose
// stable equilibrium is the Hessian inverse.

#include <cmath>
#include <stdexcept>

#include "etes/plant.hpp"

namespace etes {

struct Gains {
  double k = 0.0;        ///< control gain K [1/s]
  double omega_r = 0.0;  ///< Riccati filter rate [rad/s]

  static Gains make(double k, double omega_r) {
    Gains g{k, omega_r};
    g.validate();
    return g;
  }

  void validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) {
      throw std::invalid_argument("controller.k must be > 0");
    }
    if (!(omega_r > 0.0) || !std::isfinite(omega_r)) {
      throw std::invalid_argument("controller.omega_r must be > 0");
    }
  }
};

/// G = a sin(wt) y
inline double gradient_estimate(const Dither& d, double t, double y) {
  return d.amplitude * std::sin(d.omega * t) * y;
}

/// H = -(8/a^2) cos(2wt) y
inline double hessian_estimate(const Dither& d, double t, double y) {
  if (!(d.amplitude > 0.0)) {
    throw std::invalid_argument("hessian_estimate: dither amplitude must be > 0");
  }
  return -8.0 / (d.amplitude * d.amplitude) * std::cos(2.0 * d.omega * t) * y;
}

/// dGamma/dt = w_r Gamma - w_r H Gamma^2. Equilibria at 0 and 1/H.
inline double riccati_rhs(const Gains& g, double h_hat, double gamma) {
  return g.omega_r * gamma - g.omega_r * h_hat * gamma * gamma;
}

/// Hessian-inverse estimation error. Analysis side only: uses the true H*.
inline double gamma_error(double gamma, const MapParams& p) {
  p.validate();
  return gamma - 1.0 / p.h_star;
}

}  // namespace etes

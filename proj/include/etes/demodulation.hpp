#pragma once

// Period-averaging demodulator.
//
// The controller measures y(t) continuously. Instead of feeding the raw
// products a sin(wt) y and -(8/a^2) cos(2wt) y to the update law, this
// demodulator reports their running mean over the last dither period:
//
//   G_T(t) = (1/T) int_{t-T}^{t} a sin(ws) y(s) ds
//   H_T(t) = (1/T) int_{t-T}^{t} -(8/a^2) cos(2ws) y(s) ds
//
// For a frozen estimate these are exactly (a^2 H*/2)(theta_hat - theta*) and
// H*; every dither harmonic, including the Q* carrier, integrates to zero.
// With one pass the leftover ripple is proportional to (theta_hat - theta*)
// times the slope of theta_hat. Two passes (a triangular window over 2T)
// have double zeros at every harmonic, so a carrier modulated by a ramp also
// averages out and only curvature of theta_hat leaks through.
//
// Between two integrator steps theta_hat is affine in time (the control is
// held), so each committed step is stored as an affine segment and the
// window integral is evaluated by Gauss-Legendre quadrature of the measured
// signal. Until the window is filled the demodulator reports the warm-up values (G = 0, H = prior).

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "etes/estimators.hpp"
#include "etes/plant.hpp"

namespace etes {

/// How the controller turns the measured output into G and H.
enum class DemodMode {
  raw,             ///< instantaneous demodulated products
  period_average,  ///< moving average over one dither period
};

struct DemodConfig {
  DemodMode mode = DemodMode::period_average;
  /// Boxcar passes of the averaging window: 1 is a one-period moving
  /// average, 2 a triangular window over two periods.
  int window_passes = 2;
  /// Cascaded first-order low-pass stages between the Hessian estimate and
  /// the Riccati filter. Zero feeds the estimate straight in.
  int hessian_lpf_order = 2;
  /// Cutoff of each stage as a fraction of the dither frequency.
  double hessian_lpf_ratio = 0.1;

  void validate() const {
    if (window_passes != 1 && window_passes != 2) {
      throw std::invalid_argument("demod.window_passes must be 1 or 2");
    }
    if (hessian_lpf_order < 0 || hessian_lpf_order > 8) {
      throw std::invalid_argument("demod.hessian_lpf_order must be in [0, 8]");
    }
    if (hessian_lpf_order > 0 && !(hessian_lpf_ratio > 0.0)) {
      throw std::invalid_argument("demod.hessian_lpf_ratio must be > 0");
    }
  }
};

/// theta_hat(s) = theta_hat0 + slope (s - t0) on [t0, t1].
struct AffineSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  double theta_hat0 = 0.0;
  double slope = 0.0;

  double theta_hat(double s) const { return theta_hat0 + slope * (s - t0); }
};

struct DemodEstimates {
  double g_hat = 0.0;
  double h_hat = 0.0;
};

namespace detail {

// 5-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 5> kGaussNodes = {
    -0.9061798459386639927976269, -0.5384693101056830910363144, 0.0,
    0.5384693101056830910363144, 0.9061798459386639927976269};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.2369268850561890875142640, 0.4786286704993664680412915, 0.5688888888888888888888889,
    0.4786286704993664680412915, 0.2369268850561890875142640};

}  // namespace detail

class PeriodAverager {
 public:
  PeriodAverager(const MapParams& map, const Dither& dither, double h_prior, int passes = 2)
      : map_(map), dither_(dither), period_(dither.period()), h_prior_(h_prior), passes_(passes) {
    if (passes != 1 && passes != 2) {
      throw std::invalid_argument("PeriodAverager: passes must be 1 or 2");
    }
  }

  double period() const { return period_; }
  double h_prior() const { return h_prior_; }
  int passes() const { return passes_; }
  /// Length of history needed before the estimates leave warm-up.
  double warmup() const { return passes_ * period_; }
  std::size_t segment_count() const { return segments_.size(); }

  /// Appends a finished step. Segments must be contiguous and ordered.
  void commit(const AffineSegment& seg) {
    if (!(seg.t1 >= seg.t0)) {
      throw std::invalid_argument("PeriodAverager::commit: segment end before start");
    }
    Stored s{seg, {}, {}};
    if (!segments_.empty()) s.start = segments_.back().end();
    s.local = partial(seg, seg.t1);
    segments_.push_back(s);
  }

  /// Estimates at time t, where `live` is the uncommitted segment holding t.
  DemodEstimates at(double t, const AffineSegment& live) const {
    if (t - warmup() < -1e-12 * period_) {
      return {0.0, h_prior_};
    }
    const long double T = period_;
    const Integrals now = cumulative(t, &live);
    const Integrals one = cumulative(std::max(t - period_, 0.0), nullptr);
    if (passes_ == 1) {
      return {static_cast<double>((now.g1 - one.g1) / T), static_cast<double>((now.h1 - one.h1) / T)};
    }
    const Integrals two = cumulative(std::max(t - 2.0 * period_, 0.0), nullptr);
    const long double T2 = T * T;
    return {static_cast<double>((now.g2 - 2.0L * one.g2 + two.g2) / T2),
            static_cast<double>((now.h2 - 2.0L * one.h2 + two.h2) / T2)};
  }

 private:
  // Running integrals from the origin: g1 = int f, g2 = int int f.
  struct Integrals {
    long double g1 = 0.0L;
    long double g2 = 0.0L;
    long double h1 = 0.0L;
    long double h2 = 0.0L;
  };

  struct Stored {
    AffineSegment seg;
    Integrals start;  // at seg.t0
    Integrals local;  // over [t0, t1], second integrals relative to t0

    Integrals end() const { return advance(start, local, seg.t1 - seg.t0); }
  };

  // Composes integrals at t0 with segment-local ones after elapsed time w.
  static Integrals advance(const Integrals& base, const Integrals& loc, double w) {
    return {base.g1 + loc.g1, base.g2 + base.g1 * w + loc.g2, base.h1 + loc.h1,
            base.h2 + base.h1 * w + loc.h2};
  }

  // Local integrals over [t0, upto]: int f ds and int (upto - s) f ds.
  Integrals partial(const AffineSegment& seg, double upto) const {
    const double h = upto - seg.t0;
    if (h <= 0.0) return {};
    const double mid = seg.t0 + 0.5 * h;
    const double a = dither_.amplitude;
    Integrals out;
    for (std::size_t i = 0; i < detail::kGaussNodes.size(); ++i) {
      const double s = mid + 0.5 * h * detail::kGaussNodes[i];
      const double y = eval_map(map_, plant_input(seg.theta_hat(s), dither_, s));
      const long double w = 0.5L * h * detail::kGaussWeights[i];
      const long double fg = gradient_estimate(dither_, s, y);
      const long double fh = (-8.0 / (a * a)) * std::cos(2.0 * dither_.omega * s) * y;
      const long double lever = upto - s;
      out.g1 += w * fg;
      out.g2 += w * lever * fg;
      out.h1 += w * fh;
      out.h2 += w * lever * fh;
    }
    return out;
  }

  Integrals cumulative(double t, const AffineSegment* live) const {
    if (live != nullptr && t >= live->t0) {
      const Integrals base = segments_.empty() ? Integrals{} : segments_.back().end();
      return advance(base, partial(*live, t), t - live->t0);
    }
    if (segments_.empty() || t <= segments_.front().seg.t0) return {};
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Stored& s) { return v < s.seg.t0; });
    const Stored& s = *std::prev(it);
    if (t >= s.seg.t1) return s.end();
    return advance(s.start, partial(s.seg, t), t - s.seg.t0);
  }

  MapParams map_;
  Dither dither_;
  double period_;
  double h_prior_;
  int passes_;
  std::vector<Stored> segments_;
};

}  // namespace etes

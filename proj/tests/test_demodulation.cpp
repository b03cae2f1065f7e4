#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "etes/demodulation.hpp"

using namespace etes;

namespace {

const MapParams kMap{7.0, -0.15, 5.0};
const Dither kDither{0.1, 3.0};

// Commits steps of length dt from 0 to t_end along theta_hat(t) = th0 + slope t.
void fill(PeriodAverager& avg, double th0, double slope, double dt, int steps) {
  for (int i = 0; i < steps; ++i) {
    const double t0 = i * dt;
    avg.commit(AffineSegment{t0, t0 + dt, th0 + slope * t0, slope});
  }
}

}  // namespace

TEST(Demodulation, WarmupReportsPrior) {
  PeriodAverager avg(kMap, kDither, -10.0, 2);
  const double dt = kDither.period() / 200.0;
  fill(avg, 2.0, 0.0, dt, 300);
  const AffineSegment live{300 * dt, 300 * dt, 2.0, 0.0};
  const DemodEstimates est = avg.at(300 * dt, live);
  EXPECT_EQ(est.g_hat, 0.0);
  EXPECT_EQ(est.h_hat, -10.0);
}

class FrozenEstimate : public ::testing::TestWithParam<int> {};

TEST_P(FrozenEstimate, WindowMeansAreExact) {
  const int passes = GetParam();
  const double a = kDither.amplitude;
  const double dt = kDither.period() / 200.0;
  for (double tilde : {-3.0, -1.0, -0.25, 0.0, 0.5, 1.0}) {
    PeriodAverager avg(kMap, kDither, 0.0, passes);
    const double th = kMap.theta_star + tilde;
    fill(avg, th, 0.0, dt, 1000);
    for (double frac : {0.0, 0.37, 0.99}) {
      const double t = (1000 + frac) * dt;
      const AffineSegment live{1000 * dt, t, th, 0.0};
      const DemodEstimates est = avg.at(t, live);
      EXPECT_NEAR(est.g_hat, 0.5 * a * a * kMap.h_star * tilde, 1e-11);
      EXPECT_NEAR(est.h_hat, kMap.h_star, 1e-9);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Passes, FrozenEstimate, ::testing::Values(1, 2));

namespace {

struct Leak {
  double one = 0.0;
  double two = 0.0;
};

// Worst deviation from the window-mean target along theta_hat = 2 + slope t.
Leak ramp_leak(double slope) {
  const double a = kDither.amplitude;
  const double T = kDither.period();
  const double dt = T / 200.0;
  PeriodAverager one(kMap, kDither, 0.0, 1);
  PeriodAverager two(kMap, kDither, 0.0, 2);
  fill(one, 2.0, slope, dt, 2000);
  fill(two, 2.0, slope, dt, 2000);
  Leak leak;
  for (int k = 0; k < 200; ++k) {
    const double t = (2000 + k) * dt;
    const AffineSegment live{t, t, 2.0 + slope * t, slope};
    // Window means of theta_tilde sit T/2 and T behind t.
    const double c1 = 0.5 * a * a * kMap.h_star * (2.0 + slope * (t - 0.5 * T) - 5.0);
    const double c2 = 0.5 * a * a * kMap.h_star * (2.0 + slope * (t - T) - 5.0);
    leak.one = std::max(leak.one, std::abs(one.at(t, live).g_hat - c1));
    leak.two = std::max(leak.two, std::abs(two.at(t, live).g_hat - c2));
    const AffineSegment step{t, t + dt, 2.0 + slope * t, slope};
    one.commit(step);
    two.commit(step);
  }
  return leak;
}

}  // namespace

// A ramp modulates the dither carrier. One boxcar leaks it at first order in
// the slope; the triangular window leaves only the slope^2 curvature term.
TEST(Demodulation, TriangularWindowRejectsRampLeak) {
  const Leak full = ramp_leak(0.01);
  const Leak half = ramp_leak(0.005);
  EXPECT_NEAR(full.one / half.one, 2.0, 0.1);
  EXPECT_NEAR(full.two / half.two, 4.0, 0.05);
  EXPECT_LT(full.two, 0.01 * full.one);
}

TEST(Demodulation, LiveSegmentAgreesWithCommittedHistory) {
  const double dt = kDither.period() / 200.0;
  PeriodAverager avg(kMap, kDither, 0.0, 2);
  fill(avg, 2.0, 0.02, dt, 999);
  const double t0 = 999 * dt;
  const AffineSegment live{t0, t0 + dt, 2.0 + 0.02 * t0, 0.02};
  const DemodEstimates before = avg.at(t0 + dt, live);
  avg.commit(live);
  const AffineSegment next{t0 + dt, t0 + dt, 2.0 + 0.02 * (t0 + dt), 0.02};
  const DemodEstimates after = avg.at(t0 + dt, next);
  EXPECT_NEAR(before.g_hat, after.g_hat, 1e-15);
  EXPECT_NEAR(before.h_hat, after.h_hat, 1e-12);
}

TEST(Demodulation, RejectsReversedSegmentAndBadPasses) {
  PeriodAverager avg(kMap, kDither, 0.0, 2);
  EXPECT_THROW(avg.commit(AffineSegment{1.0, 0.5, 2.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(PeriodAverager(kMap, kDither, 0.0, 3), std::invalid_argument);
  DemodConfig cfg;
  cfg.window_passes = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.window_passes = 2;
  cfg.hessian_lpf_order = 9;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

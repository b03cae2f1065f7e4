#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "etes/trigger.hpp"

using namespace etes;

TEST(Trigger, HeldControlExamples) {
  const Gains g{18.0, 1.0};
  EXPECT_DOUBLE_EQ(held_control(g, -0.1, 0.0), 0.0);
  EXPECT_NEAR(held_control(g, -0.1, 0.3), 0.54, 1e-15);
  // Gradient law with the stand-in Gamma = 1.
  EXPECT_NEAR(held_control(g, 1.0, 0.3), -5.4, 1e-15);
}

TEST(Trigger, HoldKeepsControlConsistentWithProduct) {
  const Gains g{18.0, 1.0};
  HoldState h = make_hold(g, 0.0, -0.1, 0.0);
  EXPECT_EQ(h.k, 0);
  refresh_hold(h, g, 1.5, -2.0, 0.01);
  EXPECT_EQ(h.k, 1);
  EXPECT_DOUBLE_EQ(h.u_k, -g.k * h.held_product);
  EXPECT_DOUBLE_EQ(actuation_error(h, -2.0, 0.01), 0.0);
  EXPECT_THROW(refresh_hold(h, g, 1.0, -2.0, 0.01), std::logic_error);
}

TEST(Trigger, ActuationErrorExamples) {
  HoldState h;
  h.held_product = -0.03;
  EXPECT_NEAR(actuation_error(h, -0.1, 0.25), -0.005, 1e-15);
  h.held_product = 0.0;
  EXPECT_NEAR(actuation_error(h, 1.0, 0.01), -0.01, 1e-15);
}

TEST(Trigger, TriggerValueExamples) {
  const TriggerConfig c{0.9, 1.0, 1e-9};
  EXPECT_GE(trigger_value(c, 0.37, 0.0), 0.0);
  EXPECT_NEAR(trigger_value(c, 0.1, 0.05), 0.04, 1e-15);
  EXPECT_NEAR(trigger_value(c, 0.1, 0.1), -0.01, 1e-15);
}

TEST(Trigger, SigmaMustLieInOpenUnitInterval) {
  for (double s : {0.0, 1.0, 1.2, -0.1}) {
    try {
      TriggerConfig::make(s, 1.0);
      FAIL() << "sigma = " << s << " accepted";
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find("trigger.sigma"), std::string::npos);
    }
  }
  EXPECT_THROW(TriggerConfig::make(0.9, 0.0), std::invalid_argument);
  EXPECT_THROW(TriggerConfig::make(0.9, 1.0, 0.0), std::invalid_argument);
}

TEST(Trigger, RefineLinearRoot) {
  const double t = refine_event_time(0.9, 1.1, [](double s) { return -(s - 1.0); }, 1e-6);
  EXPECT_NEAR(t, 1.0, 1e-6);
  EXPECT_LT(-(t - 1.0), 0.0);
}

TEST(Trigger, RefineRejectsBadBracket) {
  EXPECT_THROW(refine_event_time(1.1, 1.2, [](double s) { return -(s - 1.0); }, 1e-6),
               std::logic_error);
  EXPECT_THROW(refine_event_time(0.0, 0.5, [](double s) { return -(s - 1.0); }, 1e-6),
               std::logic_error);
}

TEST(Trigger, DwellBoundExamples) {
  EXPECT_NEAR(min_dwell_time(0.1, 18.0, -0.15, 0.9, 0.2), 0.0673, 5e-5);
  EXPECT_NEAR(min_dwell_time(0.1, 18.0, -0.15, 0.9, 0.5), 0.3307, 5e-5);
}

TEST(Trigger, DwellBoundIncreasesWithBeta) {
  double prev = 0.0;
  for (double b = 0.01; b <= 5.0; b += 0.01) {
    const double tau = min_dwell_time(0.1, 18.0, -0.15, 0.9, b);
    EXPECT_GT(tau, prev);
    prev = tau;
  }
}

TEST(Trigger, DwellBoundRejectsDegenerateCorrection) {
  EXPECT_THROW(min_dwell_time(0.1, 18.0, -0.15, 0.9, 0.2, 1.0), std::invalid_argument);
  EXPECT_GT(min_dwell_time(0.1, 18.0, -0.15, 0.9, 0.2, 0.5), 0.0);
}

TEST(Trigger, PeterPaulSplitHoldsOnRandomPairs) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> mag(-10.0, 10.0);
  std::uniform_real_distribution<double> sig(0.01, 0.99);
  std::uniform_real_distribution<double> bet(0.01, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const double s = sig(rng);
    const double b = bet(rng);
    const double g = mag(rng);
    const double e = mag(rng);
    const auto [q, p] = peter_paul(s, b);
    const double lhs = s * g * g - b * std::abs(e) * std::abs(g);
    const double rhs = q * g * g - p * e * e;
    EXPECT_GE(lhs - rhs, -1e-12 * (g * g + e * e));
  }
}

TEST(Trigger, PhiRatioIsOneOnTheTriggerSurface) {
  const double s = 0.9;
  const double b = 0.2;
  EXPECT_DOUBLE_EQ(phi_ratio(s, b, 0.3, 0.0), 0.0);
  EXPECT_NEAR(phi_ratio(s, b, 0.3, s / b * 0.3), 1.0, 1e-14);
}

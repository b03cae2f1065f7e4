#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "etes/estimators.hpp"
#include "etes/rk4.hpp"

using namespace etes;

namespace {

const MapParams kMap{7.0, -0.15, 5.0};
const Dither kDither{0.1, 3.0};

// Composite Simpson over one dither period with the estimate frozen.
template <class F>
double period_mean(F&& f, double period, int panels = 4096) {
  const double h = period / panels;
  double sum = f(0.0) + f(period);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return sum * h / 3.0 / period;
}

}  // namespace

TEST(Estimators, GradientZeroAtStart) {
  for (double y : {-3.0, 0.0, 6.325, 1e6}) EXPECT_DOUBLE_EQ(gradient_estimate(kDither, 0.0, y), 0.0);
}

TEST(Estimators, GradientAtDitherCrest) {
  EXPECT_NEAR(gradient_estimate(kDither, std::numbers::pi / 6.0, 6.325), 0.6325, 1e-14);
}

TEST(Estimators, HessianVanishesWhereCarrierDoes) {
  for (double y : {-1.0, 6.325, 100.0}) {
    EXPECT_NEAR(hessian_estimate(kDither, std::numbers::pi / 12.0, y), 0.0, 1e-11);
  }
}

TEST(Estimators, HessianAtStart) { EXPECT_NEAR(hessian_estimate(kDither, 0.0, 6.325), -5060.0, 1e-9); }

TEST(Estimators, HessianRejectsZeroAmplitude) {
  EXPECT_THROW(hessian_estimate(Dither{0.0, 3.0}, 0.0, 1.0), std::invalid_argument);
}

TEST(Estimators, GradientPeriodMeanMatchesScaledError) {
  const double a = kDither.amplitude;
  for (double tilde = -1.0; tilde <= 1.0 + 1e-12; tilde += 0.125) {
    auto f = [&](double t) {
      const double y = eval_map(kMap, plant_input(kMap.theta_star + tilde, kDither, t));
      return gradient_estimate(kDither, t, y);
    };
    EXPECT_NEAR(period_mean(f, kDither.period()), 0.5 * a * a * kMap.h_star * tilde, 1e-9)
        << "tilde = " << tilde;
  }
}

TEST(Estimators, HessianPeriodMeanMatchesCurvature) {
  for (double tilde = -1.0; tilde <= 1.0 + 1e-12; tilde += 0.125) {
    auto f = [&](double t) {
      const double y = eval_map(kMap, plant_input(kMap.theta_star + tilde, kDither, t));
      return hessian_estimate(kDither, t, y);
    };
    EXPECT_NEAR(period_mean(f, kDither.period()), kMap.h_star, 1e-9) << "tilde = " << tilde;
  }
}

TEST(Estimators, RiccatiEquilibria) {
  const Gains g{18.0, 1.0};
  EXPECT_DOUBLE_EQ(riccati_rhs(g, -0.15, 0.0), 0.0);
  EXPECT_NEAR(riccati_rhs(g, -0.15, 1.0 / -0.15), 0.0, 1e-15);
}

TEST(Estimators, RiccatiValueAtInitialGamma) {
  EXPECT_NEAR(riccati_rhs(Gains{18.0, 1.0}, -0.15, -0.1), -0.0985, 1e-15);
}

TEST(Estimators, GainsValidation) {
  EXPECT_THROW(Gains::make(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(Gains::make(18.0, -1.0), std::invalid_argument);
  EXPECT_NO_THROW(Gains::make(18.0, 1.0));
}

TEST(Estimators, GammaError) {
  EXPECT_DOUBLE_EQ(gamma_error(1.0 / kMap.h_star, kMap), 0.0);
  EXPECT_NEAR(gamma_error(-0.1, kMap), 6.566666666666666, 1e-12);
  EXPECT_NEAR(gamma_error(0.0, kMap), 6.666666666666667, 1e-12);
}

// Driven by the true curvature, the filter moves monotonically to 1/H*.
TEST(Estimators, RiccatiConvergesMonotonicallyWithSignMatchedStart) {
  const Gains g{18.0, 1.0};
  for (double g0 : {-0.1, -3.0, -20.0}) {
    std::array<double, 1> x{g0};
    double prev_err = std::abs(x[0] - 1.0 / kMap.h_star);
    for (int i = 0; i < 3000; ++i) {
      x = rk4_step(x, i * 0.01, 0.01, [&](double, const std::array<double, 1>& s) {
        return std::array<double, 1>{riccati_rhs(g, kMap.h_star, s[0])};
      });
      const double err = std::abs(x[0] - 1.0 / kMap.h_star);
      EXPECT_LE(err, prev_err + 1e-15);
      prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-6);
  }
}

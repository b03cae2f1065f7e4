#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "etes/plant.hpp"

using namespace etes;

namespace {

const MapParams kMap{7.0, -0.15, 5.0};
const Dither kDither{0.1, 3.0};

}  // namespace

TEST(Plant, MapValueAtOptimum) { EXPECT_DOUBLE_EQ(eval_map(kMap, 5.0), 7.0); }

TEST(Plant, MapValueAtInitialEstimate) { EXPECT_NEAR(eval_map(kMap, 2.0), 6.325, 1e-12); }

TEST(Plant, MapValueAtZero) { EXPECT_NEAR(eval_map(kMap, 0.0), 5.125, 1e-12); }

TEST(Plant, NegativeCurvatureIsMaximum) {
  EXPECT_TRUE(kMap.is_maximum());
  for (double d : {1e-3, 0.1, 2.0}) {
    EXPECT_LT(eval_map(kMap, 5.0 + d), 7.0);
    EXPECT_LT(eval_map(kMap, 5.0 - d), 7.0);
  }
  const MapParams bowl{1.0, 2.0, -1.0};
  EXPECT_FALSE(bowl.is_maximum());
  EXPECT_GT(eval_map(bowl, -0.9), 1.0);
}

TEST(Plant, ZeroCurvatureRejected) {
  EXPECT_THROW(MapParams::make(7.0, 0.0, 5.0), std::invalid_argument);
  EXPECT_THROW(MapParams::make(NAN, -1.0, 5.0), std::invalid_argument);
}

TEST(Plant, DitherRejectsNonPositive) {
  EXPECT_THROW(Dither::make(0.0, 3.0), std::invalid_argument);
  EXPECT_THROW(Dither::make(0.1, -3.0), std::invalid_argument);
}

TEST(Plant, DitherZeroAtStartAndAfterOnePeriod) {
  EXPECT_DOUBLE_EQ(dither_signal(kDither, 0.0), 0.0);
  EXPECT_NEAR(dither_signal(kDither, 2.0 * std::numbers::pi / 3.0), 0.0, 1e-15);
}

// 3 * pi/6 = pi/2, so the dither sits at its crest.
TEST(Plant, DitherCrestAtQuarterPeriod) {
  EXPECT_NEAR(dither_signal(kDither, std::numbers::pi / 6.0), 0.1, 1e-15);
  EXPECT_NEAR(plant_input(2.0, kDither, std::numbers::pi / 6.0), 2.1, 1e-15);
}

TEST(Plant, PlantInputWithoutDitherAtStart) { EXPECT_DOUBLE_EQ(plant_input(2.0, kDither, 0.0), 2.0); }

TEST(Plant, PlantInputStaysWithinAmplitudeOfOptimum) {
  for (int i = 0; i < 1000; ++i) {
    const double t = 0.0137 * i;
    EXPECT_LE(std::abs(plant_input(5.0, kDither, t) - 5.0), 0.1 + 1e-15);
  }
}

TEST(Plant, SecondDifferenceEqualsCurvature) {
  for (double h : {1e-2, 0.1, 0.5}) {
    for (double x : {-3.0, 0.0, 2.5, 5.0, 11.0}) {
      const double d2 = eval_map(kMap, x + h) - 2.0 * eval_map(kMap, x) + eval_map(kMap, x - h);
      EXPECT_NEAR(d2, kMap.h_star * h * h, 1e-13);
    }
  }
}

TEST(Plant, SymmetricAboutOptimum) {
  for (double d : {0.0, 0.3, 1.7, 40.0}) {
    EXPECT_DOUBLE_EQ(eval_map(kMap, 5.0 + d), eval_map(kMap, 5.0 - d));
  }
}

TEST(Plant, DitherPeriodic) {
  const double T = kDither.period();
  EXPECT_NEAR(T, 2.0 * std::numbers::pi / 3.0, 1e-15);
  for (double t : {0.0, 0.4, 1.3, 17.9}) {
    EXPECT_NEAR(plant_input(2.0, kDither, t + T) - 2.0, plant_input(2.0, kDither, t) - 2.0, 1e-14);
  }
}

#include "switchid/errors.hpp"
#include "switchid/guard.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace switchid;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

const NoiseSpec kUnit{1.0, 1.0, 1.0};
const std::vector<StateSpace> kHalf = {StateSpace{scalar(0.5), scalar(1), scalar(1)}};

}  // namespace

TEST(Xi, ZeroAtOrigin) { EXPECT_DOUBLE_EQ(xi_threshold(0.0, 0, 0.1, kHalf, kUnit), 0.0); }

TEST(Xi, HandEvaluatedScalar) {
  // tr P = tr B'PB = 4/3, d_x = 1: rate 11/3
  EXPECT_NEAR(stable_energy_rate(kHalf, kUnit), 11.0 / 3.0, 1e-13);
  const double expected = 1000.0 * (11.0 / 3.0) * std::log(10.0);
  EXPECT_NEAR(xi_threshold(0.0, 100, 0.1, kHalf, kUnit), expected, 1e-9);
  EXPECT_NEAR(expected, 8442.8, 0.05);
  EXPECT_NEAR(xi_threshold(2.5, 100, 0.1, kHalf, kUnit), expected + 5.0, 1e-9);
}

TEST(Xi, WorstStableSystemWins) {
  const std::vector<StateSpace> two = {kHalf[0], StateSpace{scalar(0.0), scalar(1), scalar(1)}};
  EXPECT_NEAR(stable_energy_rate(two, kUnit), 11.0 / 3.0, 1e-13);
}

TEST(Xi, Errors) {
  EXPECT_THROW(xi_threshold(0.0, 10, 0.5, kHalf, kUnit), ValidationError);
  EXPECT_THROW(xi_threshold(-1.0, 10, 0.1, kHalf, kUnit), ValidationError);
  EXPECT_THROW(xi_threshold(0.0, 10, 0.1, {}, kUnit), ValidationError);
}

TEST(Monitor, ZeroOutputsStayUnder) {
  EnergyMonitor m(make_guard_threshold(0.0, 0.1, kHalf, kUnit));
  for (int t = 0; t < 1000; ++t) EXPECT_EQ(m.feed(Vector::Zero(1)), GuardVerdict::UnderThreshold);
}

TEST(Monitor, LargeOutputExceedsTwoXi) {
  const GuardThreshold th = make_guard_threshold(0.0, 0.1, kHalf, kUnit);
  EnergyMonitor m(th);
  EXPECT_EQ(m.feed(scalar(std::sqrt(2.0 * th.xi(1)) * 1.01)), GuardVerdict::ExceededTwoXi);
}

TEST(Monitor, BoundaryRules) {
  const GuardThreshold th{0.0, 0.1, 1.0};  // xi(t) = t
  EnergyMonitor at(th);
  EXPECT_EQ(at.feed(scalar(1.0)), GuardVerdict::UnderThreshold);
  EnergyMonitor band(th);
  EXPECT_EQ(band.feed(scalar(std::sqrt(1.5))), GuardVerdict::ExceededXi);
  EnergyMonitor twice(th);
  EXPECT_EQ(twice.feed(scalar(std::sqrt(2.0))), GuardVerdict::ExceededTwoXi);
  EXPECT_EQ(twice.steps(), 1U);
  EXPECT_NEAR(twice.accumulated(), 2.0, 1e-15);
}

TEST(DetectionTime, HandEvaluatedScalar) {
  const double first = 1600.0 / 9.0 * std::log(10.0);
  const double second =
      std::log(6400.0 / 0.9 * (5.0 * (11.0 / 3.0) * std::log(10.0))) / std::log(1.2);
  EXPECT_NEAR(first, 409.35, 0.01);
  EXPECT_NEAR(second, 69.2, 0.1);
  EXPECT_EQ(unstable_detection_time(0.0, 0.1, 0.2, 1.0, kUnit, kHalf),
            static_cast<std::size_t>(std::ceil(std::max(first, second))));
  EXPECT_EQ(unstable_detection_time(0.0, 0.1, 0.2, 1.0, kUnit, kHalf), 410U);
}

TEST(DetectionTime, SmallMarginBindsSecondTerm) {
  const std::size_t t = unstable_detection_time(0.0, 0.1, 0.01, 1.0, kUnit, kHalf);
  const double second =
      std::log(6400.0 / 0.9 * (5.0 * (11.0 / 3.0) * std::log(10.0))) / std::log(1.01);
  EXPECT_EQ(t, static_cast<std::size_t>(std::ceil(second)));
}

TEST(DetectionTime, HugeMarginLeavesFirstTerm) {
  EXPECT_EQ(unstable_detection_time(0.0, 0.1, 1e12, 1.0, kUnit, kHalf),
            static_cast<std::size_t>(std::ceil(1600.0 / 9.0 * std::log(10.0))));
}

TEST(InitialTransient, Examples) {
  EXPECT_NEAR(initial_transient_bound(1, 4.0 / 3.0, 0.1), 5.0 * 4.0 / 3.0 * std::log(10.0), 1e-12);
  EXPECT_NEAR(initial_transient_bound(1, 4.0 / 3.0, 0.1), 15.35, 0.01);
  EXPECT_GT(initial_transient_bound(1, 4.0 / 3.0, 0.01), initial_transient_bound(1, 4.0 / 3.0, 0.1));
}

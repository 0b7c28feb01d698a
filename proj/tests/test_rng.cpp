#include "switchid/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace switchid;

TEST(Rng, SplitMixReferenceValues) {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(0x9E3779B97F4A7C15ULL), 0x6E789E6AA1B965F4ULL);
}

TEST(Rng, PureFunctionOfCounter) {
  EXPECT_EQ(normal_at(1, 2, 3), normal_at(1, 2, 3));
  EXPECT_NE(normal_at(1, 2, 3), normal_at(1, 2, 4));
  EXPECT_NE(normal_at(1, 2, 3), normal_at(1, 3, 3));
  EXPECT_NE(normal_at(1, 2, 3), normal_at(2, 2, 3));
  GaussianStream s(9, NoiseStream::Process);
  for (std::uint64_t k = 0; k < 5; ++k) EXPECT_EQ(s.next(), normal_at(9, 2, k));
  EXPECT_EQ(s.position(), 5U);
}

TEST(Rng, UniformInOpenInterval) {
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double u = uniform_at(42, 1, k);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  const int n = 200000;
  double sum = 0.0, sq = 0.0, fourth = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = normal_at(7, 4, static_cast<std::uint64_t>(k));
    sum += z;
    sq += z * z;
    fourth += z * z * z * z;
  }
  // 5 sigma bands on the sample moments.
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(fourth / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}

TEST(Rng, DerivedSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 10000; ++t) seen.insert(derive_seed(123, t));
  EXPECT_EQ(seen.size(), 10000U);
  EXPECT_EQ(derive_seed(123, 5), derive_seed(123, 5));
  EXPECT_NE(derive_seed(123, 5), derive_seed(124, 5));
}

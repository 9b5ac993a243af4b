#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "homog/rng.hpp"

using namespace homog;

TEST(Rng, HashIsDeterministicAndOrderSensitive) {
  EXPECT_EQ(rng::hash64({1, 2, 3}), rng::hash64({1, 2, 3}));
  EXPECT_NE(rng::hash64({1, 2, 3}), rng::hash64({3, 2, 1}));
  EXPECT_NE(rng::hash64({1, 2}), rng::hash64({1, 2, 0}));
}

TEST(Rng, UnitOpenNeverHitsEndpoints) {
  EXPECT_GT(rng::to_unit_open(0), 0.0);
  EXPECT_LT(rng::to_unit_open(~0ULL), 1.0);
}

TEST(Rng, HashUniformsHaveUniformMoments) {
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng::to_unit_open(rng::hash64({7, std::uint64_t(i)}));
    s += u;
    s2 += u * u;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  // standard error of the mean is sqrt(1/12/n) ≈ 6.5e-4
  EXPECT_NEAR(mean, 0.5, 4e-3);
  EXPECT_NEAR(var, 1.0 / 12.0, 2e-3);
}

TEST(Rng, NeighbouringCountersAreUncorrelated) {
  const int n = 100000;
  double sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = rng::to_unit_open(rng::hash64({3, std::uint64_t(i)})) - 0.5;
    const double b = rng::to_unit_open(rng::hash64({3, std::uint64_t(i + 1)})) - 0.5;
    sxy += a * b;
  }
  // correlation standard error 1/sqrt(n)
  EXPECT_LT(std::abs(sxy / n * 12.0), 5.0 / std::sqrt(double(n)));
}

TEST(Rng, StreamIsReproducible) {
  rng::Stream a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  rng::Stream d(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform(-2.0, 3.0);
    EXPECT_GT(u, -2.0);
    EXPECT_LT(u, 3.0);
  }
}

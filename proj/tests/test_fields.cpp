#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "homog/fields.hpp"

using namespace homog;

namespace {

const ScalarLaw kTwoPoint = ScalarLaw::discrete({1.0, 2.0}, {0.5, 0.5});

// Two-sample Kolmogorov–Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(Fields, ConstantField) {
  const auto f = CoefficientField::constant(2, {2.0, 2.0, 2.0}, 0.0);
  for (std::uint64_t s : {0ULL, 5ULL, 99ULL}) {
    const auto v = field_at(f, Seed{s}, {0.3 * s, -7.1, 0.0});
    EXPECT_EQ(v.a[0], 2.0);
    EXPECT_EQ(v.a[1], 2.0);
    EXPECT_EQ(v.lambda, 0.0);
  }
  EXPECT_THROW(CoefficientField::constant(2, {0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(Fields, LaminateDependsOnlyOnFirstCoordinate) {
  const auto f = CoefficientField::laminate(2, {kTwoPoint});
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Seed seed{s};
    for (double x1 : {0.1, 3.7, -12.2}) {
      const auto a = field_at(f, seed, {x1, 0.2, 0.0});
      const auto b = field_at(f, seed, {x1, 41.9, 0.0});
      EXPECT_EQ(a, b);
      EXPECT_EQ(a.a[0], a.a[1]);  // isotropic A = λ I
    }
  }
}

TEST(Fields, PiecewiseConstantOnShiftedCells) {
  const auto f = CoefficientField::checkerboard(2, {ScalarLaw::pareto(3.0)});
  const Seed seed{11};
  const Point s = f.shift(seed);
  for (int k = 0; k < 2; ++k) {
    EXPECT_GE(s[k], 0.0);
    EXPECT_LT(s[k], 1.0);
  }
  const Point inside1{s[0] + 4.01, s[1] + 2.01, 0.0};
  const Point inside2{s[0] + 4.99, s[1] + 2.99, 0.0};
  const Point outside{s[0] + 5.01, s[1] + 2.5, 0.0};
  EXPECT_EQ(field_at(f, seed, inside1), field_at(f, seed, inside2));
  EXPECT_NE(field_at(f, seed, inside1).a[0], field_at(f, seed, outside).a[0]);
  EXPECT_EQ(f.kind(), CoefficientField::Kind::HeavyTailCheckerboard);
}

TEST(Fields, DeterministicBitIdentical) {
  const auto f = CoefficientField::checkerboard(3, {ScalarLaw::pareto(2.5), kTwoPoint,
                                                    ScalarLaw::inverse_pareto(1.0)},
                                                ScalarLaw::pareto(4.0));
  for (int i = 0; i < 100; ++i) {
    const Point x{0.37 * i, -1.3 * i, 2.2 * i};
    EXPECT_EQ(field_at(f, Seed{7}, x), field_at(f, Seed{7}, x));
  }
}

TEST(Fields, CheckerboardSecondMomentWithinClt) {
  const auto f = CoefficientField::checkerboard(2, {kTwoPoint});
  const Seed seed{3};
  const int side = 100;  // 10^4 distinct cells
  double s = 0.0;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double l = f.cell_value(seed, {i, j, 0}).a[0];
      s += l * l;
    }
  const double mean = s / (side * side);
  // Var(λ²) = E[λ⁴] - 2.5² = 8.5 - 6.25 = 2.25
  const double sigma = std::sqrt(2.25 / (side * side));
  EXPECT_NEAR(mean, 2.5, 3.0 * sigma);
}

TEST(Fields, PositivityOverManyCells) {
  const auto f = CoefficientField::checkerboard(
      2, {ScalarLaw::inverse_pareto(0.5), ScalarLaw::pareto(1.0)});
  double lo = 1e300;
  for (int i = 0; i < 1000; ++i)
    for (int j = 0; j < 1000; ++j) {
      const auto v = f.cell_value(Seed{1}, {i, j, 0});
      lo = std::min({lo, v.a[0], v.a[1]});
    }
  EXPECT_GT(lo, 0.0);
}

TEST(Fields, StationarityKolmogorovSmirnov) {
  // cell values on [0,N)^2 and z + [0,N)^2 over 100 seeds, 1% level
  const auto f = CoefficientField::checkerboard(2, {ScalarLaw::pareto(2.0)});
  const int n = 8;
  const std::array<std::int64_t, 3> z{37, -12, 0};
  std::vector<double> a, b;
  for (std::uint64_t s = 0; s < 100; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        a.push_back(f.cell_value(Seed{s}, {i, j, 0}).a[0]);
        b.push_back(f.cell_value(Seed{s}, {i + z[0], j + z[1], 0}).a[0]);
      }
  const double na = a.size(), nb = b.size();
  const double critical = 1.628 * std::sqrt((na + nb) / (na * nb));
  EXPECT_LT(ks_statistic(a, b), critical);
}

TEST(Fields, ShiftIsUniform) {
  // the per-seed shift makes point evaluations R^d-stationary; check its law
  const auto f = CoefficientField::checkerboard(2, {kTwoPoint});
  std::vector<double> xs, ref;
  for (std::uint64_t s = 0; s < 2000; ++s) xs.push_back(f.shift(Seed{s})[0]);
  for (int i = 0; i < 2000; ++i) ref.push_back((i + 0.5) / 2000.0);
  EXPECT_LT(ks_statistic(xs, ref), 1.628 * std::sqrt(2.0 / 2000.0));
}

TEST(Fields, MomentsOfTwoPointLaw) {
  const auto f = CoefficientField::checkerboard(2, {kTwoPoint});
  const auto m = estimate_moments(f, Seed{5}, 2.0, 100000);
  EXPECT_NEAR(m.a_p, 2.5, 0.02 * 2.5);
  EXPECT_NEAR(m.a_inv, 0.625, 0.02 * 0.625);
  EXPECT_FALSE(m.flags.any());
}

TEST(Fields, MomentsOfConstantField) {
  const auto f = CoefficientField::constant(2, {1.0, 1.0, 1.0});
  const auto m = estimate_moments(f, Seed{0}, 2.0, 100);
  EXPECT_DOUBLE_EQ(m.a_p, 1.0);
  EXPECT_DOUBLE_EQ(m.a_inv, 1.0);
  EXPECT_DOUBLE_EQ(m.lambda, 0.0);
  EXPECT_FALSE(m.flags.any());
  EXPECT_THROW(estimate_moments(f, Seed{0}, 1.0, 10), std::invalid_argument);
}

TEST(Fields, ParetoDivergenceFlag) {
  // α = 1.5 < p = 2: E[λ^p] = ∞; flagged across the n_cells sweep
  const auto heavy = CoefficientField::checkerboard(2, {ScalarLaw::pareto(1.5)});
  for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
    const auto m = estimate_moments(heavy, Seed{2}, 2.0, n);
    EXPECT_TRUE(m.flags.a_p) << n;
    EXPECT_FALSE(m.flags.a_inv) << n;
  }
  // α = 6 > p: finite, not flagged at the largest size
  const auto light = CoefficientField::checkerboard(2, {ScalarLaw::pareto(6.0)});
  EXPECT_FALSE(estimate_moments(light, Seed{2}, 2.0, 1000000).flags.a_p);
}

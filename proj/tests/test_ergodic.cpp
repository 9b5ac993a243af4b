#include <gtest/gtest.h>

#include <cmath>

#include "homog/ergodic.hpp"

using namespace homog;

namespace {

const ScalarLaw kTwoPoint = ScalarLaw::discrete({1.0, 2.0}, {0.5, 0.5});

CoefficientField checker() { return CoefficientField::checkerboard(2, {kTwoPoint}); }

std::vector<Seed> seeds(std::uint64_t first, std::size_t n) {
  std::vector<Seed> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Seed{first + i});
  return out;
}

}  // namespace

TEST(Ergodic, ConstantFieldIsExact) {
  const auto field = CoefficientField::constant(2, {2.0, 2.0, 2.0}, 0.5);
  const Box region{{0.1, 0.2, 0}, {0.7, 0.9, 1}};
  for (double eps : {0.5, 0.1, 0.013}) {
    EXPECT_DOUBLE_EQ(ergodic_average(Observable::a_power(2.0), field, Seed{3}, region, eps), 4.0);
    EXPECT_DOUBLE_EQ(ergodic_average(Observable::a_inv_power(2.0), field, Seed{3}, region, eps), 0.25);
    EXPECT_DOUBLE_EQ(ergodic_average(Observable::lambda(), field, Seed{3}, region, eps), 0.5);
  }
  EXPECT_DOUBLE_EQ(*exact_mean(Observable::a_power(2.0), field), 4.0);
}

TEST(Ergodic, ExactMeansOfTheTwoPointLaw) {
  const auto f = checker();
  EXPECT_DOUBLE_EQ(*exact_mean(Observable::a_power(2.0), f), 2.5);
  EXPECT_DOUBLE_EQ(*exact_mean(Observable::a_inv_power(2.0), f), 0.625);
  EXPECT_DOUBLE_EQ(*exact_mean(Observable::truncated(Observable::a_power(2.0), 3.0), f), 2.0);
  EXPECT_DOUBLE_EQ(*exact_mean(Observable::linear(2.0, Observable::a_power(2.0), -1.0,
                                                  Observable::a_inv_power(2.0)), f),
                   4.375);
  // Pareto(1): E[min(λ, k)] = 1 + ln k
  const auto heavy = CoefficientField::checkerboard(2, {ScalarLaw::pareto(1.0)});
  EXPECT_FALSE(std::isfinite(*exact_mean(Observable::a_power(1.0), heavy)));
  EXPECT_NEAR(*exact_mean(Observable::truncated(Observable::a_power(1.0), 10.0), heavy),
              1.0 + std::log(10.0), 1e-12);
}

TEST(Ergodic, MomentsWithinEnsembleBand) {
  // eps = 1/64 on the unit square: about 64² iid cells, sd ≈ sqrt(Var g)/64
  const Box unit{};
  const auto f = checker();
  struct Case {
    Observable g;
    double mean, var;
  };
  for (const auto& c : {Case{Observable::a_power(2.0), 2.5, 2.25},
                        Case{Observable::a_inv_power(2.0), 0.625, 0.140625}}) {
    const auto ens = ensemble_average(c.g, f, Seed{1}, 100, unit, 1.0 / 64);
    EXPECT_TRUE(ens.mean_within(c.mean, 3.0)) << c.g.name << " " << ens.mean << " ± " << ens.stderr_;
    EXPECT_GE(ens.fraction_within(c.mean, 3.0), 0.95);
    const double clt = std::sqrt(c.var) / 64;
    EXPECT_GT(ens.sd, 0.6 * clt);
    EXPECT_LT(ens.sd, 1.6 * clt);
  }
}

TEST(Ergodic, QuadratureUsesFourPointsPerPeriod) {
  // a checkerboard that alternates every eps is integrated exactly when the
  // sample grid is aligned with it
  const auto alt = CoefficientField::custom(2, [](Seed, const Point& y) {
    FieldValue v;
    v.a[0] = v.a[1] = (static_cast<long>(std::floor(y[0])) % 2 == 0) ? 1.0 : 2.0;
    return v;
  });
  const Box unit{};
  EXPECT_NEAR(ergodic_average(Observable::a_power(2.0), alt, Seed{1}, unit, 1.0 / 8), 2.5, 1e-12);
  EXPECT_THROW(ergodic_average(Observable::a_power(2.0), alt, Seed{1}, unit, 0.0), std::invalid_argument);
  EXPECT_THROW(ergodic_average(Observable::a_power(2.0), alt, Seed{1}, Box{{0.5, 0, 0}, {0.5, 1, 1}}, 0.1),
               std::invalid_argument);
}

TEST(Ergodic, RandomProbeIsDisjointAndCoversAboutThirtyPercent) {
  const auto probe = random_probe(2, 20, 0.3, 7);
  EXPECT_EQ(probe.boxes.size(), 20u);
  EXPECT_NO_THROW(probe.validate());
  EXPECT_GT(probe.measure(), 0.2);
  EXPECT_LT(probe.measure(), 0.45);
  const auto again = random_probe(2, 20, 0.3, 7);
  for (std::size_t i = 0; i < probe.boxes.size(); ++i) EXPECT_EQ(probe.boxes[i].lo, again.boxes[i].lo);
}

TEST(Ergodic, ProbeValidation) {
  BorelProbe bad{2, {}, {Box{{0.1, 0.1, 0}, {0.5, 0.5, 1}}, Box{{0.4, 0.4, 0}, {0.6, 0.6, 1}}}, false};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  BorelProbe outside{2, {}, {Box{{0.8, 0.8, 0}, {1.2, 0.9, 1}}}, false};
  EXPECT_THROW(outside.validate(), std::invalid_argument);
  BorelProbe empty{2, {}, {}, false};
  EXPECT_THROW(empty.validate(), std::invalid_argument);
}

TEST(Ergodic, FullDomainProbeReducesToErgodicAverage) {
  const BorelProbe whole{2, {}, {Box{}}, false};
  const auto f = checker();
  const auto g = Observable::a_power(2.0);
  const auto r = weak_L1_probe(g, f, seeds(1, 4), whole, {1.0 / 8, 1.0 / 32, 1.0 / 128}, 2.5);
  for (const auto& row : r.rows)
    EXPECT_NEAR(row.deviation, std::abs(ergodic_average(g, f, Seed{row.seed}, Box{}, row.eps) - 2.5), 1e-12);
  EXPECT_TRUE(r.passed());
}

TEST(Ergodic, WeakL1TrendOnTwentyBoxUnion) {
  const auto probe = random_probe(2, 20, 0.3, 11);
  const auto r = weak_L1_probe(Observable::a_power(2.0), checker(), seeds(1, 8), probe,
                               {1.0 / 8, 1.0 / 32, 1.0 / 128}, 2.5);
  ASSERT_EQ(r.mean_deviation.size(), 3u);
  EXPECT_TRUE(r.trend_ok) << r.mean_deviation[0] << " -> " << r.mean_deviation[2];
  EXPECT_TRUE(r.abs_ok);
  EXPECT_EQ(r.rows.size(), 24u);
  EXPECT_THROW(weak_L1_probe(Observable::a_power(2.0), checker(), seeds(1, 2), probe, {0.1, 0.2}, 2.5),
               std::invalid_argument);
}

TEST(Ergodic, ComplementProbe) {
  auto probe = random_probe(2, 5, 0.2, 3);
  auto comp = probe;
  comp.complement = true;
  EXPECT_NEAR(probe.measure() + comp.measure(), 1.0, 1e-12);
  const auto f = checker();
  const auto g = Observable::a_power(2.0);
  // exact when every box edge lies on the quadrature grid of the domain
  BorelProbe aligned{2, {}, {Box{{0.25, 0.5, 0}, {0.5, 0.75, 1}}}, false};
  auto aligned_c = aligned;
  aligned_c.complement = true;
  const double eps = 1.0 / 16;
  const BorelProbe whole{2, {}, {Box{}}, false};
  EXPECT_NEAR(aligned.integral(g, f, Seed{2}, eps) + aligned_c.integral(g, f, Seed{2}, eps),
              whole.integral(g, f, Seed{2}, eps), 1e-12);
}

TEST(Ergodic, SetAdditivityIsExact) {
  const auto all = random_probe(2, 20, 0.3, 5);
  BorelProbe e1{2, {}, {all.boxes.begin(), all.boxes.begin() + 10}, false};
  BorelProbe e2{2, {}, {all.boxes.begin() + 10, all.boxes.end()}, false};
  const auto u = e1.united(e2);
  const auto f = checker();
  const auto g = Observable::a_power(2.0);
  for (double eps : {1.0 / 8, 1.0 / 64}) {
    const double whole = u.integral(g, f, Seed{9}, eps);
    const double parts = e1.integral(g, f, Seed{9}, eps) + e2.integral(g, f, Seed{9}, eps);
    EXPECT_NEAR(whole, parts, 1e-13 * std::abs(whole));
  }
  EXPECT_THROW(e1.united(e1), std::invalid_argument);
}

TEST(Ergodic, LinearityOfDeviations) {
  const auto probe = random_probe(2, 20, 0.3, 13);
  const auto f = checker();
  const auto g1 = Observable::a_power(2.0), g2 = Observable::a_inv_power(2.0);
  const double a = 2.0, b = -3.0;
  const auto lin = Observable::linear(a, g1, b, g2);
  const std::vector<double> eps{1.0 / 8, 1.0 / 32};
  const auto r1 = weak_L1_probe(g1, f, seeds(1, 4), probe, eps, 2.5);
  const auto r2 = weak_L1_probe(g2, f, seeds(1, 4), probe, eps, 0.625);
  const auto rl = weak_L1_probe(lin, f, seeds(1, 4), probe, eps, *exact_mean(lin, f));
  for (std::size_t i = 0; i < rl.rows.size(); ++i)
    EXPECT_LE(rl.rows[i].deviation,
              std::abs(a) * r1.rows[i].deviation + std::abs(b) * r2.rows[i].deviation + 1e-12);
}

TEST(Ergodic, TruncationConsistencyForPareto) {
  // λ Pareto(5), g = λ² ~ Pareto(2.5): E[g] = 5/3, E[(g − k)+] = k^{-3/2}/1.5 for k ≥ 1
  const auto f = CoefficientField::checkerboard(2, {ScalarLaw::pareto(5.0)});
  const auto g = Observable::a_power(2.0);
  const double eg = 5.0 / 3.0;
  ASSERT_NEAR(*exact_mean(g, f), eg, 1e-12);
  auto tail_of = [](double k) { return std::pow(k, -1.5) / 1.5; };
  const auto probe = random_probe(2, 20, 0.3, 17);
  for (double k : {1.5, 3.0, 10.0}) {
    const double tail = *exact_tail_mass(g, f, k);
    EXPECT_NEAR(tail, tail_of(k), 1e-12);
    EXPECT_NEAR(*exact_mean(Observable::truncated(g, k), f), eg - tail, 1e-12);
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const auto c = truncation_check(g, k, f, Seed{s}, probe, 1.0 / 32, eg, tail);
      EXPECT_TRUE(c.holds) << k << " " << s;
      EXPECT_GE(c.tail_integral, 0.0);
    }
  }
  // the tail integral averages to |E|·E[(g−k)+]
  double mean_tail = 0.0;
  for (std::uint64_t s = 1; s <= 40; ++s)
    mean_tail += truncation_check(g, 1.5, f, Seed{s}, probe, 1.0 / 32, eg, tail_of(1.5)).tail_integral / 40.0;
  EXPECT_NEAR(mean_tail, probe.measure() * tail_of(1.5), 0.1 * probe.measure() * tail_of(1.5));
}

TEST(Ergodic, DeterministicAcrossThreads) {
  const auto probe = random_probe(2, 20, 0.3, 19);
  WeakL1Options one, four;
  four.threads = 4;
  const auto a = weak_L1_probe(Observable::a_power(2.0), checker(), seeds(1, 6), probe, {0.1, 0.05}, 2.5, one);
  const auto b = weak_L1_probe(Observable::a_power(2.0), checker(), seeds(1, 6), probe, {0.1, 0.05}, 2.5, four);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].integral, b.rows[i].integral);
}

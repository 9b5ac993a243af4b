#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "homog/laws.hpp"

using namespace homog;

namespace {

// ∫_0^1 g(Q(u)) du by the midpoint rule after u = v^k on (0, 1/2) and
// u = 1 - v^k on (1/2, 1), which tames power-type endpoint singularities.
// Independent of the closed forms.
double quantile_integral(const ScalarLaw& law, const std::function<double(double)>& g,
                         int n = 400000, double k = 6.0) {
  const double v_max = std::pow(0.5, 1.0 / k);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = v_max * (i + 0.5) / n;
    const double jac = k * std::pow(v, k - 1.0) * v_max / n;
    const double u = std::pow(v, k);
    s += jac * (g(law.quantile(u)) + g(law.quantile(1.0 - u)));
  }
  return s;
}

}  // namespace

TEST(Laws, TwoPointMoments) {
  const auto law = ScalarLaw::discrete({1.0, 2.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(law.mean(), 1.5);
  EXPECT_DOUBLE_EQ(law.moment(2.0), 2.5);
  EXPECT_DOUBLE_EQ(law.moment(-2.0), 0.625);
  EXPECT_DOUBLE_EQ(1.0 / law.moment(-2.0), 1.6);
  EXPECT_DOUBLE_EQ(law.quantile(0.25), 1.0);
  EXPECT_DOUBLE_EQ(law.quantile(0.75), 2.0);
}

TEST(Laws, ParetoMomentsMatchQuadrature) {
  for (double alpha : {2.5, 3.0, 5.0}) {
    const auto law = ScalarLaw::pareto(alpha, 1.3);
    for (double q : {1.0, 2.0, -1.0, -2.0}) {
      if (q >= alpha) continue;
      const double exact = law.moment(q);
      const double numeric = quantile_integral(law, [q](double x) { return std::pow(x, q); });
      EXPECT_NEAR(numeric / exact, 1.0, 2e-4) << "alpha=" << alpha << " q=" << q;
    }
  }
}

TEST(Laws, InverseParetoMomentsMatchQuadrature) {
  for (double alpha : {0.5, 1.0, 3.0}) {
    const auto law = ScalarLaw::inverse_pareto(alpha, 0.7);
    for (double q : {1.0, 2.0, -0.25}) {
      if (-q >= alpha) continue;
      const double exact = law.moment(q);
      const double numeric = quantile_integral(law, [q](double x) { return std::pow(x, q); });
      EXPECT_NEAR(numeric / exact, 1.0, 2e-4) << "alpha=" << alpha << " q=" << q;
    }
  }
}

TEST(Laws, DivergentMomentsAreInfinite) {
  const auto p = ScalarLaw::pareto(1.0);
  EXPECT_TRUE(std::isinf(p.moment(2.0)));
  EXPECT_TRUE(std::isinf(p.mean()));
  EXPECT_TRUE(std::isfinite(p.moment(0.5)));
  // λ = U², E[λ^{-2}] = E[U^{-4}] = ∞, E[λ²] = 1/5
  const auto c = ScalarLaw::inverse_pareto(0.5);
  EXPECT_TRUE(std::isinf(c.moment(-2.0)));
  EXPECT_NEAR(c.moment(2.0), 0.2, 1e-15);
}

TEST(Laws, PowerLawOfParetoIsPareto) {
  const auto law = ScalarLaw::pareto(3.0, 2.0);
  const auto sq = law.power(2.0);
  EXPECT_EQ(sq.kind(), ScalarLaw::Kind::Pareto);
  EXPECT_DOUBLE_EQ(sq.alpha(), 1.5);
  EXPECT_DOUBLE_EQ(sq.scale(), 4.0);
  const auto inv = law.power(-1.0);
  EXPECT_EQ(inv.kind(), ScalarLaw::Kind::InversePareto);
  for (double u : {0.1, 0.5, 0.9})
    EXPECT_NEAR(sq.quantile(u), std::pow(law.quantile(u), 2.0), 1e-12);
}

TEST(Laws, TailMassMatchesQuadrature) {
  const auto law = ScalarLaw::pareto(3.0);
  for (double k : {0.5, 1.0, 2.0, 5.0}) {
    const double numeric =
        quantile_integral(law, [k](double x) { return std::max(x - k, 0.0); });
    EXPECT_NEAR(numeric, law.tail_mass(k), 1e-4 * (1.0 + law.tail_mass(k))) << k;
  }
  const auto ip = ScalarLaw::inverse_pareto(2.0, 3.0);
  for (double k : {0.0, 1.0, 2.5, 3.0}) {
    const double numeric = quantile_integral(ip, [k](double x) { return std::max(x - k, 0.0); });
    EXPECT_NEAR(numeric, ip.tail_mass(k), 1e-6) << k;
  }
  const auto two = ScalarLaw::discrete({1.0, 2.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(two.tail_mass(1.5), 0.25);
}

TEST(Laws, RejectsInvalidParameters) {
  EXPECT_THROW(ScalarLaw::pareto(0.0), std::invalid_argument);
  EXPECT_THROW(ScalarLaw::pareto(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(ScalarLaw::discrete({1.0}, {0.5}), std::invalid_argument);
  EXPECT_THROW(ScalarLaw::discrete({-1.0, 1.0}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(ScalarLaw::constant(std::nan("")), std::invalid_argument);
  EXPECT_FALSE(ScalarLaw::discrete({0.0, 1.0}, {0.5, 0.5}).strictly_positive());
}

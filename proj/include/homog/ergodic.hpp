#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/fields.hpp"
#include "homog/parallel.hpp"
#include "homog/rng.hpp"

namespace homog {

/// Axis-aligned box [lo, hi] in the first `dim` coordinates.
struct Box {
  Point lo{0.0, 0.0, 0.0};
  Point hi{1.0, 1.0, 1.0};

  double measure(int dim) const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= std::max(hi[k] - lo[k], 0.0);
    return v;
  }
  bool contains(const Box& b, int dim) const {
    for (int k = 0; k < dim; ++k)
      if (b.lo[k] < lo[k] || b.hi[k] > hi[k]) return false;
    return true;
  }
  bool overlaps(const Box& b, int dim) const {
    for (int k = 0; k < dim; ++k)
      if (b.lo[k] >= hi[k] || lo[k] >= b.hi[k]) return false;
    return true;
  }
};

/// Pointwise functional g of the field value.
struct Observable {
  enum class Kind { APower, AInvPower, Lambda, Truncated, Linear, Custom };

  Kind kind = Kind::Custom;
  double exponent = 1.0;
  double level = std::numeric_limits<double>::infinity();
  std::string name;
  std::function<double(const FieldValue&, int)> fn;
  std::vector<Observable> parts;
  std::vector<double> weights;

  /// |A|^p (operator norm).
  static Observable a_power(double p) {
    return {Kind::APower, p, std::numeric_limits<double>::infinity(), "|A|^" + fmt(p),
            [p](const FieldValue& v, int d) { return std::pow(op_norm(v, d), p); }, {}, {}};
  }
  /// |A^{-1}|^q.
  static Observable a_inv_power(double q) {
    return {Kind::AInvPower, q, std::numeric_limits<double>::infinity(), "|A^-1|^" + fmt(q),
            [q](const FieldValue& v, int d) { return std::pow(inverse_op_norm(v, d), q); }, {}, {}};
  }
  static Observable lambda() {
    return {Kind::Lambda, 1.0, std::numeric_limits<double>::infinity(), "Lambda",
            [](const FieldValue& v, int) { return v.lambda; }, {}, {}};
  }
  /// min(g, k).
  static Observable truncated(const Observable& g, double k) {
    auto inner = g.fn;
    return {Kind::Truncated, g.exponent, k, "min(" + g.name + "," + fmt(k) + ")",
            [inner, k](const FieldValue& v, int d) { return std::min(inner(v, d), k); }, {g}, {1.0}};
  }
  /// a·g1 + b·g2.
  static Observable linear(double a, const Observable& g1, double b, const Observable& g2) {
    auto f1 = g1.fn, f2 = g2.fn;
    return {Kind::Linear, 1.0, std::numeric_limits<double>::infinity(),
            fmt(a) + "*" + g1.name + "+" + fmt(b) + "*" + g2.name,
            [a, b, f1, f2](const FieldValue& v, int d) { return a * f1(v, d) + b * f2(v, d); },
            {g1, g2}, {a, b}};
  }
  static Observable custom(std::string name, std::function<double(const FieldValue&, int)> fn) {
    return {Kind::Custom, 1.0, std::numeric_limits<double>::infinity(), std::move(name), std::move(fn),
            {}, {}};
  }

  double operator()(const FieldValue& v, int dim) const { return fn(v, dim); }

 private:
  static std::string fmt(double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
};

namespace detail {

/// Law of the scalar that g depends on, when g is a power of a single
/// isotropic lattice weight (or of Λ).
inline std::optional<ScalarLaw> observable_law(const Observable& g, const CoefficientField& field) {
  const int d = field.dim();
  switch (g.kind) {
    case Observable::Kind::Lambda:
      if (field.kind() == CoefficientField::Kind::Constant)
        return ScalarLaw::constant(field.at(Seed{0}, Point{}).lambda);
      if (field.is_lattice()) return field.lambda_law();
      return std::nullopt;
    case Observable::Kind::APower:
    case Observable::Kind::AInvPower: {
      const double q = g.kind == Observable::Kind::APower ? g.exponent : -g.exponent;
      if (field.kind() == CoefficientField::Kind::Constant) {
        const FieldValue v = field.at(Seed{0}, Point{});
        const double s = g.kind == Observable::Kind::APower ? op_norm(v, d) : inverse_op_norm(v, d);
        return ScalarLaw::constant(std::pow(s, std::abs(q)));
      }
      if (field.is_lattice() && (field.isotropic() || d == 1)) return field.diag_law(0).power(q);
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace detail

/// Closed-form E[g] when the law of g is known; +inf for divergent moments.
inline std::optional<double> exact_mean(const Observable& g, const CoefficientField& field) {
  switch (g.kind) {
    case Observable::Kind::Truncated: {
      const auto law = detail::observable_law(g.parts[0], field);
      if (!law) return std::nullopt;
      const double k = g.level;
      const double m = law->mean();
      if (std::isfinite(m)) return m - law->tail_mass(k);
      // infinite-mean Pareto: E[min(X,k)] = ∫_0^k P(X > s) ds
      const double a = law->alpha(), s0 = law->scale();
      if (k <= s0) return k;
      if (a == 1.0) return s0 * (1.0 + std::log(k / s0));
      return s0 + std::pow(s0, a) * (std::pow(k, 1.0 - a) - std::pow(s0, 1.0 - a)) / (1.0 - a);
    }
    case Observable::Kind::Linear: {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.parts.size(); ++i) {
        const auto m = exact_mean(g.parts[i], field);
        if (!m) return std::nullopt;
        acc += g.weights[i] * *m;
      }
      return acc;
    }
    default: {
      const auto law = detail::observable_law(g, field);
      if (!law) return std::nullopt;
      return law->mean();
    }
  }
}

/// E[(g - k)+] in closed form, when available.
inline std::optional<double> exact_tail_mass(const Observable& g, const CoefficientField& field, double k) {
  const auto law = detail::observable_law(g, field);
  if (!law) return std::nullopt;
  return law->tail_mass(k);
}

/// Sample mean of g over `n_cells` lattice cells of one realization.
inline double sample_mean(const Observable& g, const CoefficientField& field, Seed seed, std::size_t n_cells) {
  if (n_cells < 1) throw std::invalid_argument("sample_mean: n_cells must be >= 1");
  const Point s = field.shift(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    Point x{0.5, 0.5, 0.5};
    for (int k = 0; k < field.dim(); ++k) x[k] += s[k];
    x[0] += static_cast<double>(i);
    acc += g(field.at(seed, x), field.dim());
  }
  return acc / static_cast<double>(n_cells);
}

/// Midpoint rule for ∫_box g(field(x/eps)) dx with at least `per_period`
/// points per period eps along every axis.
inline double box_integral(const Observable& g, const CoefficientField& field, Seed seed, const Box& box,
                           double eps, int per_period = 4) {
  if (!(eps > 0.0)) throw std::invalid_argument("box_integral: eps must be > 0");
  if (per_period < 1) throw std::invalid_argument("box_integral: per_period must be >= 1");
  const int d = field.dim();
  std::array<std::int64_t, kMaxDim> n{1, 1, 1};
  std::array<double, kMaxDim> h{1.0, 1.0, 1.0};
  double cell = 1.0;
  for (int k = 0; k < d; ++k) {
    const double side = box.hi[k] - box.lo[k];
    if (!(side > 0.0)) return 0.0;
    n[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(side * per_period / eps - 1e-9)));
    h[k] = side / static_cast<double>(n[k]);
    cell *= h[k];
  }
  double acc = 0.0;
  std::array<std::int64_t, kMaxDim> i{0, 0, 0};
  for (i[2] = 0; i[2] < n[2]; ++i[2])
    for (i[1] = 0; i[1] < n[1]; ++i[1]) {
      double row = 0.0;
      for (i[0] = 0; i[0] < n[0]; ++i[0]) {
        Point y{0.0, 0.0, 0.0};
        for (int k = 0; k < d; ++k) y[k] = (box.lo[k] + (static_cast<double>(i[k]) + 0.5) * h[k]) / eps;
        row += g(field.at(seed, y), d);
      }
      acc += row;
    }
  return acc * cell;
}

/// ⨍_region g(field(x/eps)) dx.
inline double ergodic_average(const Observable& g, const CoefficientField& field, Seed seed, const Box& region,
                              double eps, int per_period = 4) {
  const double vol = region.measure(field.dim());
  if (!(vol > 0.0)) throw std::invalid_argument("ergodic_average: empty region");
  return box_integral(g, field, seed, region, eps, per_period) / vol;
}

/// Test set E: a finite union of pairwise disjoint boxes inside the domain D,
/// or its complement in D.
struct BorelProbe {
  int dim = 2;
  Box domain{};
  std::vector<Box> boxes;
  bool complement = false;

  double measure() const {
    double m = 0.0;
    for (const auto& b : boxes) m += b.measure(dim);
    return complement ? domain.measure(dim) - m : m;
  }

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("BorelProbe: dim must be 1..3");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (!(boxes[i].measure(dim) > 0.0)) throw std::invalid_argument("BorelProbe: degenerate box");
      if (!domain.contains(boxes[i], dim)) throw std::invalid_argument("BorelProbe: box outside the domain");
      for (std::size_t j = 0; j < i; ++j)
        if (boxes[i].overlaps(boxes[j], dim)) throw std::invalid_argument("BorelProbe: boxes overlap");
    }
    if (!(measure() > 0.0)) throw std::invalid_argument("BorelProbe: set has zero measure");
  }

  /// ∫_E g(field(x/eps)) dx, additive over the boxes.
  double integral(const Observable& g, const CoefficientField& field, Seed seed, double eps,
                  int per_period = 4) const {
    double acc = 0.0;
    for (const auto& b : boxes) acc += box_integral(g, field, seed, b, eps, per_period);
    return complement ? box_integral(g, field, seed, domain, eps, per_period) - acc : acc;
  }

  /// Disjoint union (both probes must be plain unions on the same domain).
  BorelProbe united(const BorelProbe& other) const {
    if (complement || other.complement) throw std::invalid_argument("BorelProbe: union of complements");
    BorelProbe out = *this;
    out.boxes.insert(out.boxes.end(), other.boxes.begin(), other.boxes.end());
    out.validate();
    return out;
  }
};

/// `n_boxes` disjoint boxes with random sides, placed by rejection until
/// they cover roughly `coverage` of the domain.
inline BorelProbe random_probe(int dim, std::size_t n_boxes, double coverage, std::uint64_t seed,
                               Box domain = {}) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw std::invalid_argument("random_probe: coverage in (0,1)");
  BorelProbe probe{dim, domain, {}, false};
  rng::Stream rs(rng::hash64({seed, 0xb0e1ULL}));
  const double mean_side = std::pow(coverage / static_cast<double>(n_boxes), 1.0 / dim);
  std::size_t tries = 0;
  while (probe.boxes.size() < n_boxes) {
    if (++tries > 100000) throw std::runtime_error("random_probe: could not place disjoint boxes");
    Box b = domain;
    for (int k = 0; k < dim; ++k) {
      const double len = domain.hi[k] - domain.lo[k];
      const double side = std::min(mean_side * rs.uniform(0.5, 1.5), 0.9) * len;
      b.lo[k] = domain.lo[k] + rs.uniform(0.0, len - side);
      b.hi[k] = b.lo[k] + side;
    }
    const bool clash = std::any_of(probe.boxes.begin(), probe.boxes.end(),
                                   [&](const Box& o) { return o.overlaps(b, dim); });
    if (!clash) probe.boxes.push_back(b);
  }
  probe.validate();
  return probe;
}

struct WeakL1Row {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double integral = 0.0;
  double deviation = 0.0;  ///< |∫_E g − |E|·E[g]|
};

struct WeakL1Options {
  double abs_tol_rel = 0.05;  ///< final mean deviation must be below abs_tol_rel·|E|
  double trend_factor = 0.5;  ///< final mean deviation below trend_factor · initial
  int per_period = 4;
  int threads = 1;
};

struct WeakL1Result {
  double measure = 0.0;
  double expected = 0.0;
  std::vector<WeakL1Row> rows;        ///< ordered by eps, then seed
  std::vector<double> eps;
  std::vector<double> mean_deviation;  ///< per eps, averaged over seeds
  bool trend_ok = false;
  bool abs_ok = false;

  bool passed() const { return trend_ok && abs_ok; }
};

/// Deviations |∫_E g(field(x/eps)) dx − |E|·expected| over seeds and a
/// decreasing eps list.
inline WeakL1Result weak_L1_probe(const Observable& g, const CoefficientField& field,
                                  const std::vector<Seed>& seeds, const BorelProbe& probe,
                                  const std::vector<double>& eps_list, double expected,
                                  const WeakL1Options& opts = {}) {
  probe.validate();
  if (seeds.empty()) throw std::invalid_argument("weak_L1_probe: no seeds");
  if (eps_list.empty()) throw std::invalid_argument("weak_L1_probe: empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("weak_L1_probe: eps must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("weak_L1_probe: eps list must be decreasing");
  }
  if (!std::isfinite(expected)) throw std::invalid_argument("weak_L1_probe: E[g] must be finite");

  WeakL1Result out;
  out.measure = probe.measure();
  out.expected = expected;
  out.eps = eps_list;
  const std::size_t ns = seeds.size();
  out.rows.resize(eps_list.size() * ns);
  parallel_for(out.rows.size(), opts.threads, [&](std::size_t i) {
    const double eps = eps_list[i / ns];
    const Seed s = seeds[i % ns];
    const double v = probe.integral(g, field, s, eps, opts.per_period);
    out.rows[i] = {eps, s.value, v, std::abs(v - out.measure * expected)};
  });
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    double acc = 0.0;
    for (std::size_t k = 0; k < ns; ++k) acc += out.rows[e * ns + k].deviation;
    out.mean_deviation.push_back(acc / static_cast<double>(ns));
  }
  out.trend_ok = out.mean_deviation.back() < opts.trend_factor * out.mean_deviation.front();
  out.abs_ok = out.mean_deviation.back() < opts.abs_tol_rel * out.measure;
  return out;
}

/// Truncation consistency for g_k = min(g, k) on one realization:
/// |dev(g) − dev(g_k)| ≤ ∫_E (g−k)+ dx + |E|·E[(g−k)+].
struct TruncationCheck {
  double deviation = 0.0;
  double deviation_truncated = 0.0;
  double tail_integral = 0.0;  ///< ∫_E (g−k)+ dx
  double tail_mass = 0.0;      ///< E[(g−k)+]
  double bound = 0.0;
  bool holds = false;
};

inline TruncationCheck truncation_check(const Observable& g, double k, const CoefficientField& field, Seed seed,
                                        const BorelProbe& probe, double eps, double expected_g,
                                        double tail_mass, int per_period = 4) {
  probe.validate();
  if (!std::isfinite(expected_g) || !std::isfinite(tail_mass))
    throw std::invalid_argument("truncation_check: E[g] and the tail mass must be finite");
  const auto gk = Observable::truncated(g, k);
  const auto excess = Observable::custom("(g-k)+", [fn = g.fn, k](const FieldValue& v, int d) {
    return std::max(fn(v, d) - k, 0.0);
  });
  const double m = probe.measure();
  TruncationCheck c;
  const double ig = probe.integral(g, field, seed, eps, per_period);
  const double igk = probe.integral(gk, field, seed, eps, per_period);
  c.deviation = std::abs(ig - m * expected_g);
  c.deviation_truncated = std::abs(igk - m * (expected_g - tail_mass));
  c.tail_integral = probe.integral(excess, field, seed, eps, per_period);
  c.tail_mass = tail_mass;
  c.bound = c.tail_integral + m * tail_mass;
  const double slack = 1e-12 * (std::abs(ig) + m * std::abs(expected_g) + 1.0);
  c.holds = std::abs(c.deviation - c.deviation_truncated) <= c.bound + slack;
  return c;
}

/// Ensemble of ergodic averages over consecutive seeds.
struct EnsembleAverage {
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;
  double stderr_ = 0.0;

  /// |mean − target| ≤ k·stderr.
  bool mean_within(double target, double k) const { return std::abs(mean - target) <= k * stderr_; }
  /// Fraction of single-seed averages within k ensemble standard deviations of target.
  double fraction_within(double target, double k) const {
    std::size_t n = 0;
    for (double v : values) n += std::abs(v - target) <= k * sd;
    return values.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(values.size());
  }
};

inline EnsembleAverage ensemble_average(const Observable& g, const CoefficientField& field, Seed base_seed,
                                        std::size_t n_seeds, const Box& region, double eps,
                                        int per_period = 4, int threads = 1) {
  if (n_seeds < 2) throw std::invalid_argument("ensemble_average: need >= 2 seeds");
  EnsembleAverage out;
  out.values.resize(n_seeds);
  parallel_for(n_seeds, threads, [&](std::size_t i) {
    out.values[i] = ergodic_average(g, field, Seed{base_seed.value + i}, region, eps, per_period);
  });
  for (double v : out.values) out.mean += v / static_cast<double>(n_seeds);
  double var = 0.0;
  for (double v : out.values) var += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(var / static_cast<double>(n_seeds - 1));
  out.stderr_ = out.sd / std::sqrt(static_cast<double>(n_seeds));
  return out;
}

}  // namespace homog

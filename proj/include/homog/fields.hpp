#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "homog/laws.hpp"
#include "homog/rng.hpp"

namespace homog {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;

/// Coefficients at a point: diagonal entries of A and the weight Λ.
struct FieldValue {
  std::array<double, kMaxDim> a{1.0, 1.0, 1.0};
  double lambda = 0.0;

  friend bool operator==(const FieldValue&, const FieldValue&) = default;
};

/// Stationary random coefficient field x ↦ (A(ω,x), Λ(ω,x)), A diagonal.
///
/// Lattice kinds are piecewise constant on the unit lattice translated by a
/// per-seed uniform shift in [0,1)^d, which turns the Z^d-stationary lattice
/// field into an R^d-stationary one. Cell values are iid draws computed by
/// hashing (seed, field id, stream, cell index), so evaluation is O(1) and
/// needs no storage.
class CoefficientField {
 public:
  enum class Kind { Constant, Laminate1D, IidCheckerboard, HeavyTailCheckerboard, Custom };
  using CustomFn = std::function<FieldValue(Seed, const Point&)>;

  static CoefficientField constant(int dim, std::array<double, kMaxDim> a, double lambda = 0.0) {
    CoefficientField f(Kind::Constant, dim);
    for (int k = 0; k < dim; ++k)
      if (!(a[k] > 0.0)) throw std::invalid_argument("constant field needs positive A entries");
    if (!(lambda >= 0.0)) throw std::invalid_argument("constant field needs Λ >= 0");
    f.const_value_.a = a;
    f.const_value_.lambda = lambda;
    return f;
  }

  /// A(x) = diag(λ_1(x_1), ..., λ_d(x_1)); one law means A = λ(x_1) I.
  static CoefficientField laminate(int dim, std::vector<ScalarLaw> diag_laws,
                                   ScalarLaw lambda_law = ScalarLaw::constant(0.0),
                                   std::uint64_t field_id = 0x1a111a7eULL) {
    CoefficientField f(Kind::Laminate1D, dim);
    f.set_laws(std::move(diag_laws), std::move(lambda_law));
    f.id_ = field_id;
    return f;
  }

  static CoefficientField checkerboard(int dim, std::vector<ScalarLaw> diag_laws,
                                       ScalarLaw lambda_law = ScalarLaw::constant(0.0),
                                       std::uint64_t field_id = 0xc4ec4e7bULL) {
    bool heavy = false;
    for (const auto& law : diag_laws)
      heavy = heavy || law.kind() == ScalarLaw::Kind::Pareto ||
              law.kind() == ScalarLaw::Kind::InversePareto;
    heavy = heavy || lambda_law.kind() == ScalarLaw::Kind::Pareto;
    CoefficientField f(heavy ? Kind::HeavyTailCheckerboard : Kind::IidCheckerboard, dim);
    f.set_laws(std::move(diag_laws), std::move(lambda_law));
    f.id_ = field_id;
    return f;
  }

  /// User-supplied field; the caller is responsible for stationarity.
  static CoefficientField custom(int dim, CustomFn fn) {
    CoefficientField f(Kind::Custom, dim);
    f.custom_ = std::move(fn);
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  std::uint64_t id() const noexcept { return id_; }
  bool isotropic() const noexcept { return diag_laws_.size() == 1; }
  const std::vector<ScalarLaw>& diag_laws() const noexcept { return diag_laws_; }
  const ScalarLaw& lambda_law() const noexcept { return lambda_law_; }
  bool is_lattice() const noexcept {
    return kind_ == Kind::Laminate1D || kind_ == Kind::IidCheckerboard ||
           kind_ == Kind::HeavyTailCheckerboard;
  }

  /// Law of the k-th diagonal entry (lattice kinds only).
  const ScalarLaw& diag_law(int k) const { return diag_laws_[isotropic() ? 0 : k]; }

  /// Uniform offset of the lattice for this seed.
  Point shift(Seed seed) const {
    Point s{0.0, 0.0, 0.0};
    if (!is_lattice()) return s;
    for (int k = 0; k < dim_; ++k)
      s[k] = rng::to_unit_open(rng::hash64({seed.value, id_, kShiftStream, std::uint64_t(k)}));
    return s;
  }

  /// Value of lattice cell `cell` (cell coordinates beyond the first are
  /// ignored for laminates).
  FieldValue cell_value(Seed seed, std::array<std::int64_t, kMaxDim> cell) const {
    if (kind_ == Kind::Laminate1D) cell[1] = cell[2] = 0;
    FieldValue v;
    for (int k = 0; k < dim_; ++k) {
      const int stream = isotropic() ? 0 : k;
      if (isotropic() && k > 0) {
        v.a[k] = v.a[0];
        continue;
      }
      v.a[k] = diag_laws_[stream].quantile(uniform(seed, std::uint64_t(stream), cell));
    }
    v.lambda = lambda_law_.quantile(uniform(seed, kLambdaStream, cell));
    return v;
  }

  /// Lattice cell containing x for this seed.
  std::array<std::int64_t, kMaxDim> cell_of(Seed seed, const Point& x) const {
    const Point s = shift(seed);
    std::array<std::int64_t, kMaxDim> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k) c[k] = static_cast<std::int64_t>(std::floor(x[k] - s[k]));
    return c;
  }

  FieldValue at(Seed seed, const Point& x) const {
    switch (kind_) {
      case Kind::Constant:
        return const_value_;
      case Kind::Custom:
        return custom_(seed, x);
      default:
        return cell_value(seed, cell_of(seed, x));
    }
  }

 private:
  static constexpr std::uint64_t kShiftStream = 0x5417;
  static constexpr std::uint64_t kLambdaStream = 0x1a3b;

  CoefficientField(Kind kind, int dim) : kind_(kind), dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("field dimension must be 1..3");
  }

  void set_laws(std::vector<ScalarLaw> diag_laws, ScalarLaw lambda_law) {
    if (diag_laws.size() != 1 && diag_laws.size() != static_cast<std::size_t>(dim_))
      throw std::invalid_argument("need 1 (isotropic) or d diagonal laws");
    for (const auto& law : diag_laws)
      if (!law.strictly_positive())
        throw std::invalid_argument("diagonal weight laws must be strictly positive");
    diag_laws_ = std::move(diag_laws);
    lambda_law_ = std::move(lambda_law);
  }

  double uniform(Seed seed, std::uint64_t stream,
                 const std::array<std::int64_t, kMaxDim>& cell) const {
    return rng::to_unit_open(rng::hash64({seed.value, id_, stream, rng::as_word(cell[0]),
                                          rng::as_word(cell[1]), rng::as_word(cell[2])}));
  }

  Kind kind_;
  int dim_;
  std::uint64_t id_ = 0;
  FieldValue const_value_{};
  std::vector<ScalarLaw> diag_laws_{ScalarLaw::constant(1.0)};
  ScalarLaw lambda_law_ = ScalarLaw::constant(0.0);
  CustomFn custom_;
};

inline FieldValue field_at(const CoefficientField& field, Seed seed, const Point& x) {
  return field.at(seed, x);
}

/// |A|, |A^{-1}| in the operator norm (A diagonal).
inline double op_norm(const FieldValue& v, int dim) {
  double m = 0.0;
  for (int k = 0; k < dim; ++k) m = std::max(m, v.a[k]);
  return m;
}
inline double inverse_op_norm(const FieldValue& v, int dim) {
  double m = v.a[0];
  for (int k = 1; k < dim; ++k) m = std::min(m, v.a[k]);
  return 1.0 / m;
}

struct DivergenceFlags {
  bool a_p = false;
  bool a_inv = false;
  bool lambda = false;

  bool any() const noexcept { return a_p || a_inv || lambda; }
};

struct MomentEstimate {
  double a_p = 0.0;    ///< Ê[|A|^p]
  double a_inv = 0.0;  ///< Ê[|A^{-1}|^{p/(p-1)}]
  double lambda = 0.0; ///< Ê[Λ]
  DivergenceFlags flags;
  std::size_t n_cells = 0;
};

namespace detail {

/// Doubling-stability proxy for an infinite mean: the running mean at
/// checkpoints n, n/2, n/4, ... keeps growing, or a single sample carries a
/// macroscopic share of the total.
inline bool running_mean_diverges(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 64) return false;
  std::vector<double> prefix(n + 1, 0.0);
  double biggest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + samples[i];
    biggest = std::max(biggest, samples[i]);
  }
  if (!(prefix[n] > 0.0)) return false;
  if (!std::isfinite(prefix[n])) return true;

  std::vector<double> lx, ly;
  for (std::size_t m = n; m >= 32; m /= 2) {
    const double mean = prefix[m] / static_cast<double>(m);
    if (!(mean > 0.0)) break;
    lx.push_back(std::log(static_cast<double>(m)));
    ly.push_back(std::log(mean));
  }
  double slope = 0.0;
  if (lx.size() >= 3) {
    const double k = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  const double max_share = biggest / prefix[n];
  return slope > 0.15 || max_share > 0.2;
}

}  // namespace detail

/// Monte Carlo moments over `n_cells` distinct lattice cells of one realization.
inline MomentEstimate estimate_moments(const CoefficientField& field, Seed seed, double p,
                                       std::size_t n_cells) {
  if (!(p > 1.0)) throw std::invalid_argument("estimate_moments: p must be > 1");
  if (n_cells < 1) throw std::invalid_argument("estimate_moments: n_cells must be >= 1");
  const int d = field.dim();
  const double q = p / (p - 1.0);
  const Point s = field.shift(seed);
  std::vector<double> xa(n_cells), xi(n_cells), xl(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    Point x{0.5, 0.5, 0.5};
    for (int k = 0; k < d; ++k) x[k] += s[k];
    x[0] += static_cast<double>(i);
    const FieldValue v = field.at(seed, x);
    xa[i] = std::pow(op_norm(v, d), p);
    xi[i] = std::pow(inverse_op_norm(v, d), q);
    xl[i] = v.lambda;
  }
  auto mean = [](const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
  };
  MomentEstimate out;
  out.n_cells = n_cells;
  out.a_p = mean(xa);
  out.a_inv = mean(xi);
  out.lambda = mean(xl);
  out.flags.a_p = detail::running_mean_diverges(xa);
  out.flags.a_inv = detail::running_mean_diverges(xi);
  out.flags.lambda = detail::running_mean_diverges(xl);
  return out;
}

}  // namespace homog

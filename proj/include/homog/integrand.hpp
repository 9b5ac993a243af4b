#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/fields.hpp"

namespace homog {

/// Small dense m×d matrix (m, d <= 3), row-major. Rows index components of u,
/// columns index spatial directions.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::array<double, 9> v{};

  Mat() = default;
  Mat(int m, int d) : rows(m), cols(d) {}

  static Mat from_rows(int m, int d, std::initializer_list<double> values) {
    Mat a(m, d);
    int i = 0;
    for (double x : values) a.v[i++] = x;
    return a;
  }

  double& operator()(int r, int c) { return v[r * 3 + c]; }
  double operator()(int r, int c) const { return v[r * 3 + c]; }

  double frobenius_sq() const {
    double s = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) s += (*this)(r, c) * (*this)(r, c);
    return s;
  }
  double frobenius() const { return std::sqrt(frobenius_sq()); }

  bool finite() const {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (!std::isfinite((*this)(r, c))) return false;
    return true;
  }

  /// ξA for diagonal A.
  Mat times_diag(const std::array<double, kMaxDim>& a) const {
    Mat out(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out(r, c) = (*this)(r, c) * a[c];
    return out;
  }

  Mat& operator+=(const Mat& o) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) (*this)(r, c) += o(r, c);
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) {
    for (int r = 0; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c) a(r, c) -= b(r, c);
    return a;
  }
  friend Mat operator*(double s, Mat a) {
    for (int r = 0; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c) a(r, c) *= s;
    return a;
  }
};

/// Frobenius inner product.
inline double dot(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) s += a(r, c) * b(r, c);
  return s;
}

/// Energy density f(ω,x,ξ) = base(ξA(ω,x)) + Λ(ω,x).
///
/// PowerLaw:        base(η) = |η|^p
/// PerturbedConvex: base(η) = (1-ρ)|η|^p + ρ (sqrt(1+|η|^2) - 1)^p
///
/// |·| is the Frobenius norm. For 1 < p < 2 and regularization_delta δ > 0 the
/// power |η|^p is replaced by (δ² + |η|²)^{p/2} - δ^p, which is smooth at the
/// origin and never exceeds |η|^p.
struct Integrand {
  enum class Kind { PowerLaw, PerturbedConvex };

  Kind kind = Kind::PowerLaw;
  double p = 2.0;
  int m = 1;
  int d = 2;
  double regularization_delta = 0.0;
  double rho = 0.0;

  static Integrand power_law(double p, int m, int d, double delta = 0.0) {
    Integrand f;
    f.kind = Kind::PowerLaw;
    f.p = p;
    f.m = m;
    f.d = d;
    f.regularization_delta = delta;
    f.validate();
    return f;
  }

  static Integrand perturbed(double p, double rho, int m, int d, double delta = 0.0) {
    Integrand f = power_law(p, m, d, delta);
    f.kind = Kind::PerturbedConvex;
    f.rho = rho;
    f.validate();
    return f;
  }

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("integrand: p must be > 1");
    if (m < 1 || m > 3 || d < 1 || d > kMaxDim)
      throw std::invalid_argument("integrand: m and d must be in 1..3");
    if (!(regularization_delta >= 0.0))
      throw std::invalid_argument("integrand: regularization_delta must be >= 0");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("integrand: rho must be in [0,1)");
  }

  /// Lower growth constant c.
  double c() const { return kind == Kind::PowerLaw ? 1.0 : 1.0 - rho; }

  /// Amount by which regularization can undercut c|η|^p.
  double lower_slack() const { return regularized() ? std::pow(regularization_delta, p) : 0.0; }

  bool regularized() const { return p < 2.0 && regularization_delta > 0.0; }

  bool quadratic() const { return kind == Kind::PowerLaw && p == 2.0; }

  Integrand with_delta(double delta) const {
    Integrand f = *this;
    f.regularization_delta = delta;
    return f;
  }

  /// Radial profile of the power term and its derivative divided by |η|.
  /// Returns {φ(s), φ'(s)/s} for s = |η|.
  std::pair<double, double> power_term(double s2) const {
    if (regularized()) {
      const double dd = regularization_delta * regularization_delta;
      const double base = dd + s2;
      return {std::pow(base, 0.5 * p) - std::pow(regularization_delta, p),
              p * std::pow(base, 0.5 * p - 1.0)};
    }
    if (s2 == 0.0) return {0.0, p == 2.0 ? 2.0 : 0.0};
    if (p == 2.0) return {s2, 2.0};
    return {std::pow(s2, 0.5 * p), p * std::pow(s2, 0.5 * p - 1.0)};
  }

  /// base(η) and ∂base/∂η.
  double base(const Mat& eta, Mat* grad_eta) const {
    const double s2 = eta.frobenius_sq();
    auto [phi, dphi] = power_term(s2);
    double value = phi;
    double scale = dphi;
    if (kind == Kind::PerturbedConvex) {
      const double root = std::sqrt(1.0 + s2);
      const double q = root - 1.0;
      value = (1.0 - rho) * phi + rho * std::pow(q, p);
      // d/dη (sqrt(1+s²)-1)^p = p q^{p-1} η / sqrt(1+s²)
      scale = (1.0 - rho) * dphi + rho * p * std::pow(q, p - 1.0) / root;
    }
    if (grad_eta) *grad_eta = scale * eta;
    return value;
  }

  /// f(ξ) and ∂_ξ f for the coefficients c, without argument checks (hot loop).
  double density(const FieldValue& c, const Mat& xi, Mat* grad_xi) const {
    const Mat eta = xi.times_diag(c.a);
    const double value = base(eta, grad_xi) + c.lambda;
    if (grad_xi) *grad_xi = grad_xi->times_diag(c.a);
    return value;
  }

  /// Curvature scale of f along axis k; used for diagonal preconditioning.
  double stiffness_weight(const FieldValue& c, int k) const { return c.a[k] * c.a[k]; }
};

namespace detail {
inline void check_args(const Integrand& f, const Mat& xi) {
  if (xi.rows != f.m || xi.cols != f.d) throw std::invalid_argument("ξ has the wrong shape");
  if (!xi.finite()) throw std::invalid_argument("ξ must be finite");
}
}  // namespace detail

inline double eval(const Integrand& f, const std::array<double, kMaxDim>& a, double lambda,
                   const Mat& xi) {
  detail::check_args(f, xi);
  return f.base(xi.times_diag(a), nullptr) + lambda;
}

/// ∂_ξ f = (∂base)(ξA) A for diagonal A.
inline Mat grad(const Integrand& f, const std::array<double, kMaxDim>& a, double /*lambda*/,
                const Mat& xi) {
  detail::check_args(f, xi);
  Mat g;
  f.base(xi.times_diag(a), &g);
  return g.times_diag(a);
}

/// Constant C with |<∂f(ξ), z>| <= C((Λ^{1/p} + |ξA|)^{p-1} + Λ^{(p-1)/p}) |zA|.
inline double gradient_bound_constant(const Integrand& f) { return f.p; }

namespace detail {
/// Radial profile of the retraction ψ_r in units of r: ρ(τ) = |ψ_r(x)|/r for
/// τ = |x|/r. ρ(τ) = τ on [0,1], ρ = 0 on [3,∞), |ρ'| <= 1 and ρ(τ) <= τ, so
/// x ↦ x r ρ(|x|/r)/|x| is C¹ and 1-Lipschitz with |ψ_r| <= r(1 + 1/(2π)).
struct RetractionProfile {
  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kA = 0.5;  // length of the 1 → -1 slope transition

  static double value(double tau) {
    if (tau <= 1.0) return tau;
    const double s = tau - 1.0;  // in [0, 2]
    if (s >= 2.0) return 0.0;
    const double b = breakpoint();
    // ρ' = cos(π s/a) on [0,a]; -1 on [a,b]; -cos(π/2 (s-b)/(2-b)) on [b,2].
    const double peak = 1.0;  // ρ(1) = 1
    if (s <= kA) return peak + kA / kPi * std::sin(kPi * s / kA);
    const double at_a = peak;  // the sine term integrates to zero over [0,a]
    if (s <= b) return at_a - (s - kA);
    const double at_b = at_a - (b - kA);
    const double w = 2.0 - b;
    return at_b - w * 2.0 / kPi * std::sin(0.5 * kPi * (s - b) / w);
  }

  static double breakpoint() {
    // the profile must drop by exactly 1 on [0,2]:
    // (b - a) + (2/π)(2 - b) = 1  =>  b (1 - 2/π) = 1 + a - 4/π
    return (1.0 + kA - 4.0 / kPi) / (1.0 - 2.0 / kPi);
  }
};
}  // namespace detail

/// ψ_r applied to one point of R^m.
inline void truncate_point(std::span<double> x, double r) {
  double n2 = 0.0;
  for (double v : x) n2 += v * v;
  const double n = std::sqrt(n2);
  if (n <= r) return;
  const double scale = r * detail::RetractionProfile::value(n / r) / n;
  for (double& v : x) v *= scale;
}

/// Nodewise ψ_r for an interleaved nodal field with m components per node.
inline std::vector<double> truncate(std::span<const double> nodal, int m, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("truncate: level r must be > 0");
  if (m < 1 || nodal.size() % static_cast<std::size_t>(m) != 0)
    throw std::invalid_argument("truncate: bad component count");
  std::vector<double> out(nodal.begin(), nodal.end());
  for (std::size_t i = 0; i < out.size(); i += m)
    truncate_point(std::span<double>(out.data() + i, m), r);
  return out;
}

}  // namespace homog

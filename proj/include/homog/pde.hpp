#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/cell.hpp"
#include "homog/solver.hpp"

namespace homog {

using VectorFn = std::function<void(const Point&, std::span<double>)>;
using EpsVectorFn = std::function<void(const Point&, double, std::span<double>)>;
using ScalarFn = std::function<double(const Point&)>;
using EpsScalarFn = std::function<double(const Point&, double)>;

/// Boundary value problem on the box D = origin + (0, side)^d:
/// minimize F_ε(u) − ∫ f_ε·u over u = g on ∂D (and u ≥ φ_ε when given).
struct PDEProblem {
  int dim = 2;
  int m = 1;
  Point origin{0.0, 0.0, 0.0};
  double side = 1.0;
  VectorFn g;            ///< boundary datum; empty means g = 0
  VectorFn force0;       ///< limit force f₀; empty means 0
  EpsVectorFn force_eps; ///< f_ε; empty means f_ε = f₀
  ScalarFn obstacle;     ///< limit obstacle φ; empty means none
  EpsScalarFn obstacle_eps;  ///< φ_ε; empty means φ_ε = φ
  std::vector<double> eps_list;

  bool has_obstacle() const { return static_cast<bool>(obstacle) || static_cast<bool>(obstacle_eps); }

  void validate() const {
    if (dim < 2 || dim > 3) throw std::invalid_argument("pde: dim must be 2 or 3");
    if (m < 1 || m > 3) throw std::invalid_argument("pde: m must be in 1..3");
    if (!(side > 0.0)) throw std::invalid_argument("pde: side must be > 0");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      if (!(eps_list[i] > 0.0)) throw std::invalid_argument("pde: eps must be > 0");
      if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
        throw std::invalid_argument("pde: eps_list must decrease");
    }
    if (has_obstacle() && m != 1) throw std::invalid_argument("pde: obstacles need m = 1");
  }

  Mesh mesh(int n) const { return Mesh::cube(dim, n, side, origin); }
};

/// f_hom on a tabulated ξ-grid {−r..r}^{m×d} (k points per entry) with
/// multilinear interpolation. Outside the grid box the value is extended
/// p-homogeneously from the box surface, which is exact for Λ-free power laws.
class TabulatedLaw {
 public:
  TabulatedLaw() = default;

  static TabulatedLaw from_table(const HomogenizedTable& table, int m, int d, int k, double r) {
    TabulatedLaw law;
    law.m_ = m;
    law.d_ = d;
    law.k_ = k;
    law.r_ = r;
    law.p = table.p;
    const auto grid = xi_grid(m, d, k, r);
    law.values_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto idx = table.find(grid[i], 1e-9);
      if (!idx) throw std::invalid_argument("tabulated law: table does not cover the grid");
      law.values_[i] = table.entries[*idx].value;
    }
    law.scale_.fill(1.0);
    for (int c = 0; c < d; ++c) {
      Mat e(m, d);
      for (int row = 0; row < m; ++row) e(row, c) = std::min(1.0, r);
      law.scale_[c] = std::max(law.value(e, nullptr) / std::max(e.frobenius_sq(), 1e-300), 1e-12);
    }
    return law;
  }

  double p = 2.0;

  bool quadratic() const { return false; }

  double density(const FieldValue&, const Mat& xi, Mat* grad) const { return value(xi, grad); }

  /// Curvature scale along axis k for the diagonal preconditioner.
  double stiffness_weight(const FieldValue&, int k) const { return scale_[k]; }

  double value(const Mat& xi, Mat* grad) const {
    double s = 0.0;
    for (int row = 0; row < m_; ++row)
      for (int c = 0; c < d_; ++c) s = std::max(s, std::abs(xi(row, c)) / r_);
    if (s <= 1.0) return interpolate(xi, grad);
    const Mat inner = (1.0 / s) * xi;
    const double v = interpolate(inner, grad);
    if (grad) *grad = std::pow(s, p - 1.0) * *grad;
    return std::pow(s, p) * v;
  }

 private:
  double interpolate(const Mat& xi, Mat* grad) const {
    const int D = m_ * d_;
    std::array<int, 9> base{};
    std::array<double, 9> frac{};
    const double h = 2.0 * r_ / (k_ - 1);
    for (int e = 0; e < D; ++e) {
      const double x = (xi(e / d_, e % d_) + r_) / h;
      int i = std::clamp(static_cast<int>(std::floor(x)), 0, k_ - 2);
      base[e] = i;
      frac[e] = std::clamp(x - i, 0.0, 1.0);
    }
    double v = 0.0;
    std::array<double, 9> dv{};
    for (int corner = 0; corner < (1 << D); ++corner) {
      std::size_t flat = 0, stride = 1;
      double w = 1.0;
      for (int e = 0; e < D; ++e) {
        const int bit = (corner >> e) & 1;
        flat += static_cast<std::size_t>(base[e] + bit) * stride;
        stride *= static_cast<std::size_t>(k_);
        w *= bit ? frac[e] : 1.0 - frac[e];
      }
      const double fv = values_[flat];
      v += w * fv;
      if (!grad) continue;
      for (int e = 0; e < D; ++e) {
        double we = 1.0;
        for (int o = 0; o < D; ++o) {
          if (o == e) continue;
          const int bit = (corner >> o) & 1;
          we *= bit ? frac[o] : 1.0 - frac[o];
        }
        dv[e] += ((corner >> e) & 1 ? 1.0 : -1.0) * we * fv / h;
      }
    }
    if (grad) {
      *grad = Mat(m_, d_);
      for (int e = 0; e < D; ++e) (*grad)(e / d_, e % d_) = dv[e];
    }
    return v;
  }

  int m_ = 1, d_ = 2, k_ = 2;
  double r_ = 1.0;
  std::vector<double> values_;
  std::array<double, kMaxDim> scale_{};
};

/// The homogenized energy density used by solve_hom.
struct HomogenizedLaw {
  enum class Kind { Analytic, Tabulated };

  Kind kind = Kind::Analytic;
  /// Analytic: f_hom(ξ) = |ξ diag(a)|^p through `integrand` on the constant field a.
  Integrand integrand = Integrand::power_law(2.0, 1, 2);
  std::array<double, kMaxDim> a{1.0, 1.0, 1.0};
  TabulatedLaw table;

  /// f_hom(ξ) = Σ_k q_k |ξ e_k|², e.g. diag(1.6, 2.5) for the two-point laminate.
  static HomogenizedLaw quadratic_diag(int m, int d, std::array<double, kMaxDim> q) {
    HomogenizedLaw law;
    law.integrand = Integrand::power_law(2.0, m, d);
    for (int k = 0; k < d; ++k) {
      if (!(q[k] > 0.0)) throw std::invalid_argument("homogenized law: q must be > 0");
      law.a[k] = std::sqrt(q[k]);
    }
    return law;
  }

  static HomogenizedLaw power(const Integrand& f, std::array<double, kMaxDim> a) {
    HomogenizedLaw law;
    law.integrand = f;
    law.a = a;
    return law;
  }

  static HomogenizedLaw tabulated(TabulatedLaw t) {
    HomogenizedLaw law;
    law.kind = Kind::Tabulated;
    law.table = std::move(t);
    return law;
  }

  double value(const Mat& xi) const {
    if (kind == Kind::Tabulated) return table.value(xi, nullptr);
    FieldValue c;
    c.a = a;
    return integrand.density(c, xi, nullptr);
  }
};

struct PdeSolution {
  PdeSolution(DiscreteField u_, SolveReport report_)
      : u(std::move(u_)), report(std::move(report_)) {}

  DiscreteField u;
  SolveReport report;
  double energy = 0.0;       ///< F(u) − ∫ f·u at the minimizer
  double lift_energy = 0.0;  ///< same functional at the boundary lift g
  bool lift_admissible = true;
  /// max over 20 random interior test fields of |⟨DJ(u), φ⟩| / scale
  double weak_residual = 0.0;
  bool unresolved_scale = false;
  double contact_fraction = 0.0;
  std::vector<std::string> warnings;
  std::vector<double> obstacle;  ///< nodal φ_ε used by the solve (empty without obstacle)
  std::vector<double> gradient;  ///< nodal ∂J/∂u
};

namespace detail {

inline Problem make_problem(const PDEProblem& pr, const Mesh& mesh, double eps, bool limit) {
  Problem pb{DiscreteField(mesh, pr.m), Boundary::Dirichlet, {}, {}};
  if (pr.g) pb.lift = DiscreteField::interpolate(mesh, pr.m, pr.g);
  const bool use_eps_force = !limit && static_cast<bool>(pr.force_eps);
  if (use_eps_force || pr.force0) {
    pb.force.assign(mesh.num_nodes() * pr.m, 0.0);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      std::span<double> out(pb.force.data() + i * pr.m, pr.m);
      if (use_eps_force)
        pr.force_eps(mesh.position(i), eps, out);
      else
        pr.force0(mesh.position(i), out);
    }
  }
  if (pr.has_obstacle()) {
    pb.obstacle.resize(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      const Point x = mesh.position(i);
      pb.obstacle[i] = (!limit && pr.obstacle_eps) ? pr.obstacle_eps(x, eps) : pr.obstacle(x);
    }
  }
  return pb;
}

/// J at the nodal field u for the density/coefficients of the solve.
template <Density F>
double functional(const F& f, std::span<const FieldValue> coeffs, const Problem& pb,
                  const DiscreteField& u) {
  const Mesh& mesh = u.mesh;
  const double vol = mesh.element_volume();
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    total += vol * f.density(coeffs[e], gradient_on_element(u, e), nullptr);
  if (!pb.force.empty()) {
    const auto mass = lumped_mass(mesh);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      for (int r = 0; r < u.m; ++r) total -= mass[i] * pb.force[i * u.m + r] * u.at(i, r);
  }
  return total;
}

/// Weak-form residual against random test fields supported on free,
/// non-contact nodes; normalized by Σ_e |e| |∂f(∇u)||∇φ| + Σ_i m_i |f_i||φ_i|.
template <Density F>
double weak_residual(const F& f, std::span<const FieldValue> coeffs, const Problem& pb,
                     const DiscreteField& u, std::span<const double> nodal_grad,
                     std::uint64_t seed, int count = 20) {
  const Mesh& mesh = u.mesh;
  const int m = u.m;
  const double vol = mesh.element_volume();
  const auto mass = lumped_mass(mesh);
  std::vector<char> active(mesh.num_nodes(), 0);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    active[i] = !u.boundary_mask[i];
    if (!pb.obstacle.empty() && u.at(i, 0) <= pb.obstacle[i] + 1e-9) active[i] = 0;
  }
  rng::Stream rs(seed);
  double worst = 0.0;
  DiscreteField phi(mesh, m);
  for (int j = 0; j < count; ++j) {
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      for (int r = 0; r < m; ++r) phi.dofs[i * m + r] = active[i] ? rs.uniform(-1.0, 1.0) : 0.0;
    double num = 0.0;
    for (std::size_t k = 0; k < phi.dofs.size(); ++k) num += nodal_grad[k] * phi.dofs[k];
    double scale = 0.0;
    Mat g;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      f.density(coeffs[e], gradient_on_element(u, e), &g);
      scale += vol * g.frobenius() * gradient_on_element(phi, e).frobenius();
    }
    if (!pb.force.empty())
      for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
        for (int r = 0; r < m; ++r)
          scale += mass[i] * std::abs(pb.force[i * m + r] * phi.dofs[i * m + r]);
    if (scale > 0.0) worst = std::max(worst, std::abs(num) / scale);
  }
  return worst;
}

template <Density F>
PdeSolution solve_problem(const F& f, const Mesh& mesh, std::span<const FieldValue> coeffs,
                          const Problem& pb, const SolveOptions& opts, std::uint64_t test_seed) {
  SolveResult res = minimize(f, mesh, coeffs, pb, opts);
  PdeSolution out(std::move(res.u), std::move(res.report));
  out.energy = out.report.final_energy;
  out.gradient = std::move(res.gradient);
  out.obstacle = pb.obstacle;
  out.lift_energy = functional(f, coeffs, pb, pb.lift);
  if (!pb.obstacle.empty()) {
    std::size_t interior = 0, contact = 0;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      if (pb.lift.dofs[i] < pb.obstacle[i]) out.lift_admissible = false;
      if (out.u.boundary_mask[i]) continue;
      ++interior;
      if (out.u.dofs[i] <= pb.obstacle[i] + 1e-9) ++contact;
    }
    out.contact_fraction = interior ? static_cast<double>(contact) / interior : 0.0;
  }
  out.weak_residual = weak_residual(f, coeffs, pb, out.u, out.gradient, test_seed);
  return out;
}

}  // namespace detail

/// Minimizer of the discretized F_{ε,f_ε,g} on an n-subdivision mesh of D.
inline PdeSolution solve_eps(const PDEProblem& problem, const CoefficientField& field,
                             const Integrand& f, Seed seed, double eps, int n,
                             const SolveOptions& opts = {}) {
  problem.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("solve_eps: eps must be > 0");
  if (f.m != problem.m || f.d != problem.dim)
    throw std::invalid_argument("solve_eps: integrand shape does not match the problem");
  const Mesh mesh = problem.mesh(n);
  const auto coeffs = sample_coefficients(mesh, field, seed, eps);
  const Problem pb = detail::make_problem(problem, mesh, eps, false);
  PdeSolution out = detail::solve_problem(f, mesh, std::span<const FieldValue>(coeffs), pb, opts,
                                          seed.value ^ 0x7e57f1e1dULL);
  double per_period = 1e300;
  for (int k = 0; k < problem.dim; ++k) per_period = std::min(per_period, eps / mesh.h(k));
  if (field.kind() != CoefficientField::Kind::Constant && per_period < 8.0) {
    out.unresolved_scale = true;
    out.warnings.push_back("UnresolvedScale: " + std::to_string(per_period) +
                           " elements per period (< 8)");
  }
  return out;
}

/// Minimizer of ∫ f_hom(∇u) − ∫ f₀·u with boundary g (and obstacle φ).
inline PdeSolution solve_hom(const PDEProblem& problem, const HomogenizedLaw& law, int n,
                             const SolveOptions& opts = {}) {
  problem.validate();
  const Mesh mesh = problem.mesh(n);
  const Problem pb = detail::make_problem(problem, mesh, 0.0, true);
  std::vector<FieldValue> coeffs(mesh.num_elements());
  for (auto& c : coeffs) c.a = law.a;
  const std::span<const FieldValue> cs(coeffs);
  if (law.kind == HomogenizedLaw::Kind::Tabulated)
    return detail::solve_problem(law.table, mesh, cs, pb, opts, 0x40a1ULL);
  if (law.integrand.m != problem.m || law.integrand.d != problem.dim)
    throw std::invalid_argument("solve_hom: law shape does not match the problem");
  return detail::solve_problem(law.integrand, mesh, cs, pb, opts, 0x40a1ULL);
}

struct ConvergenceRow {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double error_ld = 0.0;    ///< ‖u_ε − u_hom‖_{L^{d/(d-1)}} / ‖u_hom‖_{L^{d/(d-1)}}
  double error_weak = 0.0;  ///< max over quadrant boxes B of |∫_B ∇(u_ε − u_hom)| / ∫_D |∇u_hom|
  double energy_eps = 0.0;
  double energy_hom = 0.0;
  double contact_fraction = 0.0;
  double w11 = 0.0;         ///< ‖u_ε‖_{W^{1,1}}
  std::array<double, 3> tails{};  ///< ∫_{|∇u_ε| ≥ k·median} |∇u_ε| for k = 2, 4, 8
  bool converged = false;
  bool unresolved = false;
  bool feasible = true;     ///< u_ε ≥ φ_ε nodewise (true without obstacle)
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  PdeSolution hom;
  /// |E_ε − E_hom| at the smallest ε is below its value at the largest ε.
  bool energy_gap_shrinks = false;
  bool error_shrinks = false;
};

namespace detail {

inline std::array<double, 3> gradient_tails(const DiscreteField& u) {
  const Mesh& mesh = u.mesh;
  std::vector<double> g(mesh.num_elements());
  for (std::size_t e = 0; e < g.size(); ++e) g[e] = gradient_on_element(u, e).frobenius();
  std::vector<double> sorted = g;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::array<double, 3> tails{};
  const double ks[3] = {2.0, 4.0, 8.0};
  for (int j = 0; j < 3; ++j)
    for (double v : g)
      if (v >= ks[j] * median) tails[j] += mesh.element_volume() * v;
  return tails;
}

inline double weak_gradient_gap(const DiscreteField& a, const DiscreteField& b) {
  const Mesh& mesh = a.mesh;
  const int d = mesh.dim();
  const double vol = mesh.element_volume();
  std::vector<Mat> box_sum(std::size_t(1) << d, Mat(a.m, d));
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Point x = mesh.barycenter(e);
    std::size_t box = 0;
    for (int k = 0; k < d; ++k)
      if (x[k] - mesh.origin()[k] >= 0.5 * mesh.lengths()[k]) box |= std::size_t(1) << k;
    const Mat gb = gradient_on_element(b, e);
    box_sum[box] += vol * (gradient_on_element(a, e) - gb);
    total += vol * gb.frobenius();
  }
  double worst = 0.0;
  for (const Mat& s : box_sum) worst = std::max(worst, s.frobenius());
  return total > 0.0 ? worst / total : worst;
}

}  // namespace detail

/// e(ε) for every ε of the problem, with u_ε and u_hom on the same n_fine mesh.
inline ConvergenceTable convergence_study(const PDEProblem& problem, const CoefficientField& field,
                                          const Integrand& f, const HomogenizedLaw& law, Seed seed,
                                          int n_fine, const SolveOptions& opts = {},
                                          int threads = 1) {
  problem.validate();
  if (problem.eps_list.size() < 3)
    throw std::invalid_argument("convergence_study: need at least 3 eps values");
  ConvergenceTable table{.rows = {}, .hom = solve_hom(problem, law, n_fine, opts)};
  const double hom_norm = norm(table.hom.u, NormKind::LdOverDm1);
  table.rows.resize(problem.eps_list.size());
  parallel_for(table.rows.size(), threads, [&](std::size_t j) {
    const double eps = problem.eps_list[j];
    const PdeSolution s = solve_eps(problem, field, f, seed, eps, n_fine, opts);
    ConvergenceRow& row = table.rows[j];
    row.eps = eps;
    row.seed = seed.value;
    DiscreteField diff = s.u;
    for (std::size_t k = 0; k < diff.dofs.size(); ++k) diff.dofs[k] -= table.hom.u.dofs[k];
    const double dn = norm(diff, NormKind::LdOverDm1);
    row.error_ld = hom_norm > 0.0 ? dn / hom_norm : dn;
    row.error_weak = detail::weak_gradient_gap(s.u, table.hom.u);
    row.energy_eps = s.energy;
    row.energy_hom = table.hom.energy;
    row.contact_fraction = s.contact_fraction;
    row.w11 = norm(s.u, NormKind::W11);
    row.tails = detail::gradient_tails(s.u);
    row.converged = s.report.converged;
    row.unresolved = s.unresolved_scale;
    for (std::size_t i = 0; i < s.obstacle.size(); ++i)
      if (s.u.dofs[i] < s.obstacle[i] - 1e-12) row.feasible = false;
  });
  const auto& first = table.rows.front();
  const auto& last = table.rows.back();
  table.energy_gap_shrinks = std::abs(last.energy_eps - last.energy_hom) <
                             std::abs(first.energy_eps - first.energy_hom);
  table.error_shrinks = last.error_ld < first.error_ld;
  return table;
}

}  // namespace homog

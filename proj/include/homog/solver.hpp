#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/mesh.hpp"
#include "homog/rng.hpp"
#include "homog/sparse.hpp"

namespace homog {

struct InfeasibleObstacle : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  enum class Method { Auto, CGLinear, FirstOrder };
  enum class Preconditioner { Jacobi, Multigrid };
  enum class Init { Zero, Random };

  int max_iters = 20000;
  double grad_tol = 1e-8;     ///< relative: stop when |∇J| <= grad_tol (1 + |J|)
  double energy_tol = 1e-20;  ///< relative decrease treated as a stall
  Method method = Method::Auto;
  Preconditioner preconditioner = Preconditioner::Multigrid;
  /// Regularization schedule for 1 < p < 2; the last entry is the final δ.
  std::vector<double> continuation_deltas;
  Init init = Init::Zero;
  std::uint64_t init_seed = 0;
  double init_scale = 0.1;
  bool keep_trace = false;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("solve options: max_iters must be >= 1");
    if (!(grad_tol > 0.0) || !(energy_tol > 0.0))
      throw std::invalid_argument("solve options: tolerances must be > 0");
    for (std::size_t i = 0; i < continuation_deltas.size(); ++i) {
      if (!(continuation_deltas[i] >= 0.0))
        throw std::invalid_argument("solve options: continuation deltas must be >= 0");
      if (i > 0 && !(continuation_deltas[i] < continuation_deltas[i - 1]))
        throw std::invalid_argument("solve options: continuation deltas must decrease strictly");
    }
    if (!(init_scale >= 0.0)) throw std::invalid_argument("solve options: init_scale must be >= 0");
  }
};

struct SolveReport {
  double final_energy = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  double wall_time = 0.0;
  std::string method;
  /// Accepted objective values, filled when SolveOptions::keep_trace is set.
  std::vector<double> energy_trace;
};

enum class Boundary { Dirichlet, Periodic };

/// Discrete problem: minimize Σ_e |e| f(∇u) − Σ_i m_i force_i·u_i.
///
/// Dirichlet: u = lift on boundary nodes, the interior of lift is the start.
/// Periodic: u = lift + w with w periodic on the box; lift is normally ξx.
struct Problem {
  DiscreteField lift;
  Boundary boundary = Boundary::Dirichlet;
  std::vector<double> force;     ///< nodal density, m per node; empty for none
  std::vector<double> obstacle;  ///< nodal lower bound (m = 1, Dirichlet); empty for none
};

struct SolveResult {
  DiscreteField u;
  SolveReport report;
  /// Nodal ∂J/∂u (m per node), zero on fixed nodes.
  std::vector<double> gradient;
};

/// Energy density accepted by the solver.
template <class F>
concept Density = requires(const F& f, const FieldValue& c, const Mat& xi, Mat* g) {
  { f.density(c, xi, g) } -> std::convertible_to<double>;
  { f.quadratic() } -> std::convertible_to<bool>;
};

namespace detail {

/// Nodes → free unknowns. Fixed nodes map to -1.
struct DofMap {
  int dim = 2;
  int n = 1;
  std::vector<std::int64_t> node_dof;
  std::size_t ndofs = 0;

  static std::size_t index(int dim, int n, const std::array<int, kMaxDim>& c) {
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < dim; ++k) {
      idx += static_cast<std::size_t>(c[k]) * stride;
      stride *= static_cast<std::size_t>(n) + 1;
    }
    return idx;
  }
  static std::array<int, kMaxDim> coords(int dim, int n, std::size_t node) {
    std::array<int, kMaxDim> c{0, 0, 0};
    for (int k = 0; k < dim; ++k) {
      c[k] = static_cast<int>(node % (static_cast<std::size_t>(n) + 1));
      node /= static_cast<std::size_t>(n) + 1;
    }
    return c;
  }

  static DofMap build(const Mesh& mesh, Boundary bc) {
    DofMap m;
    m.dim = mesh.dim();
    m.n = mesh.n();
    m.node_dof.assign(mesh.num_nodes(), -1);
    if (bc == Boundary::Dirichlet) {
      for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
        if (!mesh.on_boundary(i)) m.node_dof[i] = static_cast<std::int64_t>(m.ndofs++);
      return m;
    }
    // periodic: canonical representatives have all coordinates < n; node 0 is pinned
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      auto c = mesh.node_coords(i);
      bool canonical = true;
      for (int k = 0; k < m.dim; ++k) canonical = canonical && c[k] < m.n;
      if (canonical && i != 0) m.node_dof[i] = static_cast<std::int64_t>(m.ndofs++);
    }
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      auto c = mesh.node_coords(i);
      for (int k = 0; k < m.dim; ++k) c[k] %= m.n;
      m.node_dof[i] = m.node_dof[mesh.node_index(c)];
    }
    return m;
  }

  /// Unknowns of the grid with n/2 subdivisions: coarse node c is fine node 2c.
  DofMap coarsen() const {
    DofMap c;
    c.dim = dim;
    c.n = n / 2;
    std::size_t nodes = 1;
    for (int k = 0; k < dim; ++k) nodes *= static_cast<std::size_t>(c.n) + 1;
    c.node_dof.assign(nodes, -1);
    std::vector<std::int64_t> renum(ndofs, -1);
    for (std::size_t i = 0; i < nodes; ++i) {
      auto cc = coords(dim, c.n, i);
      for (int k = 0; k < dim; ++k) cc[k] *= 2;
      const std::int64_t fd = node_dof[index(dim, n, cc)];
      if (fd < 0) continue;
      if (renum[fd] < 0) renum[fd] = static_cast<std::int64_t>(c.ndofs++);
      c.node_dof[i] = renum[fd];
    }
    return c;
  }

  /// Kuhn midpoint interpolation from `coarse` (= coarsen()) to this grid.
  sparse::Csr prolongation(const DofMap& coarse) const {
    sparse::TripletBuilder tb(ndofs, coarse.ndofs);
    std::vector<char> done(ndofs, 0);
    for (std::size_t i = 0; i < node_dof.size(); ++i) {
      const std::int64_t fd = node_dof[i];
      if (fd < 0 || done[fd]) continue;
      done[fd] = 1;
      const auto c = coords(dim, n, i);
      std::array<int, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
      bool same = true;
      for (int k = 0; k < dim; ++k) {
        lo[k] = c[k] / 2;
        hi[k] = lo[k] + c[k] % 2;
        same = same && lo[k] == hi[k];
      }
      const std::int64_t a = coarse.node_dof[index(dim, coarse.n, lo)];
      const std::int64_t b = coarse.node_dof[index(dim, coarse.n, hi)];
      if (same) {
        if (a >= 0) tb.add(fd, a, 1.0);
      } else {
        if (a >= 0) tb.add(fd, a, 0.5);
        if (b >= 0) tb.add(fd, b, 0.5);
      }
    }
    return tb.build();
  }
};

/// J(w) = energy(lift + E w) − ⟨force, lift + E w⟩ with E the dof expansion.
template <Density F>
class Objective {
 public:
  Objective(const F& f, const Mesh& mesh, std::span<const FieldValue> coeffs, const Problem& pb,
            const DofMap& dofs, std::span<const double> node_mass)
      : f_(f), mesh_(mesh), coeffs_(coeffs), pb_(pb), dofs_(dofs), node_mass_(node_mass),
        m_(pb.lift.m), u_(pb.lift.dofs.size()), gu_(pb.lift.dofs.size()) {}

  std::size_t size() const noexcept { return dofs_.ndofs * static_cast<std::size_t>(m_); }

  void expand(std::span<const double> w, std::vector<double>& u) const {
    u.assign(pb_.lift.dofs.begin(), pb_.lift.dofs.end());
    for (std::size_t i = 0; i < dofs_.node_dof.size(); ++i) {
      const std::int64_t d = dofs_.node_dof[i];
      if (d < 0) continue;
      for (int r = 0; r < m_; ++r) u[i * m_ + r] += w[d * m_ + r];
    }
  }

  /// Objective value; accumulates the dof gradient when `grad` is given and
  /// the nodal gradient when `nodal` is given.
  double operator()(std::span<const double> w, std::vector<double>* grad,
                    std::vector<double>* nodal = nullptr, std::vector<double>* elem = nullptr) {
    expand(w, u_);
    if (elem) elem->resize(mesh_.num_elements());
    const bool want = grad != nullptr || nodal != nullptr;
    if (want) std::fill(gu_.begin(), gu_.end(), 0.0);
    const int d = mesh_.dim();
    const double vol = mesh_.element_volume();
    double total = 0.0;
    Mat g(m_, d), dg(m_, d);
    for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
      const Mesh::Element el = mesh_.element(e);
      for (int i = 0; i < d; ++i) {
        const int axis = el.axes[i];
        const double inv_h = 1.0 / mesh_.h(axis);
        for (int r = 0; r < m_; ++r)
          g(r, axis) = (u_[el.nodes[i + 1] * m_ + r] - u_[el.nodes[i] * m_ + r]) * inv_h;
      }
      const double fe = vol * f_.density(coeffs_[e], g, want ? &dg : nullptr);
      total += fe;
      if (elem) (*elem)[e] = fe;
      if (!want) continue;
      for (int i = 0; i < d; ++i) {
        const int axis = el.axes[i];
        const double s = vol / mesh_.h(axis);
        for (int r = 0; r < m_; ++r) {
          gu_[el.nodes[i + 1] * m_ + r] += s * dg(r, axis);
          gu_[el.nodes[i] * m_ + r] -= s * dg(r, axis);
        }
      }
    }
    if (!pb_.force.empty()) {
      for (std::size_t i = 0; i < node_mass_.size(); ++i)
        for (int r = 0; r < m_; ++r) {
          const double fm = node_mass_[i] * pb_.force[i * m_ + r];
          total -= fm * u_[i * m_ + r];
          if (want) gu_[i * m_ + r] -= fm;
        }
    }
    if (grad) {
      grad->assign(size(), 0.0);
      for (std::size_t i = 0; i < dofs_.node_dof.size(); ++i) {
        const std::int64_t dd = dofs_.node_dof[i];
        if (dd < 0) continue;
        for (int r = 0; r < m_; ++r) (*grad)[dd * m_ + r] += gu_[i * m_ + r];
      }
    }
    if (nodal) *nodal = gu_;
    return total;
  }

  /// Gathered lumped force Σ m_i force_i per unknown; J is affine in w through it.
  std::vector<double> force_dofs() const {
    std::vector<double> out(size(), 0.0);
    if (pb_.force.empty()) return out;
    for (std::size_t i = 0; i < dofs_.node_dof.size(); ++i) {
      const std::int64_t dd = dofs_.node_dof[i];
      if (dd < 0) continue;
      for (int r = 0; r < m_; ++r) out[dd * m_ + r] += node_mass_[i] * pb_.force[i * m_ + r];
    }
    return out;
  }

 private:
  const F& f_;
  const Mesh& mesh_;
  std::span<const FieldValue> coeffs_;
  const Problem& pb_;
  const DofMap& dofs_;
  std::span<const double> node_mass_;
  int m_;
  std::vector<double> u_;
  std::vector<double> gu_;
};

/// Per-axis edge weights W with Σ_e |e| Σ_k w_k |∂_k u|² = Σ_edges W (Δu)²,
/// indexed by (lower node)·d + axis.
template <Density F>
std::vector<double> edge_weights(const F& f, const Mesh& mesh, std::span<const FieldValue> coeffs) {
  const int d = mesh.dim();
  std::vector<double> w(mesh.num_nodes() * d, 0.0);
  const double vol = mesh.element_volume();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Mesh::Element el = mesh.element(e);
    for (int i = 0; i < d; ++i) {
      const int axis = el.axes[i];
      double k = 1.0;
      if constexpr (requires { f.stiffness_weight(coeffs[e], axis); })
        k = f.stiffness_weight(coeffs[e], axis);
      w[el.nodes[i] * d + axis] += vol * k / (mesh.h(axis) * mesh.h(axis));
    }
  }
  return w;
}

/// Hessian of Σ_edges W (Δu)² restricted to the free unknowns (one component).
inline sparse::Csr assemble_stiffness(const Mesh& mesh, const DofMap& dofs,
                                      std::span<const double> weights) {
  const int d = mesh.dim();
  sparse::TripletBuilder tb(dofs.ndofs, dofs.ndofs);
  for (std::size_t node = 0; node < mesh.num_nodes(); ++node) {
    for (int axis = 0; axis < d; ++axis) {
      const double wgt = weights[node * d + axis];
      if (wgt == 0.0) continue;
      const std::int64_t a = dofs.node_dof[node];
      const std::int64_t b = dofs.node_dof[node + mesh.stride(axis)];
      if (a == b) continue;
      const double k = 2.0 * wgt;
      if (a >= 0) tb.add(a, a, k);
      if (b >= 0) tb.add(b, b, k);
      if (a >= 0 && b >= 0) {
        tb.add(a, b, -k);
        tb.add(b, a, -k);
      }
    }
  }
  return tb.build();
}

inline double metric_norm(std::span<const double> g, std::span<const double> mass, int m) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * g[i] / mass[i / m];
  return std::sqrt(s);
}

/// Preconditioned CG on K x = b from x = 0; stops when ‖r‖_{M⁻¹} <= tol.
template <class Precond>
int pcg(const sparse::Csr& k, const Precond& precond, std::span<const double> b,
        std::span<double> x, std::span<const double> mass, double tol, int max_iters) {
  const std::size_t n = b.size();
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
  std::fill(x.begin(), x.end(), 0.0);
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
    return s;
  };
  if (metric_norm(r, mass, 1) <= tol) return 0;
  precond(r, z);
  p = z;
  double rz = dot(r, z);
  int it = 0;
  while (it < max_iters) {
    ++it;
    k.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (metric_norm(r, mass, 1) <= tol) break;
    precond(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return it;
}

struct StageOutcome {
  int iterations = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Projected gradient: zero where the bound is active and the gradient pushes outward.
inline double projected_norm(std::span<const double> w, std::span<const double> g,
                             std::span<const double> lb, std::span<const double> mass, int m) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!lb.empty() && w[i] <= lb[i] && g[i] > 0.0) continue;
    s += g[i] * g[i] / mass[i / m];
  }
  return std::sqrt(s);
}

/// Step metric D of the BB iteration: z = D⁻¹g and ⟨s, D s⟩.
struct DiagonalScaling {
  std::span<const double> diag;
  void solve(std::span<const double> g, std::span<double> z) const {
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = g[i] / diag[i];
  }
  double metric(std::span<const double> s) const {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += diag[i] * s[i] * s[i];
    return v;
  }
};

/// D = c·K per component with D⁻¹ applied as one multigrid V-cycle.
struct MultigridScaling {
  const sparse::Csr& k;
  const sparse::Multigrid& mg;
  double c = 1.0;
  int m = 1;
  mutable std::vector<double> a, b;

  void solve(std::span<const double> g, std::span<double> z) const {
    const std::size_t n = g.size() / m;
    a.resize(n);
    b.resize(n);
    for (int r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < n; ++i) a[i] = g[i * m + r];
      mg.apply(a, b);
      for (std::size_t i = 0; i < n; ++i) z[i * m + r] = b[i] / c;
    }
  }
  double metric(std::span<const double> s) const {
    const std::size_t n = s.size() / m;
    a.resize(n);
    b.resize(n);
    double v = 0.0;
    for (int r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < n; ++i) a[i] = s[i * m + r];
      k.multiply(a, b);
      for (std::size_t i = 0; i < n; ++i) v += a[i] * b[i];
    }
    return c * v;
  }
};

/// Scaled projected Barzilai–Borwein iteration with monotone Armijo
/// backtracking. Energy decreases are summed element by element so the
/// acceptance test stays meaningful below the rounding level of the total.
/// Under bounds a non-diagonal metric can stall at non-stationary points, so
/// an iteration whose projected step fails retries with the diagonal
/// `fallback` metric (null: no retry).
template <class Obj, class Scaling>
StageOutcome projected_bb(Obj& obj, std::vector<double>& w, std::span<const double> lb,
                          const Scaling& scaling, const DiagonalScaling* fallback,
                          std::span<const double> mass, int m, double grad_tol, double energy_tol,
                          int max_iters, std::vector<double>* trace) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;
  constexpr int kStallLimit = 50;
  constexpr double kNoise = 64.0 * std::numeric_limits<double>::epsilon();
  const std::size_t n = w.size();
  if (!lb.empty())
    for (std::size_t i = 0; i < n; ++i) w[i] = std::max(w[i], lb[i]);
  const std::vector<double> fd = obj.force_dofs();
  std::vector<double> g, gt, elem, elem_t, wt(n), z(n), s(n);
  double e = obj(w, &g, nullptr, &elem);
  if (trace) trace->push_back(e);
  double alpha = 1.0, alpha_fb = 1.0;
  int stall = 0;
  StageOutcome out;
  for (;;) {
    out.grad_norm = projected_norm(w, g, lb, mass, m);
    if (out.grad_norm <= grad_tol * (1.0 + std::abs(e))) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iters || stall >= kStallLimit) break;
    ++out.iterations;
    bool accepted = false, used_fb = false;
    double change = 0.0;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      used_fb = pass == 1;
      if (used_fb && !fallback) break;
      double& a = used_fb ? alpha_fb : alpha;
      if (used_fb)
        fallback->solve(g, z);
      else
        scaling.solve(g, z);
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        double dec = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          wt[i] = w[i] - a * z[i];
          if (!lb.empty()) wt[i] = std::max(wt[i], lb[i]);
          dec += g[i] * (wt[i] - w[i]);
        }
        if (!(dec < 0.0)) break;
        obj(wt, &gt, nullptr, &elem_t);
        change = 0.0;
        double scale = 0.0;
        for (std::size_t k = 0; k < elem.size(); ++k) {
          change += elem_t[k] - elem[k];
          scale += std::abs(elem[k]);
        }
        for (std::size_t i = 0; i < n; ++i) change -= fd[i] * (wt[i] - w[i]);
        if (std::abs(change) <= kNoise * scale) {
          // below rounding: trapezoidal rule ½⟨g + g_t, s⟩ (exact for quadratics)
          change = 0.0;
          for (std::size_t i = 0; i < n; ++i) change += 0.5 * (g[i] + gt[i]) * (wt[i] - w[i]);
        }
        if (change <= kArmijo * dec) {
          accepted = true;
          break;
        }
        a *= 0.5;
      }
    }
    if (!accepted) break;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = wt[i] - w[i];
      sy += s[i] * (gt[i] - g[i]);
    }
    double& a = used_fb ? alpha_fb : alpha;
    const double sds = used_fb ? fallback->metric(s) : scaling.metric(s);
    a = sy > 0.0 ? sds / sy : 4.0 * a;
    a = std::clamp(a, 1e-12, 1e12);
    std::swap(w, wt);
    std::swap(g, gt);
    std::swap(elem, elem_t);
    e += change;
    if (trace) trace->push_back(e);
    stall = -change <= energy_tol * (1.0 + std::abs(e)) ? stall + 1 : 0;
  }
  out.energy = obj(w, nullptr);
  return out;
}

}  // namespace detail

/// Minimizes the discrete functional of `pb` for precomputed element coefficients.
template <Density F>
SolveResult minimize(const F& f, const Mesh& mesh, std::span<const FieldValue> coeffs,
                     const Problem& pb, const SolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  if (!(pb.lift.mesh == mesh)) throw std::invalid_argument("minimize: lift lives on another mesh");
  if (coeffs.size() != mesh.num_elements())
    throw std::invalid_argument("minimize: one coefficient sample per element required");
  if (!pb.lift.finite()) throw std::invalid_argument("minimize: boundary data must be finite");
  const int m = pb.lift.m;
  if (!pb.force.empty() && pb.force.size() != pb.lift.dofs.size())
    throw std::invalid_argument("minimize: force must have m values per node");
  const bool has_obstacle = !pb.obstacle.empty();
  if (has_obstacle) {
    if (m != 1) throw std::invalid_argument("minimize: obstacles need scalar fields");
    if (pb.boundary != Boundary::Dirichlet)
      throw std::invalid_argument("minimize: obstacles need Dirichlet data");
    if (pb.obstacle.size() != mesh.num_nodes())
      throw std::invalid_argument("minimize: obstacle must have one value per node");
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      if (mesh.on_boundary(i) && pb.lift.dofs[i] < pb.obstacle[i] - 1e-12)
        throw InfeasibleObstacle("boundary data violates the obstacle");
  }

  const detail::DofMap dofs = detail::DofMap::build(mesh, pb.boundary);
  const std::vector<double> node_mass = lumped_mass(mesh);
  std::vector<double> mass(dofs.ndofs, 0.0);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    if (dofs.node_dof[i] >= 0) mass[dofs.node_dof[i]] += node_mass[i];
  for (double& v : mass) v = std::max(v, std::numeric_limits<double>::min());

  const std::size_t nw = dofs.ndofs * static_cast<std::size_t>(m);
  std::vector<double> w(nw, 0.0);
  if (opts.init == SolveOptions::Init::Random) {
    double scale = 0.0;
    for (double v : pb.lift.dofs) scale = std::max(scale, std::abs(v));
    scale = opts.init_scale * (1.0 + scale);
    rng::Stream s(opts.init_seed);
    for (double& v : w) v = s.uniform(-scale, scale);
  }
  std::vector<double> lb;
  if (has_obstacle) {
    lb.assign(nw, 0.0);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      if (dofs.node_dof[i] >= 0) lb[dofs.node_dof[i]] = pb.obstacle[i] - pb.lift.dofs[i];
  }

  bool use_cg = false;
  if constexpr (requires { f.quadratic(); }) use_cg = f.quadratic();
  use_cg = use_cg && !has_obstacle && opts.method != SolveOptions::Method::FirstOrder && nw > 0;
  if (opts.method == SolveOptions::Method::CGLinear && !use_cg)
    throw std::invalid_argument("minimize: CG-linear needs a quadratic density without obstacle");

  SolveResult result{pb.lift, {}, {}};
  SolveReport& rep = result.report;
  std::vector<double>* trace = opts.keep_trace ? &rep.energy_trace : nullptr;
  const std::vector<double> weights = detail::edge_weights(f, mesh, coeffs);
  const sparse::Csr k = detail::assemble_stiffness(mesh, dofs, weights);

  auto make_multigrid = [&]() -> std::optional<sparse::Multigrid> {
    if (opts.preconditioner != SolveOptions::Preconditioner::Multigrid || dofs.ndofs == 0) return std::nullopt;
    std::vector<sparse::Csr> ps;
    detail::DofMap cur = dofs;
    while (cur.n % 2 == 0 && cur.n / 2 >= 2 && cur.ndofs > 64) {
      detail::DofMap coarse = cur.coarsen();
      if (coarse.ndofs == 0) break;
      ps.push_back(cur.prolongation(coarse));
      cur = std::move(coarse);
    }
    return sparse::Multigrid(k, std::move(ps));
  };

  if (use_cg) {
    rep.method = "cg-linear";
    detail::Objective<F> obj(f, mesh, coeffs, pb, dofs, node_mass);
    std::vector<double> inv_diag = k.diagonal();
    for (double& v : inv_diag) v = 1.0 / v;
    const auto mg = make_multigrid();
    auto precond = [&](std::span<const double> r, std::span<double> z) {
      if (mg) {
        mg->apply(r, z);
      } else {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag[i];
      }
    };
    std::vector<double> g, b(dofs.ndofs), x(dofs.ndofs);
    double e = obj(w, &g);
    if (trace) trace->push_back(e);
    constexpr int kRefinements = 6;
    for (int round = 0;; ++round) {
      rep.grad_norm = detail::metric_norm(g, mass, m);
      const double tol = opts.grad_tol * (1.0 + std::abs(e));
      if (rep.grad_norm <= tol) {
        rep.converged = true;
        break;
      }
      if (round >= kRefinements || rep.iterations >= opts.max_iters) break;
      for (int r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < dofs.ndofs; ++i) b[i] = -g[i * m + r];
        rep.iterations += detail::pcg(k, precond, b, x, mass, 0.5 * tol / std::sqrt(double(m)),
                                      opts.max_iters - rep.iterations);
        for (std::size_t i = 0; i < dofs.ndofs; ++i) w[i * m + r] += x[i];
      }
      e = obj(w, &g);
      if (trace) trace->push_back(e);
    }
    rep.final_energy = e;
  } else {
    rep.method = "first-order";
    std::vector<double> diag(nw);
    const std::vector<double> kd = k.diagonal();
    double p_scale = 1.0;
    if constexpr (requires { f.p; }) p_scale = 0.5 * f.p;
    for (std::size_t i = 0; i < nw; ++i) diag[i] = std::max(p_scale * kd[i / m], 1e-300);
    const auto mg = make_multigrid();
    const detail::DiagonalScaling diag_scaling{diag};

    std::vector<F> stages;
    if constexpr (requires { f.with_delta(0.0); f.p; }) {
      if (f.p < 2.0)
        for (double delta : opts.continuation_deltas) stages.push_back(f.with_delta(delta));
    }
    if (stages.empty()) stages.push_back(f);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const bool last = s + 1 == stages.size();
      detail::Objective<F> obj(stages[s], mesh, coeffs, pb, dofs, node_mass);
      const double tol = last ? opts.grad_tol : std::max(opts.grad_tol, 1e-5);
      const int budget = opts.max_iters - rep.iterations;
      const auto out =
          mg ? detail::projected_bb(obj, w, lb, detail::MultigridScaling{k, *mg, p_scale, m, {}, {}},
                                    has_obstacle ? &diag_scaling : nullptr, mass, m, tol, opts.energy_tol,
                                    budget, trace)
             : detail::projected_bb(obj, w, lb, diag_scaling, nullptr, mass, m, tol, opts.energy_tol, budget,
                                    trace);
      rep.iterations += out.iterations;
      rep.final_energy = out.energy;
      rep.grad_norm = out.grad_norm;
      rep.converged = last && out.converged;
    }
  }

  // nodal field and nodal gradient of the density actually minimized last
  std::vector<double> gw;
  auto finish = [&](const F& ff) {
    detail::Objective<F> obj(ff, mesh, coeffs, pb, dofs, node_mass);
    obj(w, &gw);
    obj.expand(w, result.u.dofs);
  };
  if constexpr (requires { f.with_delta(0.0); f.p; }) {
    if (f.p < 2.0 && !opts.continuation_deltas.empty())
      finish(f.with_delta(opts.continuation_deltas.back()));
    else
      finish(f);
  } else {
    finish(f);
  }
  std::vector<double> nodal_grad(result.u.dofs.size(), 0.0);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const std::int64_t dd = dofs.node_dof[i];
    if (dd < 0) continue;
    for (int r = 0; r < m; ++r) nodal_grad[i * m + r] = gw[dd * m + r];
  }
  if (pb.boundary == Boundary::Periodic && pb.force.empty()) {
    for (int r = 0; r < m; ++r) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        num += node_mass[i] * (result.u.dofs[i * m + r] - pb.lift.dofs[i * m + r]);
        den += node_mass[i];
      }
      const double shift = num / den;
      for (std::size_t i = 0; i < mesh.num_nodes(); ++i) result.u.dofs[i * m + r] -= shift;
    }
  }
  result.gradient = std::move(nodal_grad);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Samples the coefficients at element barycenters (x/eps) and minimizes.
template <Density F>
SolveResult minimize(const F& f, const CoefficientField& field, Seed seed, double eps,
                     const Mesh& mesh, const Problem& pb, const SolveOptions& opts) {
  const auto coeffs = sample_coefficients(mesh, field, seed, eps);
  return minimize(f, mesh, std::span<const FieldValue>(coeffs), pb, opts);
}

/// max over free nodes of |min(u − φ, ∂J/∂u / m_i)|; zero certifies the
/// discrete variational inequality.
inline double complementarity_residual(const DiscreteField& u, std::span<const double> obstacle,
                                       std::span<const double> gradient) {
  if (u.m != 1) throw std::invalid_argument("complementarity: scalar fields only");
  if (gradient.size() != u.dofs.size())
    throw std::invalid_argument("complementarity: gradient size mismatch");
  const std::vector<double> mass = lumped_mass(u.mesh);
  double res = 0.0;
  for (std::size_t i = 0; i < u.dofs.size(); ++i) {
    if (u.boundary_mask[i]) continue;
    const double gap = obstacle.empty() ? std::numeric_limits<double>::infinity()
                                        : u.dofs[i] - obstacle[i];
    res = std::max(res, std::abs(std::min(gap, gradient[i] / mass[i])));
  }
  return res;
}

}  // namespace homog

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/fields.hpp"
#include "homog/integrand.hpp"

namespace homog {

/// Uniform Kuhn triangulation of an axis-aligned box with n subdivisions per
/// axis. Every grid cube is split into d! simplices, one per permutation π of
/// the axes: the simplex with corner v0 has vertices v0, v0 + h e_π1,
/// v0 + h e_π1 + h e_π2, ... . Consecutive vertices differ along one axis, so
/// the P1 gradient of a nodal field is a set of axis-aligned edge differences.
class Mesh {
 public:
  /// Vertices of one simplex in path order and the axis of each step.
  struct Element {
    std::array<std::size_t, kMaxDim + 1> nodes{};
    std::array<int, kMaxDim> axes{};
  };

  Mesh(int dim, int n, Point origin, Point lengths)
      : dim_(dim), n_(n), origin_(origin), lengths_(lengths) {
    if (dim < 2 || dim > 3) throw std::invalid_argument("mesh: dimension must be 2 or 3");
    if (n < 1) throw std::invalid_argument("mesh: need at least one subdivision");
    for (int k = 0; k < dim; ++k) {
      if (!(lengths[k] > 0.0)) throw std::invalid_argument("mesh: side lengths must be > 0");
      h_[k] = lengths[k] / n;
    }
    std::size_t stride = 1;
    for (int k = 0; k < dim; ++k) {
      stride_[k] = stride;
      stride *= static_cast<std::size_t>(n) + 1;
    }
    num_nodes_ = stride;
    num_cubes_ = 1;
    for (int k = 0; k < dim; ++k) num_cubes_ *= static_cast<std::size_t>(n);
    perms_ = permutations(dim);
  }

  /// (0, side)^d shifted by `origin`.
  static Mesh cube(int dim, int n, double side, Point origin = {0.0, 0.0, 0.0}) {
    return Mesh(dim, n, origin, {side, side, side});
  }

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  const Point& origin() const noexcept { return origin_; }
  const Point& lengths() const noexcept { return lengths_; }
  double h(int axis) const noexcept { return h_[axis]; }
  std::size_t stride(int axis) const noexcept { return stride_[axis]; }
  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_cubes() const noexcept { return num_cubes_; }
  std::size_t simplices_per_cube() const noexcept { return perms_.size(); }
  std::size_t num_elements() const noexcept { return num_cubes_ * perms_.size(); }

  double volume() const noexcept {
    double v = 1.0;
    for (int k = 0; k < dim_; ++k) v *= lengths_[k];
    return v;
  }
  double element_volume() const noexcept {
    return volume() / static_cast<double>(num_elements());
  }

  std::array<int, kMaxDim> node_coords(std::size_t node) const {
    std::array<int, kMaxDim> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
      c[k] = static_cast<int>(node % (static_cast<std::size_t>(n_) + 1));
      node /= static_cast<std::size_t>(n_) + 1;
    }
    return c;
  }
  std::size_t node_index(const std::array<int, kMaxDim>& c) const {
    std::size_t idx = 0;
    for (int k = 0; k < dim_; ++k) idx += static_cast<std::size_t>(c[k]) * stride_[k];
    return idx;
  }
  Point position(std::size_t node) const {
    const auto c = node_coords(node);
    Point x{0.0, 0.0, 0.0};
    for (int k = 0; k < dim_; ++k) x[k] = origin_[k] + c[k] * h_[k];
    return x;
  }
  bool on_boundary(std::size_t node) const {
    const auto c = node_coords(node);
    for (int k = 0; k < dim_; ++k)
      if (c[k] == 0 || c[k] == n_) return true;
    return false;
  }

  /// Lowest-corner node of grid cube `cube`.
  std::size_t cube_corner(std::size_t cube) const {
    std::size_t node = 0;
    for (int k = 0; k < dim_; ++k) {
      node += (cube % static_cast<std::size_t>(n_)) * stride_[k];
      cube /= static_cast<std::size_t>(n_);
    }
    return node;
  }

  const std::array<int, kMaxDim>& permutation(std::size_t p) const { return perms_[p]; }

  Element element(std::size_t e) const {
    if (e >= num_elements()) throw std::out_of_range("mesh: element index out of range");
    const std::size_t cube = e / perms_.size();
    const auto& perm = perms_[e % perms_.size()];
    Element el;
    el.nodes[0] = cube_corner(cube);
    for (int i = 0; i < dim_; ++i) {
      el.axes[i] = perm[i];
      el.nodes[i + 1] = el.nodes[i] + stride_[perm[i]];
    }
    return el;
  }

  Point barycenter(std::size_t e) const {
    const Element el = element(e);
    Point x = position(el.nodes[0]);
    // coefficient of h e_{π_i} in the vertex average is (d - i)/(d + 1), i = 0..d-1
    for (int i = 0; i < dim_; ++i)
      x[el.axes[i]] += h_[el.axes[i]] * static_cast<double>(dim_ - i) / (dim_ + 1);
    return x;
  }

  friend bool operator==(const Mesh& a, const Mesh& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && a.origin_ == b.origin_ && a.lengths_ == b.lengths_;
  }

 private:
  static std::vector<std::array<int, kMaxDim>> permutations(int dim) {
    std::vector<std::array<int, kMaxDim>> out;
    std::array<int, kMaxDim> p{0, 1, 2};
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.begin() + dim));
    return out;
  }

  int dim_;
  int n_;
  Point origin_;
  Point lengths_;
  std::array<double, kMaxDim> h_{1.0, 1.0, 1.0};
  std::array<std::size_t, kMaxDim> stride_{0, 0, 0};
  std::size_t num_nodes_ = 0;
  std::size_t num_cubes_ = 0;
  std::vector<std::array<int, kMaxDim>> perms_;
};

/// P1 field with m components per node, stored node-major.
struct DiscreteField {
  Mesh mesh;
  int m = 1;
  std::vector<double> dofs;
  std::vector<std::uint8_t> boundary_mask;

  DiscreteField(Mesh mesh_, int m_) : mesh(std::move(mesh_)), m(m_) {
    if (m < 1 || m > 3) throw std::invalid_argument("field: m must be in 1..3");
    dofs.assign(mesh.num_nodes() * static_cast<std::size_t>(m), 0.0);
    boundary_mask.resize(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) boundary_mask[i] = mesh.on_boundary(i);
  }

  using PointFn = std::function<void(const Point&, std::span<double>)>;

  static DiscreteField interpolate(const Mesh& mesh, int m, const PointFn& fn) {
    DiscreteField u(mesh, m);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      fn(mesh.position(i), std::span<double>(u.dofs.data() + i * m, m));
    return u;
  }

  /// Interpolant of the affine map x ↦ ξx (+ b).
  static DiscreteField affine(const Mesh& mesh, const Mat& xi) {
    return interpolate(mesh, xi.rows, [&](const Point& x, std::span<double> out) {
      for (int r = 0; r < xi.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < xi.cols; ++c) s += xi(r, c) * x[c];
        out[r] = s;
      }
    });
  }

  double at(std::size_t node, int comp) const { return dofs[node * m + comp]; }
  std::span<const double> node_values(std::size_t node) const {
    return {dofs.data() + node * m, static_cast<std::size_t>(m)};
  }

  void check_compatible(const DiscreteField& other) const {
    if (!(mesh == other.mesh) || m != other.m)
      throw std::invalid_argument("fields live on different meshes");
  }

  bool finite() const {
    for (double v : dofs)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Gradient of the P1 interpolant on one simplex (constant there).
inline Mat gradient_on_element(const Mesh& mesh, std::span<const double> nodal, int m,
                               std::size_t e) {
  const Mesh::Element el = mesh.element(e);
  Mat g(m, mesh.dim());
  for (int i = 0; i < mesh.dim(); ++i) {
    const int axis = el.axes[i];
    const double inv_h = 1.0 / mesh.h(axis);
    for (int r = 0; r < m; ++r)
      g(r, axis) = (nodal[el.nodes[i + 1] * m + r] - nodal[el.nodes[i] * m + r]) * inv_h;
  }
  return g;
}

inline Mat gradient_on_element(const DiscreteField& u, std::size_t e) {
  return gradient_on_element(u.mesh, u.dofs, u.m, e);
}

/// Coefficients sampled at element barycenters, x ↦ field(x / eps).
inline std::vector<FieldValue> sample_coefficients(const Mesh& mesh,
                                                   const CoefficientField& field, Seed seed,
                                                   double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (field.dim() != mesh.dim()) throw std::invalid_argument("field/mesh dimension mismatch");
  std::vector<FieldValue> out(mesh.num_elements());
  for (std::size_t e = 0; e < out.size(); ++e) {
    Point x = mesh.barycenter(e);
    for (int k = 0; k < mesh.dim(); ++k) x[k] /= eps;
    out[e] = field.at(seed, x);
  }
  return out;
}

/// Σ_e |e| f(A_e, Λ_e, ∇u|_e) with precomputed element coefficients.
inline double energy(const DiscreteField& u, const Integrand& f,
                     std::span<const FieldValue> coeffs) {
  if (!u.finite()) throw std::invalid_argument("energy: non-finite dofs");
  const double vol = u.mesh.element_volume();
  double total = 0.0;
  for (std::size_t e = 0; e < u.mesh.num_elements(); ++e) {
    const Mat g = gradient_on_element(u, e);
    total += vol * eval(f, coeffs[e].a, coeffs[e].lambda, g);
  }
  return total;
}

inline double energy(const DiscreteField& u, const Integrand& f, const CoefficientField& field,
                     Seed seed, double eps) {
  const auto coeffs = sample_coefficients(u.mesh, field, seed, eps);
  return energy(u, f, coeffs);
}

enum class NormKind { L1, Lp, LdOverDm1, W11 };

/// Composite midpoint quadrature (P1 value at the barycenter is the vertex mean).
inline double norm(const DiscreteField& u, NormKind which, double p = 2.0) {
  const Mesh& mesh = u.mesh;
  const int d = mesh.dim();
  const double vol = mesh.element_volume();
  double q = 1.0;
  if (which == NormKind::Lp) q = p;
  if (which == NormKind::LdOverDm1) q = static_cast<double>(d) / (d - 1);
  double acc = 0.0;
  double grad_acc = 0.0;
  std::array<double, 3> mid{};
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Mesh::Element el = mesh.element(e);
    mid.fill(0.0);
    for (int i = 0; i <= d; ++i)
      for (int r = 0; r < u.m; ++r) mid[r] += u.dofs[el.nodes[i] * u.m + r];
    double s2 = 0.0;
    for (int r = 0; r < u.m; ++r) {
      mid[r] /= (d + 1);
      s2 += mid[r] * mid[r];
    }
    const double s = std::sqrt(s2);
    acc += vol * (q == 1.0 ? s : std::pow(s, q));
    if (which == NormKind::W11) grad_acc += vol * gradient_on_element(u, e).frobenius();
  }
  if (which == NormKind::W11) return acc + grad_acc;
  return q == 1.0 ? acc : std::pow(acc, 1.0 / q);
}

/// Row sums of the P1 mass matrix.
inline std::vector<double> lumped_mass(const Mesh& mesh) {
  std::vector<double> mass(mesh.num_nodes(), 0.0);
  const double share = mesh.element_volume() / (mesh.dim() + 1);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Mesh::Element el = mesh.element(e);
    for (int i = 0; i <= mesh.dim(); ++i) mass[el.nodes[i]] += share;
  }
  return mass;
}

/// P1 interpolation from a mesh to its uniform refinement (2n subdivisions).
/// A fine node 2I + s (s ∈ {0,1}^d) is the midpoint of the Kuhn edge I → I + s.
inline DiscreteField prolongate(const DiscreteField& coarse) {
  const Mesh& cm = coarse.mesh;
  const Mesh fm(cm.dim(), 2 * cm.n(), cm.origin(), cm.lengths());
  DiscreteField fine(fm, coarse.m);
  for (std::size_t i = 0; i < fm.num_nodes(); ++i) {
    const auto c = fm.node_coords(i);
    std::array<int, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < cm.dim(); ++k) {
      lo[k] = c[k] / 2;
      hi[k] = lo[k] + (c[k] % 2);
    }
    const std::size_t a = cm.node_index(lo), b = cm.node_index(hi);
    for (int r = 0; r < coarse.m; ++r)
      fine.dofs[i * coarse.m + r] = 0.5 * (coarse.at(a, r) + coarse.at(b, r));
  }
  return fine;
}

}  // namespace homog

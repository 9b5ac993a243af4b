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

#include "homog/parallel.hpp"
#include "homog/solver.hpp"

namespace homog {

/// Cell sizes for the t → ∞ limit at fixed physical resolution.
struct CellSchedule {
  std::vector<double> t_values;
  double nodes_per_unit = 8.0;
  int seeds_per_t = 8;
  std::uint64_t base_seed = 1;

  /// Mesh subdivisions of the cell (0,t)^d: round(t · nodes_per_unit).
  int resolution(double t) const {
    return std::max(1, static_cast<int>(std::lround(t * nodes_per_unit)));
  }
  Seed seed(int k) const { return Seed{base_seed + static_cast<std::uint64_t>(k)}; }

  void validate() const {
    if (t_values.empty()) throw std::invalid_argument("schedule: t_values must be non-empty");
    for (std::size_t i = 0; i < t_values.size(); ++i) {
      if (!(t_values[i] > 0.0)) throw std::invalid_argument("schedule: t must be > 0");
      if (i > 0 && !(t_values[i] > t_values[i - 1]))
        throw std::invalid_argument("schedule: t_values must increase");
    }
    if (!(nodes_per_unit > 0.0)) throw std::invalid_argument("schedule: nodes_per_unit must be > 0");
    if (seeds_per_t < 1) throw std::invalid_argument("schedule: seeds_per_t must be >= 1");
  }
};

struct CellOptions {
  SolveOptions solve;
  /// Relative slack allowed in the per-realization sandwich.
  double sandwich_rtol = 1e-6;
  /// Linear extrapolation in 1/t through the two largest cell sizes.
  bool extrapolate = false;
  bool keep_field = false;
  int threads = 1;
};

/// One solved cell problem, energies normalized by t^d.
struct CellResult {
  double t = 0.0;
  int n = 0;
  Seed seed{};
  Boundary boundary = Boundary::Dirichlet;
  double mu = 0.0;            ///< μ̂_ξ / t^d
  double affine_bound = 0.0;  ///< cell average of |ξA|^p + Λ
  double lower_bound = 0.0;   ///< c (avg |A⁻¹|^{p/(p-1)})^{1-p} |ξ|^p − regularization slack
  bool upper_ok = false;
  bool lower_ok = false;
  SolveReport report;
  std::optional<DiscreteField> u;

  bool converged() const noexcept { return report.converged; }
  bool sandwich_ok() const noexcept { return upper_ok && lower_ok; }
};

namespace detail {

inline CellResult solve_cell(const Integrand& f, const Mat& xi, const CoefficientField& field,
                             Seed seed, double t, int n, Boundary boundary,
                             const CellOptions& opts) {
  if (!(t > 0.0)) throw std::invalid_argument("cell: t must be > 0");
  if (xi.rows != f.m || xi.cols != f.d || !xi.finite())
    throw std::invalid_argument("cell: ξ must be a finite m×d matrix");
  if (field.dim() != f.d) throw std::invalid_argument("cell: field/integrand dimension mismatch");
  const Mesh mesh = Mesh::cube(f.d, n, t);
  const auto coeffs = sample_coefficients(mesh, field, seed, 1.0);
  Problem pb{DiscreteField::affine(mesh, xi), boundary, {}, {}};
  SolveResult res = minimize(f, mesh, std::span<const FieldValue>(coeffs), pb, opts.solve);

  const double vol = mesh.volume();
  const double q = f.p / (f.p - 1.0);
  double upper = 0.0, inv = 0.0;
  for (const FieldValue& c : coeffs) {
    upper += std::pow(xi.times_diag(c.a).frobenius(), f.p) + c.lambda;
    inv += std::pow(inverse_op_norm(c, f.d), q);
  }
  upper /= static_cast<double>(coeffs.size());
  inv /= static_cast<double>(coeffs.size());

  CellResult out;
  out.t = t;
  out.n = n;
  out.seed = seed;
  out.boundary = boundary;
  out.mu = res.report.final_energy / vol;
  out.affine_bound = upper;
  out.lower_bound = f.c() * std::pow(inv, 1.0 - f.p) * std::pow(xi.frobenius(), f.p) -
                    f.lower_slack();
  const double tol = opts.sandwich_rtol;
  out.upper_ok = out.mu <= upper + tol * std::abs(upper) + 1e-14;
  out.lower_ok = out.mu >= out.lower_bound - tol * std::abs(out.lower_bound) - 1e-14;
  out.report = std::move(res.report);
  if (opts.keep_field) out.u = std::move(res.u);
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStd mean_stderr(const std::vector<double>& x) {
  MeanStd r;
  if (x.empty()) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / static_cast<double>(x.size());
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (x.size() < 2 || *lo == *hi) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.stderr_ = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return r;
}

}  // namespace detail

/// Dirichlet cell problem on (0,t)^d with u = ξx on the boundary.
inline CellResult cell_dirichlet(const Mat& xi, const CoefficientField& field, Seed seed, double t,
                                 int n, const Integrand& f, const CellOptions& opts = {}) {
  return detail::solve_cell(f, xi, field, seed, t, n, Boundary::Dirichlet, opts);
}

/// Periodic cell problem: ξx plus a periodic perturbation on the torus (0,t)^d.
inline CellResult cell_periodic(const Mat& xi, const CoefficientField& field, Seed seed, double t,
                                int n, const Integrand& f, const CellOptions& opts = {}) {
  return detail::solve_cell(f, xi, field, seed, t, n, Boundary::Periodic, opts);
}

/// All (t, seed) solves of a schedule, ordered by t then seed index.
inline std::vector<CellResult> cell_sweep(const Mat& xi, const CoefficientField& field,
                                          const Integrand& f, const CellSchedule& schedule,
                                          const CellOptions& opts = {},
                                          Boundary boundary = Boundary::Dirichlet) {
  schedule.validate();
  const std::size_t nt = schedule.t_values.size();
  const std::size_t ns = static_cast<std::size_t>(schedule.seeds_per_t);
  std::vector<CellResult> out(nt * ns);
  parallel_for(out.size(), opts.threads, [&](std::size_t i) {
    const double t = schedule.t_values[i / ns];
    out[i] = detail::solve_cell(f, xi, field, schedule.seed(static_cast<int>(i % ns)), t,
                                schedule.resolution(t), boundary, opts);
  });
  return out;
}

struct TracePoint {
  double t = 0.0;
  int n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct DivergenceDetected : std::runtime_error {
  std::vector<TracePoint> trace;
  DivergenceDetected(const std::string& what, std::vector<TracePoint> tr)
      : std::runtime_error(what), trace(std::move(tr)) {}
};

struct FhomEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool extrapolated = false;
  /// Successive differences of the per-t means shrink.
  bool stabilizing = true;
  std::vector<TracePoint> trace;
  std::vector<CellResult> samples;
};

/// Per-t ensemble means of a sweep produced by cell_sweep.
inline std::vector<TracePoint> sweep_trace(const std::vector<CellResult>& samples,
                                           const CellSchedule& schedule) {
  const std::size_t ns = static_cast<std::size_t>(schedule.seeds_per_t);
  std::vector<TracePoint> trace;
  for (std::size_t j = 0; j < schedule.t_values.size(); ++j) {
    std::vector<double> mu;
    for (std::size_t k = 0; k < ns; ++k) mu.push_back(samples[j * ns + k].mu);
    const auto ms = detail::mean_stderr(mu);
    trace.push_back({schedule.t_values[j], schedule.resolution(schedule.t_values[j]), ms.mean,
                     ms.stderr_});
  }
  return trace;
}

/// Growth factor of the per-t means per doubling of t, one per consecutive pair.
inline std::vector<double> doubling_ratios(const std::vector<TracePoint>& trace) {
  std::vector<double> r;
  for (std::size_t j = 1; j < trace.size(); ++j) {
    const double steps = std::log2(trace[j].t / trace[j - 1].t);
    r.push_back(std::pow(trace[j].mean / trace[j - 1].mean, 1.0 / steps));
  }
  return r;
}

/// f̂_hom(ξ) from the Dirichlet multi-cell formula over a schedule.
inline FhomEstimate estimate_fhom(const Mat& xi, const CoefficientField& field, const Integrand& f,
                                  const CellSchedule& schedule, const CellOptions& opts = {}) {
  schedule.validate();
  if (opts.extrapolate && schedule.t_values.size() < 2)
    throw std::invalid_argument("estimate_fhom: extrapolation needs two cell sizes");
  FhomEstimate est;
  est.samples = cell_sweep(xi, field, f, schedule, opts);
  est.trace = sweep_trace(est.samples, schedule);
  const std::size_t nt = est.trace.size();
  for (std::size_t j = 2; j < nt; ++j) {
    const double prev = std::abs(est.trace[j - 1].mean - est.trace[j - 2].mean);
    const double cur = std::abs(est.trace[j].mean - est.trace[j - 1].mean);
    if (cur > prev) est.stabilizing = false;
  }
  if (nt >= 3) {
    const auto r = doubling_ratios(est.trace);
    if (r[nt - 2] >= 2.0 && r[nt - 3] >= 2.0)
      throw DivergenceDetected("estimate_fhom: cell means grow without bound", est.trace);
  }
  if (!opts.extrapolate) {
    est.value = est.trace.back().mean;
    est.stderr_ = est.trace.back().stderr_;
    return est;
  }
  // per-seed combination (t2 μ2 − t1 μ1) / (t2 − t1), seeds shared across t
  const std::size_t ns = static_cast<std::size_t>(schedule.seeds_per_t);
  const double t1 = schedule.t_values[nt - 2], t2 = schedule.t_values[nt - 1];
  std::vector<double> comb(ns);
  for (std::size_t k = 0; k < ns; ++k)
    comb[k] = (t2 * est.samples[(nt - 1) * ns + k].mu - t1 * est.samples[(nt - 2) * ns + k].mu) /
              (t2 - t1);
  const auto ms = detail::mean_stderr(comb);
  est.value = ms.mean;
  est.stderr_ = ms.stderr_;
  est.extrapolated = true;
  return est;
}

struct MomentDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundConstants {
  double c0 = 0.0;  ///< c Ê[|A⁻¹|^{p/(p-1)}]^{1-p}
  double C0 = 0.0;  ///< max over coordinate directions of Ê[|η A|^p]
  double C1 = 0.0;  ///< Ê[Λ]
  /// max of Ê[|ηA|^p] over random unit η; never above C0 for diagonal A.
  double C0_sphere = 0.0;
  MomentEstimate moments;
};

/// Growth constants of f_hom estimated from `n_samples` lattice cells.
inline BoundConstants bound_constants(const CoefficientField& field, const Integrand& f,
                                      std::size_t n_samples, Seed seed = Seed{0}) {
  if (field.dim() != f.d) throw std::invalid_argument("bound_constants: dimension mismatch");
  BoundConstants bc;
  bc.moments = estimate_moments(field, seed, f.p, n_samples);
  if (bc.moments.flags.any())
    throw MomentDivergence("bound_constants: a moment estimate is not stable");
  const int d = f.d;
  const Point s = field.shift(seed);
  std::vector<FieldValue> samples(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Point x{0.5, 0.5, 0.5};
    for (int k = 0; k < d; ++k) x[k] += s[k];
    x[0] += static_cast<double>(i);
    samples[i] = field.at(seed, x);
  }
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (const auto& v : samples) acc += std::pow(v.a[k], f.p);
    bc.C0 = std::max(bc.C0, acc / static_cast<double>(n_samples));
  }
  rng::Stream rs(seed.value ^ 0x5fe7e5ULL);
  constexpr int kDirections = 64;
  for (int j = 0; j < kDirections; ++j) {
    Mat eta(f.m, d);
    for (int r = 0; r < f.m; ++r)
      for (int c = 0; c < d; ++c) eta(r, c) = rs.uniform(-1.0, 1.0);
    const double nrm = eta.frobenius();
    if (!(nrm > 0.0)) continue;
    eta = (1.0 / nrm) * eta;
    double acc = 0.0;
    for (const auto& v : samples) acc += std::pow(eta.times_diag(v.a).frobenius(), f.p);
    bc.C0_sphere = std::max(bc.C0_sphere, acc / static_cast<double>(n_samples));
  }
  bc.c0 = f.c() * std::pow(bc.moments.a_inv, 1.0 - f.p);
  bc.C1 = bc.moments.lambda;
  return bc;
}

struct TableEntry {
  Mat xi;
  double value = 0.0;
  double stderr_ = 0.0;
  std::vector<TracePoint> trace;
};

/// Sampled ξ ↦ f̂_hom(ξ) with the growth constants used for the band check.
struct HomogenizedTable {
  double p = 2.0;
  /// Regularization slack δ^p subtracted from the lower band (0 when unregularized).
  double lower_slack = 0.0;
  BoundConstants constants;
  std::vector<TableEntry> entries;

  /// ĉ₀|ξ|^p − kσ <= f̂ <= Ĉ₀|ξ|^p + Ĉ₁ + kσ, with `rtol` for solver and rounding error.
  bool in_band(const TableEntry& e, double rtol = 1e-8, double k_sigma = 3.0) const {
    const double s = std::pow(e.xi.frobenius(), p);
    const double lo = constants.c0 * s - lower_slack;
    const double hi = constants.C0 * s + constants.C1;
    return e.value >= lo - k_sigma * e.stderr_ - rtol * std::abs(lo) &&
           e.value <= hi + k_sigma * e.stderr_ + rtol * std::abs(hi);
  }

  std::vector<std::size_t> band_violations(double k_sigma = 3.0) const {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (!in_band(entries[i], 1e-8, k_sigma)) bad.push_back(i);
    return bad;
  }

  /// Index of the entry at ξ (entrywise within `tol`).
  std::optional<std::size_t> find(const Mat& xi, double tol = 1e-12) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Mat& a = entries[i].xi;
      if (a.rows != xi.rows || a.cols != xi.cols) continue;
      bool same = true;
      for (int r = 0; r < a.rows && same; ++r)
        for (int c = 0; c < a.cols && same; ++c) same = std::abs(a(r, c) - xi(r, c)) <= tol;
      if (same) return i;
    }
    return std::nullopt;
  }
};

/// Estimates f̂_hom on each ξ; all entries share the schedule's seeds.
inline HomogenizedTable build_table(const std::vector<Mat>& xis, const CoefficientField& field,
                                    const Integrand& f, const CellSchedule& schedule,
                                    const BoundConstants& constants, const CellOptions& opts = {}) {
  HomogenizedTable table;
  table.p = f.p;
  table.lower_slack = f.lower_slack();
  table.constants = constants;
  for (const Mat& xi : xis) {
    const FhomEstimate e = estimate_fhom(xi, field, f, schedule, opts);
    table.entries.push_back({xi, e.value, e.stderr_, e.trace});
  }
  return table;
}

/// ξ grid {−r, …, r}^{m×d} with `k` points per entry (k odd keeps 0 and midpoints).
inline std::vector<Mat> xi_grid(int m, int d, int k, double r) {
  if (k < 2) throw std::invalid_argument("xi_grid: need at least 2 points per entry");
  const int entries = m * d;
  std::vector<Mat> out;
  std::vector<int> idx(entries, 0);
  for (;;) {
    Mat xi(m, d);
    for (int e = 0; e < entries; ++e) xi(e / d, e % d) = -r + 2.0 * r * idx[e] / (k - 1);
    out.push_back(xi);
    int e = 0;
    while (e < entries && ++idx[e] == k) idx[e++] = 0;
    if (e == entries) break;
  }
  return out;
}

struct ConvexityViolation {
  std::size_t i = 0, j = 0, mid = 0;
  double excess = 0.0;  ///< f̂(mid) − ½(f̂_i + f̂_j) − kσ
};

struct ConvexityReport {
  std::size_t pairs_checked = 0;
  std::vector<ConvexityViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Midpoint convexity over every pair of table entries whose midpoint is tabulated.
inline ConvexityReport convexity_scan(const HomogenizedTable& table, double k_sigma = 3.0) {
  ConvexityReport rep;
  const auto& E = table.entries;
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = i + 1; j < E.size(); ++j) {
      if (E[i].xi.rows != E[j].xi.rows || E[i].xi.cols != E[j].xi.cols) continue;
      const auto k = table.find(0.5 * (E[i].xi + E[j].xi), 1e-9);
      if (!k || *k == i || *k == j) continue;
      ++rep.pairs_checked;
      const double sigma = std::sqrt(E[*k].stderr_ * E[*k].stderr_ +
                                     0.25 * E[i].stderr_ * E[i].stderr_ +
                                     0.25 * E[j].stderr_ * E[j].stderr_);
      const double excess = E[*k].value - 0.5 * (E[i].value + E[j].value) - k_sigma * sigma;
      if (excess > 0.0) rep.violations.push_back({i, j, *k, excess});
    }
  return rep;
}

struct SignalToNoise : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GradientEstimate {
  Mat grad;
  Mat error;          ///< half-width of each entry from the estimator stderr
  double norm = 0.0;  ///< |∇̂f_hom(ξ)|
  double bound = 0.0; ///< Ĉ (1 + |ξ|^{p-1}) with Ĉ = 2p max(Ĉ₀, Ĉ₁)
  bool within_bound = false;
};

/// Value and stderr of f̂_hom at ξ.
using FhomFn = std::function<std::pair<double, double>(const Mat&)>;

/// Central-difference gradient of f̂_hom and the growth check
/// |∇̂f_hom(ξ)| <= Ĉ(1 + |ξ|^{p-1}). Throws SignalToNoise when the statistical
/// error of a difference quotient exceeds a quarter of the bound.
inline GradientEstimate dfhom(const FhomFn& fhom, const Mat& xi, double h, double p,
                              const BoundConstants& bc) {
  if (!(h > 0.0)) throw std::invalid_argument("dfhom: step must be > 0");
  GradientEstimate g;
  g.grad = Mat(xi.rows, xi.cols);
  g.error = Mat(xi.rows, xi.cols);
  g.bound = 2.0 * p * std::max(bc.C0, bc.C1) * (1.0 + std::pow(xi.frobenius(), p - 1.0));
  double err2 = 0.0;
  for (int r = 0; r < xi.rows; ++r)
    for (int c = 0; c < xi.cols; ++c) {
      Mat plus = xi, minus = xi;
      plus(r, c) += h;
      minus(r, c) -= h;
      const auto [fp, sp] = fhom(plus);
      const auto [fm, sm] = fhom(minus);
      g.grad(r, c) = (fp - fm) / (2.0 * h);
      g.error(r, c) = (sp + sm) / (2.0 * h);
      if (g.error(r, c) > 0.25 * g.bound)
        throw SignalToNoise("dfhom: step too small for the estimator's statistical error");
      err2 += g.error(r, c) * g.error(r, c);
    }
  g.norm = g.grad.frobenius();
  g.within_bound = g.norm <= g.bound + 3.0 * std::sqrt(err2);
  return g;
}

/// Table version: ξ ± h e_rc must be tabulated.
inline GradientEstimate dfhom(const HomogenizedTable& table, const Mat& xi, double h) {
  auto lookup = [&](const Mat& x) {
    const auto k = table.find(x, 1e-9);
    if (!k) throw std::invalid_argument("dfhom: ξ ± h e_rc is not in the table");
    return std::make_pair(table.entries[*k].value, table.entries[*k].stderr_);
  };
  return dfhom(FhomFn(lookup), xi, h, table.p, table.constants);
}

enum class Verdict { BlowUp, Collapse, Stable, Unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::BlowUp:
      return "BlowUp";
    case Verdict::Collapse:
      return "Collapse";
    case Verdict::Stable:
      return "Stable";
    case Verdict::Unknown:
      return "Unknown";
  }
  return "?";
}

/// Verdict from the per-doubling growth factors (at least two).
inline Verdict classify_trend(const std::vector<double>& ratios, const DivergenceFlags& flags) {
  if (ratios.size() < 2) throw std::invalid_argument("classify_trend: need two growth factors");
  const double r1 = ratios[ratios.size() - 2], r2 = ratios.back();
  if (r1 >= 2.0 && r2 >= 2.0) return Verdict::BlowUp;
  if (r1 <= 0.5 && r2 <= 0.5) return flags.a_p && flags.a_inv ? Verdict::Unknown : Verdict::Collapse;
  return Verdict::Stable;
}

struct DegeneracyReport {
  Verdict verdict = Verdict::Stable;
  std::vector<TracePoint> trace;
  std::vector<double> ratios;  ///< per-doubling growth factors of the per-t means
  MomentEstimate moments;
  std::vector<CellResult> samples;
};

/// Classifies the t-trend of the cell means: BlowUp when the means grow by at
/// least 2 per doubling of t on each of the last two steps, Collapse when they
/// shrink by at least 2, Stable otherwise. A collapse seen while both E|A|^p and
/// E|A⁻¹|^{p/(p-1)} look infinite is reported as Unknown.
///
/// Periodic cells are the default: with affine Dirichlet data the boundary
/// layer alone costs O(t^{d-1}), so Dirichlet means cannot fall faster than
/// 1/t and a collapse sits exactly on the factor-2 threshold.
inline DegeneracyReport degeneracy_probe(const CoefficientField& field, const Integrand& f,
                                         const Mat& xi, const CellSchedule& schedule,
                                         const CellOptions& opts = {},
                                         Boundary boundary = Boundary::Periodic,
                                         std::size_t moment_cells = std::size_t(1) << 16) {
  schedule.validate();
  if (schedule.t_values.size() < 3)
    throw std::invalid_argument("degeneracy_probe: need at least 3 cell sizes");
  DegeneracyReport rep;
  rep.moments = estimate_moments(field, schedule.seed(0), f.p, moment_cells);
  rep.samples = cell_sweep(xi, field, f, schedule, opts, boundary);
  rep.trace = sweep_trace(rep.samples, schedule);
  rep.ratios = doubling_ratios(rep.trace);
  rep.verdict = classify_trend(rep.ratios, rep.moments.flags);
  return rep;
}

struct SubadditivityCheck {
  double whole = 0.0;  ///< μ̂_ξ(tQ), unnormalized
  double parts = 0.0;  ///< Σ over the 2^d sub-cells
  bool holds = false;
};

/// μ̂_ξ(tQ) <= Σ μ̂_ξ(sub-cells) for the partition of (0,t)^d into 2^d
/// congruent cubes; n must be even so the sub-meshes nest.
inline SubadditivityCheck subadditivity(const Mat& xi, const CoefficientField& field, Seed seed,
                                        double t, int n, const Integrand& f,
                                        const SolveOptions& opts = {}, double rtol = 1e-6) {
  if (n % 2 != 0) throw std::invalid_argument("subadditivity: n must be even");
  auto solve_on = [&](const Mesh& mesh) {
    const auto coeffs = sample_coefficients(mesh, field, seed, 1.0);
    Problem pb{DiscreteField::affine(mesh, xi), Boundary::Dirichlet, {}, {}};
    return minimize(f, mesh, std::span<const FieldValue>(coeffs), pb, opts).report.final_energy;
  };
  SubadditivityCheck out;
  out.whole = solve_on(Mesh::cube(f.d, n, t));
  for (int corner = 0; corner < (1 << f.d); ++corner) {
    Point origin{0.0, 0.0, 0.0};
    for (int k = 0; k < f.d; ++k) origin[k] = (corner >> k) & 1 ? 0.5 * t : 0.0;
    out.parts += solve_on(Mesh::cube(f.d, n / 2, 0.5 * t, origin));
  }
  out.holds = out.whole <= out.parts + rtol * std::abs(out.parts) + 1e-14;
  return out;
}

}  // namespace homog

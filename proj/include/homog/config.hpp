#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homog/cell.hpp"
#include "homog/ergodic.hpp"
#include "homog/pde.hpp"

namespace homog {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

/// Schema violation in an experiment config.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File system failure while reading a config or writing artifacts.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Homogenize, Degeneracy, PdeConvergence, Obstacle, Ergodic };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Homogenize:
      return "homogenize";
    case ExperimentKind::Degeneracy:
      return "degeneracy";
    case ExperimentKind::PdeConvergence:
      return "pde_convergence";
    case ExperimentKind::Obstacle:
      return "obstacle";
    case ExperimentKind::Ergodic:
      return "ergodic";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment(const std::string& s) {
  for (auto k : {ExperimentKind::Homogenize, ExperimentKind::Degeneracy, ExperimentKind::PdeConvergence,
                 ExperimentKind::Obstacle, ExperimentKind::Ergodic})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

/// Pass/fail thresholds; every default is the acceptance value.
struct Tolerances {
  double oracle_rtol = 0.05;        ///< |f̂ − oracle| / oracle
  double band_sigma = 3.0;          ///< growth band slack in stderr units
  double sandwich_rtol = 1e-6;      ///< per-realization sandwich
  double periodic_sigma = 2.0;      ///< f̂_per <= f̂_dir + k·stderr
  double convexity_sigma = 3.0;     ///< midpoint convexity slack
  double complementarity = 1e-6;    ///< obstacle complementarity residual
  double inactive_obstacle = 1e-10; ///< nodewise gap to the unconstrained solution
  double init_agreement = 1e-8;     ///< relative energy gap, zero vs random init
  double ensemble_sigma = 3.0;      ///< ergodic average vs closed-form moment
  double trend_factor = 0.5;        ///< weak-L¹ final / initial deviation
  double abs_tol_rel = 0.05;        ///< weak-L¹ final deviation / |E|
};

struct OracleSpec {
  Mat xi;
  double value = 0.0;
};

struct HomogenizeSpec {
  CellSchedule schedule;
  bool extrapolate = true;
  std::vector<Mat> xis;
  std::optional<std::array<double, 2>> grid;  ///< (k, r) for xi_grid; adds convexity and gradient checks
  double gradient_step = 0.0;                 ///< 0 disables the gradient check
  bool periodic_compare = false;
  std::size_t moment_samples = 1 << 16;
  std::vector<OracleSpec> oracles;
};

struct DegeneracySpec {
  CellSchedule schedule;
  Boundary boundary = Boundary::Periodic;
  Mat xi;
  std::optional<Verdict> expect;
  std::size_t moment_cells = 1 << 16;
};

struct PdeSpec {
  PDEProblem problem;
  HomogenizedLaw law;
  int n_fine = 64;
  int seeds = 1;
  bool random_init_check = false;
  std::optional<double> max_final_error;
  // obstacle experiment
  bool inactive_check = false;
};

struct ErgodicSpec {
  std::vector<Observable> observables;
  std::vector<double> exact;  ///< closed-form E[g] per observable
  Box region{};
  double average_eps = 1.0 / 64;
  int average_seeds = 100;
  int per_period = 4;
  BorelProbe probe;
  std::uint64_t probe_seed = 11;
  std::vector<double> probe_eps;
  int probe_seeds = 8;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ExperimentKind experiment = ExperimentKind::Homogenize;
  std::string name;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  int threads = 1;
  CoefficientField field = CoefficientField::constant(2, {1.0, 1.0, 1.0});
  Integrand integrand = Integrand::power_law(2.0, 1, 2);
  SolveOptions solve;
  Tolerances tol;
  HomogenizeSpec homogenize;
  DegeneracySpec degeneracy;
  PdeSpec pde;
  ErgodicSpec ergodic;
  json source;  ///< parsed document, for hashing
};

namespace config_detail {

/// Rejects keys outside `allowed` so typos fail loudly.
inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  const std::string w = where + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(w + ": expected a boolean");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(w + ": expected a string");
    return v.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(w + ": expected an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
      throw ConfigError(w + ": must be non-negative");
    return v.get<T>();
  } else {
    return static_cast<T>(num(v, w));
  }
}

inline std::vector<double> num_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline const json& required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  return j.at(key);
}

/// Scalar law: {"kind": "constant"|"discrete"|"pareto"|"inverse_pareto", ...}.
inline ScalarLaw parse_law(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "value", "atoms", "probs", "alpha", "scale"});
  const std::string kind = get_or<std::string>(j, "kind", "", where);
  try {
    if (kind == "constant") return ScalarLaw::constant(num(required(j, "value", where), where + ".value"));
    if (kind == "discrete")
      return ScalarLaw::discrete(num_list(required(j, "atoms", where), where + ".atoms"),
                                 num_list(required(j, "probs", where), where + ".probs"));
    if (kind == "pareto")
      return ScalarLaw::pareto(num(required(j, "alpha", where), where + ".alpha"),
                               get_or<double>(j, "scale", 1.0, where));
    if (kind == "inverse_pareto")
      return ScalarLaw::inverse_pareto(num(required(j, "alpha", where), where + ".alpha"),
                                       get_or<double>(j, "scale", 1.0, where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ".kind: unknown law '" + kind + "'");
}

inline CoefficientField parse_field(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "dim", "diag", "lambda", "a", "lambda_value"});
  const std::string kind = get_or<std::string>(j, "kind", "", where);
  const int dim = get_or<int>(j, "dim", 2, where);
  if (dim < 1 || dim > kMaxDim) throw ConfigError(where + ".dim: must be 1..3");
  try {
    if (kind == "constant") {
      std::array<double, kMaxDim> a{1.0, 1.0, 1.0};
      if (j.contains("a")) {
        const auto v = num_list(j.at("a"), where + ".a");
        if (v.size() != 1 && v.size() != static_cast<std::size_t>(dim))
          throw ConfigError(where + ".a: need 1 or dim entries");
        for (int k = 0; k < dim; ++k) a[k] = v[v.size() == 1 ? 0 : k];
      }
      return CoefficientField::constant(dim, a, get_or<double>(j, "lambda_value", 0.0, where));
    }
    if (kind == "laminate" || kind == "checkerboard") {
      const json& diag = required(j, "diag", where);
      if (!diag.is_array() || diag.empty()) throw ConfigError(where + ".diag: expected a non-empty array of laws");
      std::vector<ScalarLaw> laws;
      for (std::size_t i = 0; i < diag.size(); ++i)
        laws.push_back(parse_law(diag[i], where + ".diag[" + std::to_string(i) + "]"));
      const ScalarLaw lam = j.contains("lambda") ? parse_law(j.at("lambda"), where + ".lambda")
                                                 : ScalarLaw::constant(0.0);
      return kind == "laminate" ? CoefficientField::laminate(dim, std::move(laws), lam)
                                : CoefficientField::checkerboard(dim, std::move(laws), lam);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ".kind: unknown field kind '" + kind + "'");
}

inline Integrand parse_integrand(const json& j, int dim, const std::string& where) {
  check_keys(j, where, {"kind", "p", "m", "rho", "delta"});
  const std::string kind = get_or<std::string>(j, "kind", "power", where);
  const double p = get_or<double>(j, "p", 2.0, where);
  const int m = get_or<int>(j, "m", 1, where);
  const double delta = get_or<double>(j, "delta", p < 2.0 ? 1e-3 : 0.0, where);
  try {
    Integrand f = kind == "power" ? Integrand::power_law(p, m, dim, delta)
                : kind == "perturbed"
                    ? Integrand::perturbed(p, get_or<double>(j, "rho", 0.25, where), m, dim, delta)
                    : throw ConfigError(where + ".kind: unknown integrand '" + kind + "'");
    f.validate();
    return f;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline SolveOptions parse_solver(const json& j, const std::string& where) {
  check_keys(j, where, {"max_iters", "grad_tol", "preconditioner", "continuation"});
  SolveOptions o;
  o.max_iters = get_or<int>(j, "max_iters", o.max_iters, where);
  o.grad_tol = get_or<double>(j, "grad_tol", o.grad_tol, where);
  const std::string pc = get_or<std::string>(j, "preconditioner", "multigrid", where);
  if (pc == "multigrid")
    o.preconditioner = SolveOptions::Preconditioner::Multigrid;
  else if (pc == "jacobi")
    o.preconditioner = SolveOptions::Preconditioner::Jacobi;
  else
    throw ConfigError(where + ".preconditioner: expected 'multigrid' or 'jacobi'");
  if (j.contains("continuation")) o.continuation_deltas = num_list(j.at("continuation"), where + ".continuation");
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return o;
}

inline Tolerances parse_tolerances(const json& j, const std::string& where) {
  check_keys(j, where, {"oracle_rtol", "band_sigma", "sandwich_rtol", "periodic_sigma", "convexity_sigma",
                        "complementarity", "inactive_obstacle", "init_agreement", "ensemble_sigma",
                        "trend_factor", "abs_tol_rel"});
  Tolerances t;
  t.oracle_rtol = get_or<double>(j, "oracle_rtol", t.oracle_rtol, where);
  t.band_sigma = get_or<double>(j, "band_sigma", t.band_sigma, where);
  t.sandwich_rtol = get_or<double>(j, "sandwich_rtol", t.sandwich_rtol, where);
  t.periodic_sigma = get_or<double>(j, "periodic_sigma", t.periodic_sigma, where);
  t.convexity_sigma = get_or<double>(j, "convexity_sigma", t.convexity_sigma, where);
  t.complementarity = get_or<double>(j, "complementarity", t.complementarity, where);
  t.inactive_obstacle = get_or<double>(j, "inactive_obstacle", t.inactive_obstacle, where);
  t.init_agreement = get_or<double>(j, "init_agreement", t.init_agreement, where);
  t.ensemble_sigma = get_or<double>(j, "ensemble_sigma", t.ensemble_sigma, where);
  t.trend_factor = get_or<double>(j, "trend_factor", t.trend_factor, where);
  t.abs_tol_rel = get_or<double>(j, "abs_tol_rel", t.abs_tol_rel, where);
  for (double v : {t.oracle_rtol, t.band_sigma, t.sandwich_rtol, t.periodic_sigma, t.convexity_sigma,
                   t.complementarity, t.inactive_obstacle, t.init_agreement, t.ensemble_sigma, t.trend_factor,
                   t.abs_tol_rel})
    if (!(v > 0.0)) throw ConfigError(where + ": tolerances must be > 0");
  return t;
}

/// ξ as a list of rows, e.g. [[1, 0]] for m = 1, d = 2.
inline Mat parse_xi(const json& j, int m, int d, const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(m))
    throw ConfigError(where + ": expected " + std::to_string(m) + " rows");
  Mat xi(m, d);
  for (int r = 0; r < m; ++r) {
    const auto row = num_list(j[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != static_cast<std::size_t>(d))
      throw ConfigError(where + ": rows need " + std::to_string(d) + " entries");
    for (int c = 0; c < d; ++c) xi(r, c) = row[c];
  }
  return xi;
}

inline Boundary parse_boundary(const json& j, const char* key, Boundary fallback, const std::string& where) {
  const std::string s = get_or<std::string>(j, key, fallback == Boundary::Dirichlet ? "dirichlet" : "periodic", where);
  if (s == "dirichlet") return Boundary::Dirichlet;
  if (s == "periodic") return Boundary::Periodic;
  throw ConfigError(where + "." + key + ": expected 'dirichlet' or 'periodic'");
}

inline CellSchedule parse_schedule(const json& j, std::uint64_t base_seed, const std::string& where) {
  check_keys(j, where, {"t", "nodes_per_unit", "seeds"});
  CellSchedule s;
  s.t_values = num_list(required(j, "t", where), where + ".t");
  s.nodes_per_unit = get_or<double>(j, "nodes_per_unit", s.nodes_per_unit, where);
  s.seeds_per_t = get_or<int>(j, "seeds", s.seeds_per_t, where);
  s.base_seed = base_seed;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

inline std::optional<Verdict> parse_verdict(const std::string& s, const std::string& where) {
  for (auto v : {Verdict::BlowUp, Verdict::Collapse, Verdict::Stable, Verdict::Unknown})
    if (s == to_string(v)) return v;
  throw ConfigError(where + ": unknown verdict '" + s + "'");
}

inline constexpr double kPi = std::numbers::pi;

/// Scalar profile of x used for forces, data and obstacles.
inline std::function<double(const Point&)> parse_profile(const json& j, int dim, const std::string& where) {
  check_keys(j, where, {"kind", "value", "amplitude", "xi"});
  const std::string kind = get_or<std::string>(j, "kind", "", where);
  if (kind == "zero") return [](const Point&) { return 0.0; };
  if (kind == "constant") {
    const double v = num(required(j, "value", where), where + ".value");
    return [v](const Point&) { return v; };
  }
  if (kind == "sinsin") {
    const double a = num(required(j, "amplitude", where), where + ".amplitude");
    return [a, dim](const Point& x) {
      double s = a;
      for (int k = 0; k < dim; ++k) s *= std::sin(kPi * x[k]);
      return s;
    };
  }
  if (kind == "affine") {
    const auto xi = num_list(required(j, "xi", where), where + ".xi");
    if (xi.size() != static_cast<std::size_t>(dim)) throw ConfigError(where + ".xi: need dim entries");
    return [xi, dim](const Point& x) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += xi[k] * x[k];
      return s;
    };
  }
  throw ConfigError(where + ".kind: expected zero, constant, sinsin or affine");
}

inline PdeSpec parse_pde(const json& j, const ExperimentConfig& cfg, bool obstacle, const std::string& where) {
  check_keys(j, where, {"eps", "n_fine", "seeds", "force", "force_oscillation", "g", "law", "obstacle",
                        "obstacle_oscillation", "random_init_check", "max_final_error", "inactive_check"});
  PdeSpec s;
  const int d = cfg.field.dim();
  if (cfg.integrand.m != 1) throw ConfigError(where + ": PDE experiments are scalar (m = 1)");
  PDEProblem& pr = s.problem;
  pr.dim = d;
  pr.m = 1;
  pr.eps_list = num_list(required(j, "eps", where), where + ".eps");
  if (pr.eps_list.size() < 3) throw ConfigError(where + ".eps: need at least 3 values");
  for (std::size_t i = 1; i < pr.eps_list.size(); ++i)
    if (!(pr.eps_list[i] < pr.eps_list[i - 1])) throw ConfigError(where + ".eps: must decrease");
  s.n_fine = get_or<int>(j, "n_fine", s.n_fine, where);
  if (s.n_fine < 2) throw ConfigError(where + ".n_fine: must be >= 2");
  s.seeds = get_or<int>(j, "seeds", 1, where);
  if (s.seeds < 1) throw ConfigError(where + ".seeds: must be >= 1");
  const auto f0 = parse_profile(required(j, "force", where), d, where + ".force");
  pr.force0 = [f0](const Point& x, std::span<double> out) { out[0] = f0(x); };
  if (j.contains("force_oscillation")) {
    const double amp = num(j.at("force_oscillation"), where + ".force_oscillation");
    pr.force_eps = [f0, amp](const Point& x, double eps, std::span<double> out) {
      out[0] = f0(x) + amp * std::sin(2.0 * kPi * x[0] / eps);
    };
  }
  if (j.contains("g")) {
    const auto g = parse_profile(j.at("g"), d, where + ".g");
    pr.g = [g](const Point& x, std::span<double> out) { out[0] = g(x); };
  }
  if (obstacle) {
    const auto phi = parse_profile(required(j, "obstacle", where), d, where + ".obstacle");
    pr.obstacle = phi;
    const double osc = get_or<double>(j, "obstacle_oscillation", 0.0, where);
    if (osc != 0.0)
      pr.obstacle_eps = [phi, osc](const Point& x, double eps) { return phi(x) + osc * eps * std::sin(x[0] / eps); };
    s.inactive_check = get_or<bool>(j, "inactive_check", true, where);
  } else if (j.contains("obstacle") || j.contains("obstacle_oscillation") || j.contains("inactive_check")) {
    throw ConfigError(where + ": obstacle keys belong to the 'obstacle' experiment");
  }
  const json& law = required(j, "law", where);
  check_keys(law, where + ".law", {"kind", "q", "a"});
  const std::string lk = get_or<std::string>(law, "kind", "", where + ".law");
  std::array<double, kMaxDim> v{1.0, 1.0, 1.0};
  const char* key = lk == "quadratic_diag" ? "q" : "a";
  const auto vals = num_list(required(law, key, where + ".law"), where + ".law." + key);
  if (vals.size() != static_cast<std::size_t>(d)) throw ConfigError(where + ".law: need dim entries");
  for (int k = 0; k < d; ++k) v[k] = vals[k];
  try {
    if (lk == "quadratic_diag") {
      if (cfg.integrand.p != 2.0) throw ConfigError(where + ".law: quadratic_diag needs p = 2");
      s.law = HomogenizedLaw::quadratic_diag(1, d, v);
    } else if (lk == "power") {
      s.law = HomogenizedLaw::power(cfg.integrand, v);
    } else {
      throw ConfigError(where + ".law.kind: expected quadratic_diag or power");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".law: " + e.what());
  }
  s.random_init_check = get_or<bool>(j, "random_init_check", false, where);
  if (j.contains("max_final_error")) s.max_final_error = num(j.at("max_final_error"), where + ".max_final_error");
  try {
    pr.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

inline Observable parse_observable(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "exponent"});
  const std::string k = get_or<std::string>(j, "kind", "", where);
  if (k == "a_power") return Observable::a_power(get_or<double>(j, "exponent", 2.0, where));
  if (k == "a_inv_power") return Observable::a_inv_power(get_or<double>(j, "exponent", 2.0, where));
  if (k == "lambda") return Observable::lambda();
  throw ConfigError(where + ".kind: expected a_power, a_inv_power or lambda");
}

inline Box parse_box(const json& j, int dim, const std::string& where) {
  check_keys(j, where, {"lo", "hi"});
  const auto lo = num_list(required(j, "lo", where), where + ".lo");
  const auto hi = num_list(required(j, "hi", where), where + ".hi");
  if (lo.size() != static_cast<std::size_t>(dim) || hi.size() != lo.size())
    throw ConfigError(where + ": lo/hi need dim entries");
  Box b;
  for (int k = 0; k < dim; ++k) {
    b.lo[k] = lo[k];
    b.hi[k] = hi[k];
    if (!(hi[k] > lo[k])) throw ConfigError(where + ": hi must exceed lo");
  }
  return b;
}

inline ErgodicSpec parse_ergodic(const json& j, const ExperimentConfig& cfg, const std::string& where) {
  check_keys(j, where, {"observables", "region", "average_eps", "average_seeds", "per_period", "probe"});
  ErgodicSpec s;
  const int d = cfg.field.dim();
  const json& obs = required(j, "observables", where);
  if (!obs.is_array() || obs.empty()) throw ConfigError(where + ".observables: expected a non-empty array");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string w = where + ".observables[" + std::to_string(i) + "]";
    s.observables.push_back(parse_observable(obs[i], w));
    const auto m = exact_mean(s.observables.back(), cfg.field);
    if (!m || !std::isfinite(*m)) throw ConfigError(w + ": E[g] has no finite closed form for this field");
    s.exact.push_back(*m);
  }
  if (j.contains("region")) s.region = parse_box(j.at("region"), d, where + ".region");
  s.average_eps = get_or<double>(j, "average_eps", s.average_eps, where);
  s.average_seeds = get_or<int>(j, "average_seeds", s.average_seeds, where);
  s.per_period = get_or<int>(j, "per_period", s.per_period, where);
  if (!(s.average_eps > 0.0) || s.average_seeds < 2 || s.per_period < 1)
    throw ConfigError(where + ": need average_eps > 0, average_seeds >= 2, per_period >= 1");
  const json& pj = required(j, "probe", where);
  const std::string pw = where + ".probe";
  check_keys(pj, pw, {"boxes", "coverage", "seed", "eps", "seeds", "complement"});
  const int boxes = get_or<int>(pj, "boxes", 20, pw);
  const double coverage = get_or<double>(pj, "coverage", 0.3, pw);
  s.probe_seed = get_or<std::uint64_t>(pj, "seed", 11, pw);
  if (boxes < 1 || !(coverage > 0.0 && coverage < 1.0)) throw ConfigError(pw + ": need boxes >= 1, 0 < coverage < 1");
  try {
    s.probe = random_probe(d, static_cast<std::size_t>(boxes), coverage, s.probe_seed);
  } catch (const std::exception& e) {
    throw ConfigError(pw + ": " + e.what());
  }
  s.probe.complement = get_or<bool>(pj, "complement", false, pw);
  s.probe_eps = num_list(required(pj, "eps", pw), pw + ".eps");
  if (s.probe_eps.size() < 2) throw ConfigError(pw + ".eps: need at least 2 values");
  for (std::size_t i = 0; i < s.probe_eps.size(); ++i)
    if (!(s.probe_eps[i] > 0.0) || (i > 0 && !(s.probe_eps[i] < s.probe_eps[i - 1])))
      throw ConfigError(pw + ".eps: must be positive and decreasing");
  s.probe_seeds = get_or<int>(pj, "seeds", 8, pw);
  if (s.probe_seeds < 1) throw ConfigError(pw + ".seeds: must be >= 1");
  return s;
}

}  // namespace config_detail

/// Validates and converts a parsed config document.
inline ExperimentConfig parse_config(const json& j) {
  using namespace config_detail;
  const std::string top = "config";
  check_keys(j, top, {"version", "experiment", "name", "base_seed", "output_dir", "threads", "field", "integrand",
                      "solver", "tolerances", "homogenize", "degeneracy", "pde_convergence", "obstacle", "ergodic"});
  ExperimentConfig cfg;
  cfg.source = j;
  cfg.version = get_or<int>(j, "version", kConfigVersion, top);
  if (cfg.version != kConfigVersion)
    throw ConfigError("config.version: unsupported version " + std::to_string(cfg.version));
  required(j, "experiment", top);
  const std::string exp = get_or<std::string>(j, "experiment", "", top);
  const auto kind = parse_experiment(exp);
  if (!kind) throw ConfigError("config.experiment: unknown experiment '" + exp + "'");
  cfg.experiment = *kind;
  cfg.name = get_or<std::string>(j, "name", exp, top);
  if (!j.contains("base_seed")) throw ConfigError("config: missing required key 'base_seed'");
  cfg.base_seed = get_or<std::uint64_t>(j, "base_seed", 1, top);
  cfg.output_dir = get_or<std::string>(j, "output_dir", "out/" + cfg.name, top);
  cfg.threads = get_or<int>(j, "threads", 1, top);
  if (cfg.threads < 1) throw ConfigError("config.threads: must be >= 1");
  cfg.field = parse_field(required(j, "field", top), "config.field");
  cfg.integrand = parse_integrand(j.value("integrand", json::object()), cfg.field.dim(), "config.integrand");
  cfg.solve = parse_solver(j.value("solver", json::object()), "config.solver");
  cfg.tol = parse_tolerances(j.value("tolerances", json::object()), "config.tolerances");

  for (auto k : {ExperimentKind::Homogenize, ExperimentKind::Degeneracy, ExperimentKind::PdeConvergence,
                 ExperimentKind::Obstacle, ExperimentKind::Ergodic})
    if (k != cfg.experiment && j.contains(to_string(k)))
      throw ConfigError(std::string("config: block '") + to_string(k) + "' does not match experiment '" + exp + "'");
  const std::string where = std::string("config.") + exp;
  const json& body = required(j, exp.c_str(), top);
  const int m = cfg.integrand.m, d = cfg.field.dim();

  switch (cfg.experiment) {
    case ExperimentKind::Homogenize: {
      check_keys(body, where, {"schedule", "extrapolate", "xi", "grid", "gradient_step",
                               "periodic_compare", "moment_samples", "oracles"});
      HomogenizeSpec& h = cfg.homogenize;
      h.schedule = parse_schedule(required(body, "schedule", where), cfg.base_seed, where + ".schedule");
      h.extrapolate = get_or<bool>(body, "extrapolate", true, where);
      if (h.extrapolate && h.schedule.t_values.size() < 2)
        throw ConfigError(where + ": extrapolation needs at least two t values");
      if (body.contains("xi")) {
        const json& xs = body.at("xi");
        if (!xs.is_array()) throw ConfigError(where + ".xi: expected a list of matrices");
        for (std::size_t i = 0; i < xs.size(); ++i)
          h.xis.push_back(parse_xi(xs[i], m, d, where + ".xi[" + std::to_string(i) + "]"));
      }
      if (body.contains("grid")) {
        const json& g = body.at("grid");
        check_keys(g, where + ".grid", {"k", "r"});
        const int k = get_or<int>(g, "k", 5, where + ".grid");
        const double r = get_or<double>(g, "r", 1.0, where + ".grid");
        if (k < 2 || !(r > 0.0)) throw ConfigError(where + ".grid: need k >= 2, r > 0");
        h.grid = std::array<double, 2>{double(k), r};
        for (const Mat& x : xi_grid(m, d, k, r)) h.xis.push_back(x);
      }
      if (h.xis.empty()) throw ConfigError(where + ": give 'xi' and/or 'grid'");
      h.gradient_step = get_or<double>(body, "gradient_step", 0.0, where);
      if (h.gradient_step < 0.0) throw ConfigError(where + ".gradient_step: must be >= 0");
      if (h.gradient_step > 0.0 && !h.grid) throw ConfigError(where + ".gradient_step: needs a grid");
      h.periodic_compare = get_or<bool>(body, "periodic_compare", false, where);
      h.moment_samples = get_or<std::size_t>(body, "moment_samples", h.moment_samples, where);
      if (h.moment_samples < 1) throw ConfigError(where + ".moment_samples: must be >= 1");
      if (body.contains("oracles")) {
        const json& os = body.at("oracles");
        if (!os.is_array()) throw ConfigError(where + ".oracles: expected an array");
        for (std::size_t i = 0; i < os.size(); ++i) {
          const std::string w = where + ".oracles[" + std::to_string(i) + "]";
          check_keys(os[i], w, {"xi", "value"});
          h.oracles.push_back({parse_xi(required(os[i], "xi", w), m, d, w + ".xi"),
                               num(required(os[i], "value", w), w + ".value")});
        }
      }
      break;
    }
    case ExperimentKind::Degeneracy: {
      check_keys(body, where, {"schedule", "boundary", "xi", "expect", "moment_cells"});
      DegeneracySpec& g = cfg.degeneracy;
      g.schedule = parse_schedule(required(body, "schedule", where), cfg.base_seed, where + ".schedule");
      if (g.schedule.t_values.size() < 3) throw ConfigError(where + ".schedule.t: need at least 3 values");
      g.boundary = parse_boundary(body, "boundary", Boundary::Periodic, where);
      g.xi = parse_xi(required(body, "xi", where), m, d, where + ".xi");
      if (body.contains("expect"))
        g.expect = parse_verdict(get_or<std::string>(body, "expect", "", where), where + ".expect");
      g.moment_cells = get_or<std::size_t>(body, "moment_cells", g.moment_cells, where);
      break;
    }
    case ExperimentKind::PdeConvergence:
      cfg.pde = parse_pde(body, cfg, false, where);
      break;
    case ExperimentKind::Obstacle:
      cfg.pde = parse_pde(body, cfg, true, where);
      break;
    case ExperimentKind::Ergodic:
      cfg.ergodic = parse_ergodic(body, cfg, where);
      break;
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace homog

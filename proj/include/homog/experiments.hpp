#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "homog/cell.hpp"
#include "homog/config.hpp"
#include "homog/ergodic.hpp"
#include "homog/pde.hpp"

namespace homog {

inline constexpr const char* kVersion = "1.0.0";

/// Exit status of the runner.
enum class ExitCode : int { Ok = 0, AssertionFailed = 1, Schema = 2, Io = 3 };

/// Shortest text that reads back to the same double.
inline std::string fmt_num(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Comma-separated table with a fixed header.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  Csv& row() {
    rows_.emplace_back();
    return *this;
  }
  Csv& add(const std::string& s) {
    rows_.back().push_back(s);
    return *this;
  }
  Csv& add(const char* s) { return add(std::string(s)); }
  Csv& add(double v) { return add(fmt_num(v)); }
  Csv& add(bool b) { return add(std::string(b ? "true" : "false")); }
  Csv& add(int v) { return add(std::to_string(v)); }
  Csv& add(std::size_t v) { return add(std::to_string(v)); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) throw std::logic_error("csv: row width does not match the header");
      append_line(out, r);
    }
    return out;
  }
  std::size_t size() const { return rows_.size(); }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// One observation of the long-format plot table.
struct PlotRow {
  std::string experiment;
  std::string series;
  std::optional<std::size_t> xi_index;
  std::optional<double> t;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::string variable;
  double value = 0.0;
};

/// Tidy CSV: experiment,series,xi_index,t,eps,seed,variable,value; absent keys are empty.
inline std::string emit_plotdata(const std::vector<PlotRow>& rows) {
  Csv csv({"experiment", "series", "xi_index", "t", "eps", "seed", "variable", "value"});
  for (const auto& r : rows) {
    csv.row().add(r.experiment).add(r.series);
    csv.add(r.xi_index ? std::to_string(*r.xi_index) : std::string());
    csv.add(r.t ? fmt_num(*r.t) : std::string());
    csv.add(r.eps ? fmt_num(*r.eps) : std::string());
    csv.add(r.seed ? std::to_string(*r.seed) : std::string());
    csv.add(r.variable).add(r.value);
  }
  return csv.str();
}

struct Check {
  std::string name;
  bool passed = false;
  json detail;
};

struct ExperimentResult {
  ExperimentKind experiment = ExperimentKind::Homogenize;
  std::string name;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> files;  ///< (file name, content)
  std::vector<PlotRow> plot;
  json info = json::object();
  std::vector<std::string> warnings;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace experiments_detail {

inline json mat_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline std::string boundary_name(Boundary b) { return b == Boundary::Dirichlet ? "dirichlet" : "periodic"; }

inline CellOptions cell_options(const ExperimentConfig& cfg, bool extrapolate) {
  CellOptions o;
  o.solve = cfg.solve;
  o.sandwich_rtol = cfg.tol.sandwich_rtol;
  o.extrapolate = extrapolate;
  o.threads = cfg.threads;
  return o;
}

inline void add_cell_rows(Csv& csv, std::size_t xi_index, const std::vector<CellResult>& cells) {
  for (const auto& c : cells)
    csv.row()
        .add(xi_index)
        .add(c.t)
        .add(c.seed.value)
        .add(boundary_name(c.boundary))
        .add(c.n)
        .add(c.mu)
        .add(c.affine_bound)
        .add(c.lower_bound)
        .add(c.upper_ok)
        .add(c.lower_ok)
        .add(c.report.converged)
        .add(c.report.iterations);
}

inline Csv cell_csv() {
  return Csv({"xi_index", "t", "seed", "boundary", "n", "mu", "affine_bound", "lower_bound", "upper_ok",
              "lower_ok", "converged", "iterations"});
}

inline void plot_cells(std::vector<PlotRow>& plot, const char* exp, std::size_t xi_index,
                       const std::vector<CellResult>& cells) {
  for (const auto& c : cells)
    plot.push_back({exp, "cell_" + boundary_name(c.boundary), xi_index, c.t, std::nullopt, c.seed.value, "mu", c.mu});
}

inline ExperimentResult run_homogenize(const ExperimentConfig& cfg) {
  const HomogenizeSpec& h = cfg.homogenize;
  ExperimentResult res;
  const char* exp = "homogenize";
  const CellOptions opts = cell_options(cfg, h.extrapolate);
  const BoundConstants bc = bound_constants(cfg.field, cfg.integrand, h.moment_samples, Seed{cfg.base_seed});

  HomogenizedTable table;
  table.p = cfg.integrand.p;
  table.lower_slack = cfg.integrand.lower_slack();
  table.constants = bc;
  Csv cells = cell_csv();
  std::size_t sandwich_total = 0, sandwich_bad = 0, unconverged = 0;
  std::vector<std::vector<CellResult>> dir_cells;
  for (std::size_t i = 0; i < h.xis.size(); ++i) {
    const FhomEstimate e = estimate_fhom(h.xis[i], cfg.field, cfg.integrand, h.schedule, opts);
    table.entries.push_back({h.xis[i], e.value, e.stderr_, e.trace});
    add_cell_rows(cells, i, e.samples);
    plot_cells(res.plot, exp, i, e.samples);
    for (const auto& c : e.samples) {
      ++sandwich_total;
      sandwich_bad += !c.sandwich_ok();
      unconverged += !c.converged();
    }
    dir_cells.push_back(e.samples);
  }

  Csv tab({"xi_index", "xi", "value", "stderr", "band_lo", "band_hi", "in_band"});
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    const auto& e = table.entries[i];
    const double s = std::pow(e.xi.frobenius(), table.p);
    std::string xi;
    for (int r = 0; r < e.xi.rows; ++r)
      for (int c = 0; c < e.xi.cols; ++c) xi += (xi.empty() ? "" : " ") + fmt_num(e.xi(r, c));
    tab.row()
        .add(i)
        .add(xi)
        .add(e.value)
        .add(e.stderr_)
        .add(bc.c0 * s - table.lower_slack)
        .add(bc.C0 * s + bc.C1)
        .add(table.in_band(e, 1e-8, cfg.tol.band_sigma));
    res.plot.push_back({exp, "fhom", i, std::nullopt, std::nullopt, std::nullopt, "value", e.value});
    res.plot.push_back({exp, "fhom", i, std::nullopt, std::nullopt, std::nullopt, "stderr", e.stderr_});
  }

  res.checks.push_back({"sandwich", sandwich_bad == 0,
                        {{"solves", sandwich_total}, {"violations", sandwich_bad}, {"rtol", cfg.tol.sandwich_rtol}}});
  res.checks.push_back({"solver_converged", unconverged == 0, {{"unconverged", unconverged}}});
  const auto band = table.band_violations(cfg.tol.band_sigma);
  res.checks.push_back({"growth_band", band.empty(),
                        {{"violations", band.size()},
                         {"c0", bc.c0},
                         {"C0", bc.C0},
                         {"C1", bc.C1},
                         {"k_sigma", cfg.tol.band_sigma}}});

  for (std::size_t i = 0; i < h.oracles.size(); ++i) {
    const auto k = table.find(h.oracles[i].xi, 1e-12);
    if (!k) throw ConfigError("config.homogenize.oracles[" + std::to_string(i) + "]: ξ is not in the table");
    const double v = table.entries[*k].value, o = h.oracles[i].value;
    const double rel = std::abs(v - o) / std::abs(o);
    res.checks.push_back({"oracle_" + std::to_string(i), rel <= cfg.tol.oracle_rtol,
                          {{"xi", mat_json(h.oracles[i].xi)},
                           {"value", v},
                           {"stderr", table.entries[*k].stderr_},
                           {"oracle", o},
                           {"rel_error", rel},
                           {"rtol", cfg.tol.oracle_rtol}}});
  }

  if (h.grid) {
    const auto conv = convexity_scan(table, cfg.tol.convexity_sigma);
    res.checks.push_back({"convexity", conv.ok(),
                          {{"pairs", conv.pairs_checked}, {"violations", conv.violations.size()}}});
    if (h.gradient_step > 0.0) {
      std::size_t checked = 0, bad = 0;
      Csv grad({"xi_index", "norm", "bound", "within_bound"});
      for (std::size_t i = 0; i < table.entries.size(); ++i) {
        GradientEstimate g;
        try {
          g = dfhom(table, table.entries[i].xi, h.gradient_step);
        } catch (const std::invalid_argument&) {
          continue;  // grid boundary: ξ ± h is not tabulated
        }
        ++checked;
        bad += !g.within_bound;
        grad.row().add(i).add(g.norm).add(g.bound).add(g.within_bound);
        res.plot.push_back({exp, "gradient", i, std::nullopt, std::nullopt, std::nullopt, "norm", g.norm});
      }
      res.checks.push_back({"gradient_growth", checked > 0 && bad == 0, {{"points", checked}, {"violations", bad}}});
      res.files.emplace_back("gradient.csv", grad.str());
    }
  }

  if (h.periodic_compare) {
    Csv cmp({"xi_index", "t", "dirichlet_mean", "dirichlet_stderr", "periodic_mean", "holds"});
    std::size_t bad = 0;
    for (std::size_t i = 0; i < h.xis.size(); ++i) {
      const auto per = cell_sweep(h.xis[i], cfg.field, cfg.integrand, h.schedule, opts, Boundary::Periodic);
      add_cell_rows(cells, i, per);
      plot_cells(res.plot, exp, i, per);
      const auto tp = sweep_trace(per, h.schedule);
      const auto td = sweep_trace(dir_cells[i], h.schedule);
      for (std::size_t j = 0; j < tp.size(); ++j) {
        const bool ok = tp[j].mean <= td[j].mean + cfg.tol.periodic_sigma * td[j].stderr_ + 1e-12 * td[j].mean;
        bad += !ok;
        cmp.row().add(i).add(td[j].t).add(td[j].mean).add(td[j].stderr_).add(tp[j].mean).add(ok);
      }
    }
    res.checks.push_back({"periodic_le_dirichlet", bad == 0, {{"violations", bad}, {"k_sigma", cfg.tol.periodic_sigma}}});
    res.files.emplace_back("periodic.csv", cmp.str());
  }

  res.files.emplace_back("cells.csv", cells.str());
  res.files.emplace_back("table.csv", tab.str());
  return res;
}

inline ExperimentResult run_degeneracy(const ExperimentConfig& cfg) {
  const DegeneracySpec& g = cfg.degeneracy;
  ExperimentResult res;
  const auto rep = degeneracy_probe(cfg.field, cfg.integrand, g.xi, g.schedule, cell_options(cfg, false),
                                    g.boundary, g.moment_cells);
  Csv cells = cell_csv();
  add_cell_rows(cells, 0, rep.samples);
  plot_cells(res.plot, "degeneracy", 0, rep.samples);
  Csv trace({"t", "n", "mean", "stderr", "ratio"});
  for (std::size_t j = 0; j < rep.trace.size(); ++j) {
    trace.row().add(rep.trace[j].t).add(rep.trace[j].n).add(rep.trace[j].mean).add(rep.trace[j].stderr_);
    trace.add(j == 0 ? std::string() : fmt_num(rep.ratios[j - 1]));
    res.plot.push_back({"degeneracy", "trace", 0, rep.trace[j].t, std::nullopt, std::nullopt, "mean",
                        rep.trace[j].mean});
  }
  json ratios = rep.ratios;
  res.info = {{"verdict", to_string(rep.verdict)},
              {"ratios", ratios},
              {"boundary", boundary_name(g.boundary)},
              {"moments",
               {{"a_p", rep.moments.a_p},
                {"a_inv", rep.moments.a_inv},
                {"flag_a_p", rep.moments.flags.a_p},
                {"flag_a_inv", rep.moments.flags.a_inv}}}};
  if (g.expect)
    res.checks.push_back({"verdict", rep.verdict == *g.expect,
                          {{"expected", to_string(*g.expect)}, {"observed", to_string(rep.verdict)}}});
  res.files.emplace_back("cells.csv", cells.str());
  res.files.emplace_back("trace.csv", trace.str());
  return res;
}

inline ExperimentResult run_pde(const ExperimentConfig& cfg, bool obstacle) {
  const PdeSpec& s = cfg.pde;
  ExperimentResult res;
  const char* exp = obstacle ? "obstacle" : "pde_convergence";
  Csv conv({"eps", "seed", "error_ld", "error_weak", "energy_eps", "energy_hom", "contact_fraction", "w11",
            "tail2", "tail4", "tail8", "converged", "unresolved", "feasible"});
  std::vector<double> first_err, last_err;
  std::size_t infeasible = 0, unconverged = 0, unresolved = 0;
  std::optional<PdeSolution> hom;
  for (int k = 0; k < s.seeds; ++k) {
    const Seed seed{cfg.base_seed + static_cast<std::uint64_t>(k)};
    ConvergenceTable t = convergence_study(s.problem, cfg.field, cfg.integrand, s.law, seed, s.n_fine, cfg.solve,
                                           cfg.threads);
    for (const auto& r : t.rows) {
      conv.row()
          .add(r.eps)
          .add(r.seed)
          .add(r.error_ld)
          .add(r.error_weak)
          .add(r.energy_eps)
          .add(r.energy_hom)
          .add(r.contact_fraction)
          .add(r.w11)
          .add(r.tails[0])
          .add(r.tails[1])
          .add(r.tails[2])
          .add(r.converged)
          .add(r.unresolved)
          .add(r.feasible);
      infeasible += !r.feasible;
      unconverged += !r.converged;
      unresolved += r.unresolved;
      for (const auto& [var, v] : {std::pair<const char*, double>{"error_ld", r.error_ld},
                                   {"error_weak", r.error_weak},
                                   {"energy_eps", r.energy_eps},
                                   {"w11", r.w11}})
        res.plot.push_back({exp, "convergence", std::nullopt, std::nullopt, r.eps, r.seed, var, v});
    }
    first_err.push_back(t.rows.front().error_ld);
    last_err.push_back(t.rows.back().error_ld);
    if (!hom) hom.emplace(std::move(t.hom));
  }
  const auto mean = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) a += x / static_cast<double>(v.size());
    return a;
  };
  res.checks.push_back({"error_shrinks", mean(last_err) < mean(first_err),
                        {{"first", mean(first_err)}, {"last", mean(last_err)}}});
  res.checks.push_back({"solver_converged", unconverged == 0 && hom->report.converged, {{"unconverged", unconverged}}});
  if (s.max_final_error)
    res.checks.push_back({"final_error", mean(last_err) <= *s.max_final_error,
                          {{"last", mean(last_err)}, {"max", *s.max_final_error}}});
  if (unresolved) res.warnings.push_back(std::to_string(unresolved) + " rows have fewer than 8 mesh cells per period");

  if (s.random_init_check) {
    SolveOptions zero = cfg.solve, rnd = cfg.solve;
    rnd.init = SolveOptions::Init::Random;
    rnd.init_seed = cfg.base_seed;
    const double eps = s.problem.eps_list.front();
    const auto a = solve_eps(s.problem, cfg.field, cfg.integrand, Seed{cfg.base_seed}, eps, s.n_fine, zero);
    const auto b = solve_eps(s.problem, cfg.field, cfg.integrand, Seed{cfg.base_seed}, eps, s.n_fine, rnd);
    const double rel = std::abs(a.energy - b.energy) / std::max(std::abs(a.energy), 1e-300);
    res.checks.push_back({"init_independence", rel <= cfg.tol.init_agreement,
                          {{"energy_zero", a.energy}, {"energy_random", b.energy}, {"rel_gap", rel}}});
  }

  if (obstacle) {
    res.checks.push_back({"feasible", infeasible == 0, {{"infeasible_rows", infeasible}}});
    const double comp = complementarity_residual(hom->u, hom->obstacle, hom->gradient);
    res.checks.push_back({"complementarity", comp <= cfg.tol.complementarity, {{"residual", comp}}});
    PDEProblem free = s.problem;
    free.obstacle = nullptr;
    free.obstacle_eps = nullptr;
    const auto uf = solve_hom(free, s.law, s.n_fine, cfg.solve);
    res.checks.push_back({"energy_above_unconstrained", hom->energy >= uf.energy - 1e-12 * std::abs(uf.energy),
                          {{"constrained", hom->energy}, {"unconstrained", uf.energy}}});
    res.info["contact_fraction_hom"] = hom->contact_fraction;
    if (s.inactive_check) {
      // same first-order method on both sides; the obstacle sits one unit below the free solution
      SolveOptions fo = cfg.solve;
      fo.method = SolveOptions::Method::FirstOrder;
      const auto ff = solve_hom(free, s.law, s.n_fine, fo);
      double lowest = 0.0;
      for (double v : ff.u.dofs) lowest = std::min(lowest, v);
      PDEProblem low = free;
      low.obstacle = [lowest](const Point&) { return lowest - 1.0; };
      const auto fl = solve_hom(low, s.law, s.n_fine, fo);
      double gap = 0.0;
      for (std::size_t i = 0; i < ff.u.dofs.size(); ++i) gap = std::max(gap, std::abs(ff.u.dofs[i] - fl.u.dofs[i]));
      res.checks.push_back({"inactive_obstacle", gap <= cfg.tol.inactive_obstacle, {{"max_nodal_gap", gap}}});
    }
  }
  res.files.emplace_back("convergence.csv", conv.str());
  return res;
}

inline ExperimentResult run_ergodic(const ExperimentConfig& cfg) {
  const ErgodicSpec& s = cfg.ergodic;
  ExperimentResult res;
  Csv avg({"observable", "seed", "value"});
  Csv probe({"probe_id", "observable", "eps", "seed", "deviation"});
  Csv boxes({"box", "lo", "hi"});
  for (std::size_t b = 0; b < s.probe.boxes.size(); ++b) {
    std::string lo, hi;
    for (int k = 0; k < s.probe.dim; ++k) {
      lo += (k ? " " : "") + fmt_num(s.probe.boxes[b].lo[k]);
      hi += (k ? " " : "") + fmt_num(s.probe.boxes[b].hi[k]);
    }
    boxes.row().add(b).add(lo).add(hi);
  }
  std::vector<Seed> seeds;
  for (int k = 0; k < s.probe_seeds; ++k) seeds.push_back(Seed{cfg.base_seed + static_cast<std::uint64_t>(k)});
  WeakL1Options wo;
  wo.abs_tol_rel = cfg.tol.abs_tol_rel;
  wo.trend_factor = cfg.tol.trend_factor;
  wo.per_period = s.per_period;
  wo.threads = cfg.threads;
  const std::string probe_id = "boxes" + std::to_string(s.probe.boxes.size()) + "_seed" + std::to_string(s.probe_seed) +
                               (s.probe.complement ? "_complement" : "");

  for (std::size_t i = 0; i < s.observables.size(); ++i) {
    const auto& g = s.observables[i];
    const auto ens = ensemble_average(g, cfg.field, Seed{cfg.base_seed}, static_cast<std::size_t>(s.average_seeds),
                                      s.region, s.average_eps, s.per_period, cfg.threads);
    for (std::size_t k = 0; k < ens.values.size(); ++k) {
      avg.row().add(g.name).add(cfg.base_seed + k).add(ens.values[k]);
      res.plot.push_back({"ergodic", "average_" + g.name, std::nullopt, std::nullopt, s.average_eps,
                          cfg.base_seed + k, "value", ens.values[k]});
    }
    res.checks.push_back({"moment_" + g.name, ens.mean_within(s.exact[i], cfg.tol.ensemble_sigma),
                          {{"mean", ens.mean},
                           {"stderr", ens.stderr_},
                           {"sd", ens.sd},
                           {"exact", s.exact[i]},
                           {"fraction_within_k_sd", ens.fraction_within(s.exact[i], cfg.tol.ensemble_sigma)}}});

    const auto w = weak_L1_probe(g, cfg.field, seeds, s.probe, s.probe_eps, s.exact[i], wo);
    for (const auto& r : w.rows) {
      probe.row().add(probe_id).add(g.name).add(r.eps).add(r.seed).add(r.deviation);
      res.plot.push_back({"ergodic", "probe_" + g.name, std::nullopt, std::nullopt, r.eps, r.seed, "deviation",
                          r.deviation});
    }
    json md = w.mean_deviation;
    res.checks.push_back({"weak_l1_" + g.name, w.passed(),
                          {{"measure", w.measure},
                           {"mean_deviation", md},
                           {"trend_ok", w.trend_ok},
                           {"abs_ok", w.abs_ok}}});
  }
  res.files.emplace_back("averages.csv", avg.str());
  res.files.emplace_back("probe.csv", probe.str());
  res.files.emplace_back("probe_boxes.csv", boxes.str());
  return res;
}

}  // namespace experiments_detail

/// Runs the experiment a config declares; files are returned, not written.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  using namespace experiments_detail;
  ExperimentResult res;
  switch (cfg.experiment) {
    case ExperimentKind::Homogenize:
      res = run_homogenize(cfg);
      break;
    case ExperimentKind::Degeneracy:
      res = run_degeneracy(cfg);
      break;
    case ExperimentKind::PdeConvergence:
      res = run_pde(cfg, false);
      break;
    case ExperimentKind::Obstacle:
      res = run_pde(cfg, true);
      break;
    case ExperimentKind::Ergodic:
      res = run_ergodic(cfg);
      break;
  }
  res.experiment = cfg.experiment;
  res.name = cfg.name;
  return res;
}

/// Hash of the effective config; output_dir and threads do not change results
/// and are left out.
inline std::string config_hash(const ExperimentConfig& cfg) {
  json j = cfg.source;
  j.erase("output_dir");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

/// Writes every file, plotdata.csv and the summary.json manifest into `dir`.
inline json write_artifacts(const ExperimentResult& res, const ExperimentConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  auto files = res.files;
  files.emplace_back("plotdata.csv", emit_plotdata(res.plot));
  json listed = json::array();
  for (const auto& [name, content] : files) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    listed.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", fnv1a_hex(content)}});
  }
  json checks = json::array();
  for (const auto& c : res.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json manifest = {{"experiment", to_string(res.experiment)},
                   {"name", res.name},
                   {"passed", res.passed()},
                   {"config_hash", config_hash(cfg)},
                   {"config", cfg.source},
                   {"versions", {{"homog", kVersion}, {"config_schema", kConfigVersion}, {"compiler", __VERSION__}}},
                   {"base_seed", cfg.base_seed},
                   {"checks", checks},
                   {"info", res.info},
                   {"warnings", res.warnings},
                   {"files", listed}};
  const fs::path path = fs::path(dir) / "summary.json";
  std::ofstream out(path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return manifest;
}

}  // namespace homog

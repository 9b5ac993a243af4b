#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homog/config.hpp"
#include "homog/experiments.hpp"

using namespace homog;
namespace fs = std::filesystem;

namespace {

json two_point() { return {{"kind", "discrete"}, {"atoms", {1.0, 2.0}}, {"probs", {0.5, 0.5}}}; }

json homogenize_doc() {
  return {{"experiment", "homogenize"},
          {"base_seed", 1},
          {"field", {{"kind", "constant"}, {"dim", 2}}},
          {"integrand", {{"p", 2.0}}},
          {"homogenize",
           {{"schedule", {{"t", {2, 4}}, {"nodes_per_unit", 4}, {"seeds", 2}}},
            {"xi", {{{1.0, 0.0}}, {{0.5, -1.0}}}},
            {"periodic_compare", true},
            {"oracles", {{{"xi", {{1.0, 0.0}}}, {"value", 1.0}}}}}}};
}

json degeneracy_doc(const std::string& expect) {
  return {{"experiment", "degeneracy"},
          {"base_seed", 3},
          {"field", {{"kind", "laminate"}, {"diag", {two_point()}}}},
          {"degeneracy",
           {{"schedule", {{"t", {2, 4, 8}}, {"nodes_per_unit", 4}, {"seeds", 2}}},
            {"xi", {{0.0, 1.0}}},
            {"expect", expect},
            {"moment_cells", 4096}}}};
}

json pde_doc(bool obstacle) {
  json body = {{"eps", {0.25, 0.125, 0.0625}},
               {"n_fine", 32},
               {"force", {{"kind", "sinsin"}, {"amplitude", obstacle ? -10.0 : 10.0}}},
               {"law", {{"kind", "quadratic_diag"}, {"q", {1.6, 2.5}}}},
               {"random_init_check", true}};
  if (obstacle) body["obstacle"] = {{"kind", "constant"}, {"value", -0.05}};
  return {{"experiment", obstacle ? "obstacle" : "pde_convergence"},
          {"base_seed", 2},
          {"field", {{"kind", "laminate"}, {"diag", {two_point()}}}},
          {obstacle ? "obstacle" : "pde_convergence", body}};
}

json ergodic_doc() {
  return {{"experiment", "ergodic"},
          {"base_seed", 1},
          {"field", {{"kind", "checkerboard"}, {"diag", {two_point()}}}},
          {"ergodic",
           {{"observables", {{{"kind", "a_power"}, {"exponent", 2}}, {{"kind", "a_inv_power"}, {"exponent", 2}}}},
            {"average_eps", 1.0 / 16},
            {"average_seeds", 20},
            {"probe", {{"boxes", 20}, {"coverage", 0.3}, {"eps", {1.0 / 8, 1.0 / 32, 1.0 / 128}}, {"seeds", 4}}}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homog_io_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HOMOG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const json& doc, const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homog_io_" + name + ".json");
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST(Io, NumberFormattingRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 2.5, 1e-300, -7.125, 6.02214076e23}) EXPECT_EQ(std::strtod(fmt_num(x).c_str(), nullptr), x);
  EXPECT_EQ(fmt_num(2.5), "2.5");
  EXPECT_EQ(fmt_num(0.1), "0.1");
}

TEST(Io, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Io, EmptyPlotdataIsHeaderOnly) {
  EXPECT_EQ(emit_plotdata({}), "experiment,series,xi_index,t,eps,seed,variable,value\n");
  const auto s = emit_plotdata({{"pde_convergence", "convergence", std::nullopt, std::nullopt, 0.25, 4, "error_ld", 0.5}});
  EXPECT_NE(s.find("pde_convergence,convergence,,,0.25,4,error_ld,0.5\n"), std::string::npos);
}

TEST(Io, SchemaViolationsAreRejected) {
  auto bad = homogenize_doc();
  bad["homogenize"]["typo"] = 1;
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = homogenize_doc();
  bad.erase("base_seed");
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = homogenize_doc();
  bad["experiment"] = "nonsense";
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = homogenize_doc();
  bad["degeneracy"] = json::object();
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = degeneracy_doc("Sideways");
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = degeneracy_doc("Stable");
  bad["field"]["diag"][0]["probs"] = {0.5, 0.6};
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = pde_doc(false);
  bad["pde_convergence"]["eps"] = {0.1, 0.2, 0.05};
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = pde_doc(false);
  bad["pde_convergence"]["obstacle"] = {{"kind", "constant"}, {"value", 0.0}};
  EXPECT_THROW(parse_config(bad), ConfigError);
  bad = ergodic_doc();
  bad["field"] = {{"kind", "checkerboard"}, {"diag", {{{"kind", "pareto"}, {"alpha", 1.0}}}}};
  EXPECT_THROW(parse_config(bad), ConfigError);  // E[λ²] = ∞ has no finite oracle
  bad = homogenize_doc();
  bad["tolerances"] = {{"oracle_rtol", -1.0}};
  EXPECT_THROW(parse_config(bad), ConfigError);
}

TEST(Io, TolerancesDefaultToAcceptanceValues) {
  const auto cfg = parse_config(homogenize_doc());
  EXPECT_EQ(cfg.tol.oracle_rtol, 0.05);
  EXPECT_EQ(cfg.tol.band_sigma, 3.0);
  EXPECT_EQ(cfg.tol.sandwich_rtol, 1e-6);
  EXPECT_EQ(cfg.tol.periodic_sigma, 2.0);
  EXPECT_EQ(cfg.tol.complementarity, 1e-6);
  EXPECT_EQ(cfg.tol.inactive_obstacle, 1e-10);
  EXPECT_EQ(cfg.tol.init_agreement, 1e-8);
  EXPECT_EQ(cfg.tol.trend_factor, 0.5);
  auto doc = homogenize_doc();
  doc["tolerances"] = {{"oracle_rtol", 0.01}};
  EXPECT_EQ(parse_config(doc).tol.oracle_rtol, 0.01);
}

TEST(Io, HomogenizeHomogeneousMedium) {
  const auto cfg = parse_config(homogenize_doc());
  const auto res = run_experiment(cfg);
  EXPECT_TRUE(res.passed());
  const auto dir = scratch("hom");
  const auto manifest = write_artifacts(res, cfg, dir.string());
  EXPECT_TRUE(manifest["passed"].get<bool>());
  const std::string table = slurp(dir / "table.csv");
  EXPECT_NE(table.find("0,1 0,1,"), std::string::npos) << table;
  EXPECT_NE(table.find("1,0.5 -1,1.25,"), std::string::npos) << table;
  // every emitted file is listed with its hash
  for (const auto& f : manifest["files"]) {
    const std::string content = slurp(dir / f["name"].get<std::string>());
    EXPECT_EQ(f["fnv1a64"].get<std::string>(), fnv1a_hex(content));
  }
  EXPECT_EQ(manifest["files"].size(), res.files.size() + 1);
}

TEST(Io, CellCsvRowsAreKeyedByXiTSeed) {
  const auto res = run_experiment(parse_config(homogenize_doc()));
  const auto it = std::find_if(res.files.begin(), res.files.end(), [](const auto& f) { return f.first == "cells.csv"; });
  ASSERT_NE(it, res.files.end());
  EXPECT_EQ(it->second.substr(0, it->second.find('\n')),
            "xi_index,t,seed,boundary,n,mu,affine_bound,lower_bound,upper_ok,lower_ok,converged,iterations");
  // 2 ξ × 2 t × 2 seeds, Dirichlet and periodic
  EXPECT_EQ(std::count(it->second.begin(), it->second.end(), '\n'), 1 + 16);
  for (const auto& r : res.plot)
    if (r.series.rfind("cell_", 0) == 0) {
      EXPECT_TRUE(r.xi_index && r.t && r.seed);
    }
}

TEST(Io, DegeneracyVerdictInManifest) {
  const auto cfg = parse_config(degeneracy_doc("Stable"));
  const auto res = run_experiment(cfg);
  EXPECT_EQ(res.info["verdict"], "Stable");
  EXPECT_TRUE(res.passed());
  const auto miss = run_experiment(parse_config(degeneracy_doc("BlowUp")));
  EXPECT_FALSE(miss.passed());
}

TEST(Io, PdeAndObstacleExperiments) {
  const auto pde = run_experiment(parse_config(pde_doc(false)));
  for (const auto& c : pde.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail.dump();
  const auto obs = run_experiment(parse_config(pde_doc(true)));
  for (const auto& c : obs.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail.dump();
  const auto& conv = obs.files.front().second;
  EXPECT_EQ(conv.substr(0, conv.find('\n')),
            "eps,seed,error_ld,error_weak,energy_eps,energy_hom,contact_fraction,w11,tail2,tail4,tail8,converged,"
            "unresolved,feasible");
}

TEST(Io, ErgodicExperiment) {
  const auto res = run_experiment(parse_config(ergodic_doc()));
  for (const auto& c : res.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail.dump();
  const auto it = std::find_if(res.files.begin(), res.files.end(), [](const auto& f) { return f.first == "probe.csv"; });
  ASSERT_NE(it, res.files.end());
  EXPECT_EQ(it->second.substr(0, it->second.find('\n')), "probe_id,observable,eps,seed,deviation");
}

TEST(Io, RerunsAreByteIdentical) {
  for (const json& doc : {homogenize_doc(), degeneracy_doc("Stable"), ergodic_doc()}) {
    auto cfg = parse_config(doc);
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    write_artifacts(run_experiment(cfg), cfg, a.string());
    cfg.threads = 3;
    write_artifacts(run_experiment(cfg), cfg, b.string());
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto name = entry.path().filename();
      EXPECT_EQ(slurp(a / name), slurp(b / name)) << doc["experiment"] << " " << name;
    }
  }
}

TEST(Io, ConfigHashIgnoresOutputDirAndThreads) {
  auto doc = homogenize_doc();
  const auto h1 = config_hash(parse_config(doc));
  doc["threads"] = 4;
  doc["output_dir"] = "elsewhere";
  EXPECT_EQ(config_hash(parse_config(doc)), h1);
  doc["base_seed"] = 2;
  EXPECT_NE(config_hash(parse_config(doc)), h1);
}

TEST(Io, CliExitCodes) {
  const auto out = scratch("cli_out");
  const auto ok = write_config(degeneracy_doc("Stable"), "ok");
  EXPECT_EQ(cli("degeneracy --config " + ok.string() + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_EQ(cli("run --config " + ok.string() + " --out " + out.string() + " --threads 2"), 0);
  // subcommand and config disagree
  EXPECT_EQ(cli("homogenize --config " + ok.string() + " --out " + out.string()), 2);
  const auto fail = write_config(degeneracy_doc("BlowUp"), "fail");
  EXPECT_EQ(cli("run --config " + fail.string() + " --out " + out.string()), 1);
  auto broken = degeneracy_doc("Stable");
  broken["field"]["kind"] = "swirl";
  EXPECT_EQ(cli("run --config " + write_config(broken, "broken").string() + " --out " + out.string()), 2);
  EXPECT_EQ(cli("run --config " + ok.string() + " --out /proc/homog_cannot_write"), 3);
  EXPECT_EQ(cli("run"), 2);
}

TEST(Io, SeedOverrideChangesResults) {
  const auto ok = write_config(degeneracy_doc("Stable"), "seed");
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(cli("run --config " + ok.string() + " --out " + a.string()), 0);
  ASSERT_EQ(cli("run --config " + ok.string() + " --out " + b.string() + " --seed-override 99"), 0);
  EXPECT_NE(slurp(a / "cells.csv"), slurp(b / "cells.csv"));
  const auto manifest = json::parse(slurp(b / "summary.json"));
  EXPECT_EQ(manifest["base_seed"], 99);
}

TEST(Io, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(HOMOG_CONFIGS)) {
    if (e.path().extension() != ".json") continue;
    ++n;
    EXPECT_NO_THROW(homog::load_config(e.path().string())) << e.path();
  }
  EXPECT_GE(n, 8u);
}

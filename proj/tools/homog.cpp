#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "homog/config.hpp"
#include "homog/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads;
  std::optional<std::string> out;
};

int run(const Flags& flags, const std::optional<homog::ExperimentKind>& expected) {
  using homog::ExitCode;
  try {
    std::ifstream in(flags.config);
    if (!in) throw homog::IoError("cannot read config '" + flags.config + "'");
    homog::json doc;
    try {
      doc = homog::json::parse(in, nullptr, true, true);
    } catch (const homog::json::parse_error& e) {
      throw homog::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw homog::ConfigError("config: expected an object");
    if (flags.seed_override) doc["base_seed"] = *flags.seed_override;
    if (flags.threads) doc["threads"] = *flags.threads;
    if (flags.out) doc["output_dir"] = *flags.out;
    const auto cfg = homog::parse_config(doc);
    if (expected && cfg.experiment != *expected)
      throw homog::ConfigError(std::string("config declares experiment '") + to_string(cfg.experiment) +
                               "' but the subcommand is '" + to_string(*expected) + "'");

    const auto result = homog::run_experiment(cfg);
    homog::write_artifacts(result, cfg, cfg.output_dir);
    std::printf("%s '%s': %s (%s/summary.json)\n", to_string(cfg.experiment), cfg.name.c_str(),
                result.passed() ? "PASS" : "FAIL", cfg.output_dir.c_str());
    for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!result.passed()) {
      for (const auto& c : result.checks)
        if (!c.passed) std::fprintf(stderr, "failed check %s: %s\n", c.name.c_str(), c.detail.dump().c_str());
      return static_cast<int>(ExitCode::AssertionFailed);
    }
    return static_cast<int>(ExitCode::Ok);
  } catch (const homog::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return static_cast<int>(ExitCode::Schema);
  } catch (const homog::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return static_cast<int>(ExitCode::Io);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "experiment failed: %s\n", e.what());
    return static_cast<int>(ExitCode::AssertionFailed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic homogenization experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed-override", seed, "replace base_seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory");
  };

  std::optional<homog::ExperimentKind> expected;
  CLI::App* generic = app.add_subcommand("run", "run whatever experiment the config declares");
  add_common(generic);
  for (auto k : {homog::ExperimentKind::Homogenize, homog::ExperimentKind::Degeneracy,
                 homog::ExperimentKind::PdeConvergence, homog::ExperimentKind::Obstacle,
                 homog::ExperimentKind::Ergodic}) {
    CLI::App* sub = app.add_subcommand(to_string(k), std::string("run a ") + to_string(k) + " experiment");
    add_common(sub);
    sub->callback([&expected, k] { expected = k; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(homog::ExitCode::Schema);
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed-override")) flags.seed_override = seed;
    if (sub->count("--threads")) flags.threads = threads;
    if (sub->count("--out")) flags.out = out;
  }
  return run(flags, expected);
}

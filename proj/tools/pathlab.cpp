// Experiment harness: runs verification suites from a TOML config and writes
// JSON/CSV reports. Exit status is nonzero iff any check fails.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pathlab/errors.hpp"
#include "pathlab/simd/kernels.hpp"
#include "pathlab/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pathlab: Monte Carlo verification suites for Brownian paths on embedded "
               "manifolds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string suite_override;
  std::string out_override;
  std::int64_t seed_override = -1;

  CLI::App* run = app.add_subcommand("run", "run the suites selected by a config file");
  run->add_option("--config", config_path, "TOML config file")->required();
  run->add_option("--suite", suite_override, "run a single suite, overriding the config");
  run->add_option("--out", out_override, "output directory for reports");
  run->add_option("--seed", seed_override, "seed override");

  CLI::App* list = app.add_subcommand("list-suites", "list available suite names");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& s : pathlab::suite_names()) std::cout << s << "\n";
    return 0;
  }

  try {
    pathlab::ExperimentConfig cfg = pathlab::parse_experiment_config_file(config_path);
    if (!suite_override.empty()) cfg.suites = {suite_override};
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (const char* env = std::getenv("PATHLAB_OUT")) cfg.out_dir = env;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

    std::cerr << "simd backend: " << pathlab::simd::backend_name() << "\n";
    auto reports = pathlab::run_experiment(cfg);
    int failures = 0;
    for (const auto& rep : reports) {
      for (const auto& row : rep.checks) {
        if (!row.pass) ++failures;
        std::cout << (row.pass ? "PASS " : "FAIL ") << rep.suite << "/" << row.name
                  << "  measured=" << row.measured << "  bound=" << row.bound << "\n";
      }
    }
    std::cout << (failures == 0 ? "all checks passed" : "checks failed") << " ("
              << reports.size() << " suites, reports in " << cfg.out_dir << ")\n";
    return failures == 0 ? 0 : 1;
  } catch (const pathlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pathlab/geometry.hpp"
#include "pathlab/toml.hpp"

namespace pathlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ExperimentConfig {
  ManifoldKind kind = ManifoldKind::Sphere;
  int dim = 2;
  double T = 1.0;
  int N = 1000;
  std::vector<int> refine;  // strictly increasing grid sizes for refinement rows
  std::uint64_t seed = 42;
  int samples = 10000;
  std::vector<std::string> suites;  // empty = all
  std::string out_dir = "reports";
  std::map<std::string, double> tolerances;  // per-row bound overrides
};

ExperimentConfig parse_experiment_config(const toml::Table& t);
ExperimentConfig parse_experiment_config_file(const std::string& path);

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  double stderr_of_mean = 0.0;  // 0 when not a Monte Carlo row
  double runtime_s = 0.0;
};

struct VerificationReport {
  std::string suite;
  std::string artifact_version = kArtifactVersion;
  std::uint64_t seed = 0;
  std::string config_echo;  // canonical JSON echo of the configuration
  std::string timing;       // the single volatile field: timestamp + row runtimes
  std::vector<CheckRow> checks;

  bool pass() const;
  const CheckRow* find(const std::string& name) const;
};

std::vector<std::string> suite_names();

// Acceptance-scale defaults per suite (the scales the criterion rows pin).
ExperimentConfig acceptance_defaults(const std::string& suite);

VerificationReport run_suite(const std::string& name, const ExperimentConfig& cfg);

// Runs the configured suites, writes report.json and per-suite CSV tables
// under cfg.out_dir, returns the reports. Check failures are recorded and do
// not stop the run.
std::vector<VerificationReport> run_experiment(const ExperimentConfig& cfg);

void write_report_files(const VerificationReport& rep, const std::string& out_dir);
std::string report_json(const VerificationReport& rep);

}  // namespace pathlab

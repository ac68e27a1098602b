// Acceptance suite: runs every verification suite at its pinned scale and
// prints one pass/fail line per acceptance criterion. Exit status is the
// number of failed checks.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "pathlab/simd/kernels.hpp"
#include "pathlab/suites.hpp"

int main() {
  using Clock = std::chrono::steady_clock;
  std::cout << "simd backend: " << pathlab::simd::backend_name() << "\n";

  std::vector<pathlab::VerificationReport> reports;
  int failed_rows = 0;
  for (const auto& suite : pathlab::suite_names()) {
    pathlab::ExperimentConfig cfg = pathlab::acceptance_defaults(suite);
    cfg.out_dir = "reports/acceptance";
    const auto t0 = Clock::now();
    pathlab::VerificationReport rep = pathlab::run_suite(suite, cfg);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    pathlab::write_report_files(rep, cfg.out_dir);
    std::printf("suite %-8s finished in %7.1f s\n", suite.c_str(), secs);
    for (const auto& row : rep.checks) {
      if (!row.pass) ++failed_rows;
      if (row.name.rfind("criterion_", 0) != 0 && !row.pass) {
        std::printf("  FAIL %s/%s  measured=%.6g  bound=%.6g\n", suite.c_str(),
                    row.name.c_str(), row.measured, row.bound);
      }
    }
    reports.push_back(std::move(rep));
  }

  // wall-clock budgets stated with the criteria
  const std::vector<std::pair<std::string, double>> budgets = {
      {"criterion_1_sde_heat_kernel", 60.0},   {"criterion_2_ito_map_derivative", 60.0},
      {"criterion_3_filtering", 300.0},        {"criterion_4_isometry_submersion", 5.0},
      {"criterion_5_noise_decomposition", 60.0}, {"criterion_6_h2_membership", 600.0},
      {"criterion_7_exterior_calculus", 120.0}, {"criterion_8_hodge_decomposition", 120.0}};

  std::printf("\nacceptance criteria\n");
  int criteria = 0;
  for (const auto& rep : reports) {
    for (const auto& row : rep.checks) {
      if (row.name.rfind("criterion_", 0) != 0) continue;
      ++criteria;
      double budget = 0.0;
      for (const auto& [name, b] : budgets)
        if (name == row.name) budget = b;
      const bool in_time = budget == 0.0 || row.runtime_s <= budget;
      if (!in_time) ++failed_rows;
      std::printf("%s  %-36s  worst_ratio=%.4g  runtime=%.1fs/%.0fs  (suite %s)\n",
                  row.pass && in_time ? "PASS" : "FAIL", row.name.c_str(), row.measured,
                  row.runtime_s, budget, rep.suite.c_str());
    }
  }
  std::printf("%d criteria, %d failed rows total\n", criteria, failed_rows);
  return failed_rows;
}

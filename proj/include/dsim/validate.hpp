#pragma once

#include <string>
#include <vector>

#include "dsim/config.hpp"

namespace dsim {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;   // measured worst violation or deviation
  double threshold = 0.0;  // the bound the residual is held to
  std::string note;
};

struct ValidationReport {
  std::vector<PropertyResult> results;
  double seconds = 0.0;

  bool all_passed() const;
};

/// Cross-module invariant suite at desk-scale sizes. Stochastic checks are
/// seeded from config.noise.seed, so the report is reproducible; threading
/// only affects the basin checks.
ValidationReport run_validation_suite(const ExperimentConfig& config,
                                      int n_threads = 0);

std::string to_json(const ValidationReport& report, int indent = 2);

}  // namespace dsim

#pragma once

#include <string>
#include <vector>

#include "dsim/config.hpp"

namespace dsim {

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 numerical failure, 3 validation failure
  std::vector<std::string> files;  // paths written, in emission order
  std::string manifest;            // manifest.json text as written
};

/// Lowercase, locale-independent float formatting at 17 significant digits;
/// the one formatter used for every table cell.
std::string format_float17(double v);

/// Dispatches on config.experiment. Each runner validates the config, writes
/// its table plus manifest.json into config.output.path (created if needed),
/// and reports numerical trouble through the exit code instead of throwing.
/// Table files are byte-identical across reruns of the same config; the
/// manifest carries wall-clock fields and is not.
RunOutcome run_experiment(const ExperimentConfig& config, int n_threads = 0);

RunOutcome run_trajectory(const ExperimentConfig& config);
RunOutcome run_basins(const ExperimentConfig& config, int n_threads = 0);
RunOutcome run_noise_curve(const ExperimentConfig& config);
RunOutcome run_schmidt_flow(const ExperimentConfig& config);
RunOutcome run_validate(const ExperimentConfig& config, int n_threads = 0);

}  // namespace dsim

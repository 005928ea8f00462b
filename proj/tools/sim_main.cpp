#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dsim/config.hpp"
#include "dsim/errors.hpp"
#include "dsim/runner.hpp"
#include "dsim/version.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  int threads = 0;
  std::int64_t seed = -1;  // negative = keep the configured seed
};

void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("-c,--config", opt.config_path,
                  "JSON configuration file (partial documents are merged "
                  "over the defaults)")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", opt.sets,
                  "Override one value as dotted.path=value; repeatable and "
                  "applied after --config");
  sub->add_option("-o,--out", opt.out_dir,
                  "Output directory (overrides output.path)");
  sub->add_option("--threads", opt.threads,
                  "Worker threads for basin maps, 0 = all cores");
  sub->add_option("--seed", opt.seed,
                  "Random seed (overrides noise.seed)");
}

int run(const std::string& experiment, const CommonOptions& opt) {
  dsim::ExperimentConfig config;
  if (!opt.config_path.empty())
    config = dsim::load_config_file(opt.config_path);
  config.experiment = dsim::experiment_from_string(experiment);
  for (const std::string& kv : opt.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--set expects dotted.path=value, got '" +
                                  kv + "'");
    dsim::apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opt.out_dir.empty()) config.output.path = opt.out_dir;
  if (opt.seed >= 0) config.noise.seed = static_cast<std::uint64_t>(opt.seed);
  config.validate();

  const dsim::RunOutcome outcome = dsim::run_experiment(config, opt.threads);
  for (const std::string& file : outcome.files)
    std::cout << "wrote " << file << "\n";
  if (outcome.exit_code == 2)
    std::cerr << "warning: numerical trouble, table may be partial (see "
                 "manifest.json)\n";
  if (outcome.exit_code == 3)
    std::cerr << "validation failed (see report.json)\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bipartite spin simulator: collapse dynamics, attractor "
               "basins, outcome statistics under orientation noise, and the "
               "reduced Schmidt-spectrum flow"};
  app.set_version_flag("--version", dsim::kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"trajectory", "Integrate one trajectory and tabulate its samples"},
      {"basins", "Label a grid of initial orientations by final attractor"},
      {"noise-curve", "Outcome probability vs tilt under orientation noise"},
      {"schmidt-flow", "Integrate the reduced Schmidt-spectrum flow"},
      {"validate", "Run the cross-module invariant suite"},
  };
  for (const auto& [name, help] : kinds) add_common(app.add_subcommand(name, help), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), opt);
  } catch (const dsim::ComputationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

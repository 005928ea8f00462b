#include "dsim/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "dsim/errors.hpp"
#include "dsim/measurement.hpp"
#include "dsim/schmidt_flow.hpp"
#include "dsim/validate.hpp"
#include "dsim/version.hpp"

namespace dsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class ColumnKind { real, integer };

struct Table {
  std::vector<std::string> columns;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<double>> rows;
};

std::string csv_text(const Table& t) {
  std::ostringstream out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out << ',';
    out << t.columns[c];
  }
  out << "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (t.kinds[c] == ColumnKind::integer)
        out << static_cast<long long>(row[c]);
      else
        out << format_float17(row[c]);
    }
    out << "\r\n";
  }
  return out.str();
}

json json_table(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (t.kinds[c] == ColumnKind::integer)
        r.push_back(static_cast<long long>(row[c]));
      else
        r.push_back(row[c]);  // NaN cells serialize as null
    }
    rows.push_back(std::move(r));
  }
  return json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ComputationError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw ComputationError("failed writing '" + path.string() + "'");
}

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Output-directory handle: collects written files, then stamps the manifest.
class Emitter {
 public:
  explicit Emitter(const ExperimentConfig& config)
      : config_(config),
        dir_(config.output.path),
        started_at_(utc_now()),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (!fs::is_directory(dir_))
      throw ComputationError("cannot create output directory '" +
                             dir_.string() + "'");
  }

  void table(const std::string& stem, const Table& t) {
    const bool as_json = config_.output.format == "json";
    const fs::path p = dir_ / (stem + (as_json ? ".json" : ".csv"));
    write_file(p, as_json ? json_table(t).dump(2) + "\n" : csv_text(t));
    files_.push_back(p.string());
  }

  void extra(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    write_file(p, text);
    files_.push_back(p.string());
  }

  RunOutcome finish(int exit_code, json summary) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    const json m{
        {"version", kVersion},
        {"config", json::parse(to_json(config_))},
        {"started_at", started_at_},
        {"duration_seconds", seconds},
        {"summary", std::move(summary)},
    };
    RunOutcome out;
    out.exit_code = exit_code;
    out.manifest = m.dump(2) + "\n";
    const fs::path p = dir_ / "manifest.json";
    write_file(p, out.manifest);
    files_.push_back(p.string());
    out.files = std::move(files_);
    return out;
  }

 private:
  const ExperimentConfig& config_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::string started_at_;
  std::chrono::steady_clock::time_point start_;
};

Table trajectory_table(const Trajectory& traj) {
  Table t;
  t.columns = {"t", "kx", "ky", "kz", "purity", "q_expectation", "norm_error"};
  t.kinds.assign(t.columns.size(), ColumnKind::real);
  t.rows.reserve(traj.samples.size());
  for (const auto& s : traj.samples)
    t.rows.push_back(
        {s.t, s.k(0), s.k(1), s.k(2), s.purity, s.q_expectation, s.norm_error});
  return t;
}

json trajectory_summary(const Trajectory& traj) {
  if (traj.samples.empty()) return json::object();
  const auto& last = traj.samples.back();
  return json{
      {"rows", traj.samples.size()},
      {"accepted_steps", traj.accepted_steps},
      {"rejected_steps", traj.rejected_steps},
      {"final_t", last.t},
      {"final_purity", last.purity},
      {"final_k", {last.k(0), last.k(1), last.k(2)}},
      {"final_norm_error", last.norm_error},
  };
}

}  // namespace

std::string format_float17(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

RunOutcome run_trajectory(const ExperimentConfig& config) {
  config.validate();
  Emitter emit(config);
  const DipolarHamiltonian ham =
      dipolar_hamiltonian(config.s1(), config.s2(), config.rates.omega_d,
                          config.geometry.u_d.direction());
  const GammaPolicy policy =
      config.rates.gamma_mode == "coupling"
          ? GammaPolicy::coupling_driven(ham.matrix)
          : GammaPolicy::constant(config.rates.gamma);
  const PureState psi0 = product_state(
      coherent_state(config.s1(), config.geometry.n1.direction()),
      coherent_state(config.s2(), config.geometry.n2.direction()));
  try {
    const Trajectory traj = integrate(psi0, ham.matrix, policy, config.sim);
    emit.table("trajectory", trajectory_table(traj));
    return emit.finish(0, trajectory_summary(traj));
  } catch (const StiffnessError& e) {
    const Trajectory& partial = *e.partial();
    if (!partial.samples.empty())
      emit.table("trajectory", trajectory_table(partial));
    json summary = trajectory_summary(partial);
    summary["error"] = e.what();
    return emit.finish(2, std::move(summary));
  }
}

RunOutcome run_basins(const ExperimentConfig& config, int n_threads) {
  config.validate();
  Emitter emit(config);
  const SphereGrid grid =
      SphereGrid::regular(config.basins.n_theta, config.basins.n_phi);
  BasinSetup setup;
  setup.s1 = config.s1();
  setup.s2 = config.s2();
  setup.gamma = config.rates.gamma;
  setup.omega_d = config.rates.omega_d;
  setup.coupling_driven_gamma = config.rates.gamma_mode == "coupling";
  setup.u_d = config.geometry.u_d.direction();
  setup.n2 = config.geometry.n2.direction();
  setup.sim = config.sim;
  setup.eps = config.basins.eps;
  const BasinMap map = basin_map(grid, setup, n_threads);

  Table t;
  t.columns = {"theta1", "phi1", "label"};
  t.kinds = {ColumnKind::real, ColumnKind::real, ColumnKind::integer};
  t.rows.reserve(map.grid.size());
  int plus = 0;
  int minus = 0;
  int unresolved = 0;
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    const int label = static_cast<int>(map.labels[i]);
    if (label > 0)
      ++plus;
    else if (label < 0)
      ++minus;
    else
      ++unresolved;
    t.rows.push_back(
        {map.grid.thetas[i], map.grid.phis[i], static_cast<double>(label)});
  }
  emit.table("basins", t);
  const json summary{
      {"rows", t.rows.size()},         {"plus", plus},
      {"minus", minus},                {"unresolved", unresolved},
      {"failures", map.failure_count},
  };
  return emit.finish(map.failure_count > 0 ? 2 : 0, summary);
}

RunOutcome run_noise_curve(const ExperimentConfig& config) {
  config.validate();
  Emitter emit(config);
  const WrappedCauchy dist{config.noise.phi0};
  const int n = config.noise.theta_grid_size;

  Table t;
  t.columns = {"theta1", "p_plus", "born", "step"};
  t.kinds.assign(t.columns.size(), ColumnKind::real);
  t.rows.reserve(n);
  int failed = 0;
  for (int i = 0; i < n; ++i) {
    const double theta = kPi * (static_cast<double>(i) / (n - 1));
    double p = std::numeric_limits<double>::quiet_NaN();
    try {
      p = p_plus(theta, dist);
    } catch (const ComputationError&) {
      ++failed;
    }
    const double step =
        theta < 0.5 * kPi ? 1.0 : (theta > 0.5 * kPi ? 0.0 : 0.5);
    t.rows.push_back({theta, p, born_rule(theta), step});
  }
  emit.table("noise", t);
  const json summary{
      {"rows", t.rows.size()},
      {"failed_points", failed},
      {"phi0", config.noise.phi0},
  };
  return emit.finish(failed > 0 ? 2 : 0, summary);
}

RunOutcome run_schmidt_flow(const ExperimentConfig& config) {
  config.validate();
  Emitter emit(config);
  const int m = config.flow.m;
  Eigen::VectorXd q =
      Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  q(0) *= 1.0 + config.flow.perturbation;
  q /= q.norm();
  const FlowState start{q, config.rates.gamma};

  auto table_of = [&](const FlowResult& res) {
    Table t;
    t.columns = {"t"};
    for (int l = 1; l <= m; ++l) t.columns.push_back("q_" + std::to_string(l));
    t.columns.push_back("L4");
    t.columns.push_back("entropy");
    t.kinds.assign(t.columns.size(), ColumnKind::real);
    t.rows.reserve(res.samples.size());
    for (const auto& s : res.samples) {
      std::vector<double> row;
      row.reserve(t.columns.size());
      row.push_back(s.t);
      for (int l = 0; l < m; ++l) row.push_back(s.q(l));
      row.push_back(s.l4);
      row.push_back(s.entropy);
      t.rows.push_back(std::move(row));
    }
    return t;
  };

  try {
    const FlowResult res = integrate_flow(start, config.flow.t_max, config.sim);
    emit.table("flow", table_of(res));

    // Differential check against the full dynamics at a handful of times.
    std::vector<double> grid;
    constexpr int kCheckpoints = 8;
    for (int i = 0; i <= kCheckpoints; ++i)
      grid.push_back(config.flow.t_max * i / kCheckpoints);
    const double deviation =
        cross_check_full(start, BipartiteShape{m, m}, grid, config.sim);

    const auto& last = res.samples.back();
    const json summary{
        {"rows", res.samples.size()},
        {"final_t", last.t},
        {"final_l4", last.l4},
        {"final_entropy", last.entropy},
        {"unique_attractor", res.unique_attractor},
        {"attractor_index", res.attractor_index},
        {"cross_check_deviation", deviation},
    };
    return emit.finish(0, summary);
  } catch (const FlowStiffnessError& e) {
    const FlowResult& partial = *e.partial();
    if (!partial.samples.empty()) emit.table("flow", table_of(partial));
    json summary{{"rows", partial.samples.size()}, {"error", e.what()}};
    return emit.finish(2, std::move(summary));
  }
}

RunOutcome run_validate(const ExperimentConfig& config, int n_threads) {
  config.validate();
  Emitter emit(config);
  const ValidationReport report = run_validation_suite(config, n_threads);
  emit.extra("report.json", to_json(report) + "\n");
  int passed = 0;
  for (const auto& r : report.results) passed += r.passed ? 1 : 0;
  const json summary{
      {"properties", report.results.size()},
      {"passed", passed},
      {"failed", report.results.size() - passed},
      {"suite_seconds", report.seconds},
  };
  return emit.finish(report.all_passed() ? 0 : 3, summary);
}

RunOutcome run_experiment(const ExperimentConfig& config, int n_threads) {
  switch (config.experiment) {
    case ExperimentKind::trajectory: return run_trajectory(config);
    case ExperimentKind::basins: return run_basins(config, n_threads);
    case ExperimentKind::noise_curve: return run_noise_curve(config);
    case ExperimentKind::schmidt_flow: return run_schmidt_flow(config);
    case ExperimentKind::validate: return run_validate(config, n_threads);
  }
  throw std::invalid_argument("run_experiment: unhandled experiment kind");
}

}  // namespace dsim

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "dsim/config.hpp"
#include "dsim/runner.hpp"
#include "dsim/validate.hpp"

using namespace dsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::path("runner_scratch") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir.parent_path(), ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> crlf_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find("\r\n", pos);
    REQUIRE(eol != std::string::npos);  // every line CRLF-terminated
    lines.push_back(text.substr(pos, eol - pos));
    pos = eol + 2;
  }
  return lines;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double cell_value(const std::string& cell) {
  return std::strtod(cell.c_str(), nullptr);
}

ExperimentConfig base_config(ExperimentKind kind, const fs::path& dir) {
  ExperimentConfig c;
  c.experiment = kind;
  c.output.path = dir.string();
  return c;
}

}  // namespace

TEST_CASE("trajectory run writes table and manifest") {
  Scratch scratch("trajectory");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  cfg.sim.t_max = 2.0;

  const RunOutcome outcome = run_trajectory(cfg);
  CHECK(outcome.exit_code == 0);
  REQUIRE(outcome.files.size() == 2);

  const std::string csv = slurp(scratch.dir / "trajectory.csv");
  const auto lines = crlf_lines(csv);
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "t,kx,ky,kz,purity,q_expectation,norm_error");
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(cells(lines[i]).size() == 7);

  // First sample is the initial product state: t = 0, purity 1.
  const auto first = cells(lines[1]);
  CHECK(cell_value(first[0]) == 0.0);
  CHECK(cell_value(first[4]) == doctest::Approx(1.0).epsilon(1e-12));
  // Time column strictly increases and ends at t_max.
  double prev = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double t = cell_value(cells(lines[i])[0]);
    CHECK(t > prev);
    prev = t;
  }
  CHECK(prev == doctest::Approx(2.0).epsilon(1e-12));

  const json manifest = json::parse(slurp(scratch.dir / "manifest.json"));
  CHECK(manifest.at("version") == "0.1.0");
  CHECK(manifest.at("duration_seconds").is_number());
  CHECK(manifest.at("summary").at("rows").get<std::size_t>() ==
        lines.size() - 1);
  // The embedded config echo parses back to the exact configuration.
  const ExperimentConfig echoed = parse_config(manifest.at("config").dump());
  CHECK(echoed == cfg);
}

TEST_CASE("trajectory tables are byte-identical across reruns") {
  Scratch scratch("determinism");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  cfg.sim.t_max = 1.0;

  run_trajectory(cfg);
  const std::string first = slurp(scratch.dir / "trajectory.csv");
  run_trajectory(cfg);
  CHECK(slurp(scratch.dir / "trajectory.csv") == first);
}

TEST_CASE("trajectory run reaches the expected attractor") {
  Scratch scratch("collapse");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  // Spin-1/2 tilted into the +x hemisphere, drive axis along +x.
  apply_override(cfg, "geometry.u_d", "[\"0.5pi\", \"0\"]");
  apply_override(cfg, "geometry.n1", "[\"0.55pi\", \"0.45pi\"]");
  cfg.validate();

  const RunOutcome outcome = run_trajectory(cfg);
  CHECK(outcome.exit_code == 0);
  const auto lines = crlf_lines(slurp(scratch.dir / "trajectory.csv"));
  const auto last = cells(lines.back());
  CHECK(cell_value(last[4]) > 0.99);       // purity
  CHECK(cell_value(last[1]) > 0.99);       // kx
}

TEST_CASE("trajectory with gamma 0 conserves the norm") {
  Scratch scratch("unitary");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  cfg.rates.gamma = 0.0;
  cfg.sim.t_max = 5.0;
  cfg.sim.renorm_each_step = false;

  run_trajectory(cfg);
  const auto lines = crlf_lines(slurp(scratch.dir / "trajectory.csv"));
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(cell_value(cells(lines[i])[6]) < 1e-8);
}

TEST_CASE("trajectory with t_max 0 emits the single initial row") {
  Scratch scratch("degenerate");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  cfg.sim.t_max = 0.0;

  const RunOutcome outcome = run_trajectory(cfg);
  CHECK(outcome.exit_code == 0);
  const auto lines = crlf_lines(slurp(scratch.dir / "trajectory.csv"));
  REQUIRE(lines.size() == 2);
  CHECK(cell_value(cells(lines[1])[0]) == 0.0);
}

TEST_CASE("json output format") {
  Scratch scratch("jsonfmt");
  ExperimentConfig cfg = base_config(ExperimentKind::trajectory, scratch.dir);
  cfg.sim.t_max = 0.5;
  cfg.output.format = "json";

  run_trajectory(cfg);
  const json doc = json::parse(slurp(scratch.dir / "trajectory.json"));
  REQUIRE(doc.at("columns").size() == 7);
  CHECK(doc.at("columns")[0] == "t");
  REQUIRE(doc.at("rows").size() >= 2);
  CHECK(doc.at("rows")[0].size() == 7);
  CHECK(doc.at("rows")[0][4].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("basin run labels a coarse grid") {
  Scratch scratch("basins");
  ExperimentConfig cfg = base_config(ExperimentKind::basins, scratch.dir);
  cfg.basins.n_theta = 4;
  cfg.basins.n_phi = 8;
  // Perpendicular drive: attractors are the +-x poles.
  apply_override(cfg, "geometry.u_d", "[\"0.5pi\", \"0\"]");
  cfg.validate();

  const RunOutcome outcome = run_basins(cfg, 0);
  CHECK(outcome.exit_code == 0);
  const auto lines = crlf_lines(slurp(scratch.dir / "basins.csv"));
  CHECK(lines[0] == "theta1,phi1,label");
  REQUIRE(lines.size() == 1 + 4 * 8);
  int resolved = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = cells(lines[i]);
    REQUIRE(row.size() == 3);
    const double theta = cell_value(row[0]);
    const double phi = cell_value(row[1]);
    const int label = std::atoi(row[2].c_str());
    CHECK(label >= -1);
    CHECK(label <= 1);
    // Label column is written as a bare integer.
    CHECK(row[2].find('.') == std::string::npos);
    const double along = std::sin(theta) * std::cos(phi);
    if (std::abs(along) > 0.05) {
      CHECK(label == (along > 0.0 ? 1 : -1));
      ++resolved;
    }
  }
  CHECK(resolved > 0);

  const json manifest = json::parse(slurp(scratch.dir / "manifest.json"));
  const auto& summary = manifest.at("summary");
  CHECK(summary.at("plus").get<int>() + summary.at("minus").get<int>() +
            summary.at("unresolved").get<int>() ==
        4 * 8);

  // Byte-identical rerun (thread count must not matter either).
  const std::string first = slurp(scratch.dir / "basins.csv");
  run_basins(cfg, 3);
  CHECK(slurp(scratch.dir / "basins.csv") == first);
}

TEST_CASE("noise curve run") {
  Scratch scratch("noise");
  ExperimentConfig cfg = base_config(ExperimentKind::noise_curve, scratch.dir);
  cfg.noise.theta_grid_size = 21;

  const RunOutcome outcome = run_noise_curve(cfg);
  CHECK(outcome.exit_code == 0);
  const auto lines = crlf_lines(slurp(scratch.dir / "noise.csv"));
  CHECK(lines[0] == "theta1,p_plus,born,step");
  REQUIRE(lines.size() == 22);

  std::vector<double> theta(21), p(21), born(21), step(21);
  for (int i = 0; i < 21; ++i) {
    const auto row = cells(lines[i + 1]);
    REQUIRE(row.size() == 4);
    theta[i] = cell_value(row[0]);
    p[i] = cell_value(row[1]);
    born[i] = cell_value(row[2]);
    step[i] = cell_value(row[3]);
  }
  CHECK(theta[0] == 0.0);
  CHECK(theta[20] == doctest::Approx(kPi).epsilon(1e-15));
  // Midpoint of an odd grid lands exactly on the equator.
  CHECK(step[10] == 0.5);
  CHECK(born[10] == doctest::Approx(0.5).epsilon(1e-15));
  for (int i = 0; i < 21; ++i) {
    CHECK(std::abs(p[i] + p[20 - i] - 1.0) < 1e-6);
    CHECK(born[i] == doctest::Approx(std::cos(0.5 * theta[i]) *
                                     std::cos(0.5 * theta[i]))
                         .epsilon(1e-12));
    CHECK(step[i] == (i < 10 ? 1.0 : (i > 10 ? 0.0 : 0.5)));
  }
}

TEST_CASE("noise curve approaches a coin flip for wide noise") {
  Scratch scratch("widenoise");
  ExperimentConfig cfg = base_config(ExperimentKind::noise_curve, scratch.dir);
  cfg.noise.theta_grid_size = 5;
  cfg.noise.phi0 = 50.0;

  run_noise_curve(cfg);
  const auto lines = crlf_lines(slurp(scratch.dir / "noise.csv"));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = cells(lines[i]);
    CHECK(std::abs(cell_value(row[1]) - 0.5) < 1e-3);
  }
}

TEST_CASE("schmidt flow run reaches the single-term attractor") {
  Scratch scratch("flow");
  ExperimentConfig cfg = base_config(ExperimentKind::schmidt_flow, scratch.dir);

  const RunOutcome outcome = run_schmidt_flow(cfg);
  CHECK(outcome.exit_code == 0);
  const auto lines = crlf_lines(slurp(scratch.dir / "flow.csv"));
  CHECK(cells(lines[0]).size() == 13);  // t, q_1..q_10, L4, entropy
  CHECK(cells(lines[0])[1] == "q_1");
  const auto last = cells(lines.back());
  CHECK(cell_value(last[11]) > 1.0 - 1e-6);  // L4
  CHECK(cell_value(last[12]) < 1e-5);        // entropy

  const json manifest = json::parse(slurp(scratch.dir / "manifest.json"));
  CHECK(manifest.at("summary").at("cross_check_deviation").get<double>() <
        1e-6);
}

TEST_CASE("schmidt flow with one term is stationary") {
  Scratch scratch("flow1");
  ExperimentConfig cfg = base_config(ExperimentKind::schmidt_flow, scratch.dir);
  cfg.flow.m = 1;
  cfg.flow.t_max = 5.0;

  run_schmidt_flow(cfg);
  const auto lines = crlf_lines(slurp(scratch.dir / "flow.csv"));
  REQUIRE(lines.size() >= 3);
  const auto ref = cells(lines[1]);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto row = cells(lines[i]);
    for (std::size_t c = 1; c < row.size(); ++c) CHECK(row[c] == ref[c]);
  }
}

TEST_CASE("run_experiment dispatches on the experiment kind") {
  Scratch scratch("dispatch");
  ExperimentConfig cfg = base_config(ExperimentKind::noise_curve, scratch.dir);
  cfg.noise.theta_grid_size = 3;
  const RunOutcome outcome = run_experiment(cfg);
  CHECK(outcome.exit_code == 0);
  CHECK(fs::exists(scratch.dir / "noise.csv"));
}

TEST_CASE("validation suite passes and writes its report") {
  Scratch scratch("validate");
  ExperimentConfig cfg = base_config(ExperimentKind::validate, scratch.dir);

  const RunOutcome outcome = run_validate(cfg, 0);
  CHECK(outcome.exit_code == 0);

  const json report = json::parse(slurp(scratch.dir / "report.json"));
  CHECK(report.at("all_passed").get<bool>());
  REQUIRE(report.at("properties").size() >= 25);
  for (const auto& prop : report.at("properties")) {
    INFO(prop.at("name").get<std::string>(), ": residual ",
         prop.at("residual").dump(), " note ",
         prop.at("note").get<std::string>());
    CHECK(prop.at("passed").get<bool>());
  }

  const json manifest = json::parse(slurp(scratch.dir / "manifest.json"));
  CHECK(manifest.at("summary").at("failed").get<int>() == 0);
}

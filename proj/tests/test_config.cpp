#include <cmath>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "dsim/config.hpp"

using dsim::ExperimentConfig;
using dsim::ExperimentKind;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("defaults describe the tilted-axis collapse run") {
  ExperimentConfig c;
  c.validate();
  CHECK(c.experiment == ExperimentKind::trajectory);
  CHECK(c.spins.two_s1 == 1);
  CHECK(c.spins.two_s2 == 21);
  CHECK(c.rates.gamma_mode == "constant");
  CHECK(c.rates.gamma == 1.0);
  CHECK(c.rates.omega_d == 1.0);
  CHECK(c.geometry.u_d.theta == doctest::Approx(0.375 * kPi));
  CHECK(c.geometry.u_d.phi == doctest::Approx(0.75 * kPi));
  CHECK(c.geometry.n1.theta == doctest::Approx(0.5 * kPi));
  CHECK(c.geometry.n2.theta == doctest::Approx(kPi));
  CHECK(c.sim.t_max == 30.0);
  CHECK(c.sim.renorm_each_step);
  CHECK(c.noise.phi0 == 0.5);
  CHECK(c.noise.theta_grid_size == 181);
  CHECK(c.noise.mc_samples == 10000000);
  CHECK(c.noise.seed == 12345);
  CHECK(c.basins.n_theta == 36);
  CHECK(c.basins.n_phi == 72);
  CHECK(c.flow.m == 10);
  CHECK(c.flow.t_max == 40.0);
  CHECK(c.output.format == "csv");
  // The default direction of the second spin is straight down.
  CHECK(c.geometry.n2.direction().z == doctest::Approx(-1.0));
}

TEST_CASE("angle literals") {
  CHECK(dsim::parse_angle("0.55pi") == doctest::Approx(0.55 * kPi));
  CHECK(dsim::parse_angle("pi") == doctest::Approx(kPi));
  CHECK(dsim::parse_angle("-pi") == doctest::Approx(-kPi));
  CHECK(dsim::parse_angle("2pi") == doctest::Approx(2.0 * kPi));
  CHECK(dsim::parse_angle("0.5 pi") == doctest::Approx(0.5 * kPi));
  CHECK(dsim::parse_angle("0.5*pi") == doctest::Approx(0.5 * kPi));
  CHECK(dsim::parse_angle("1.25") == doctest::Approx(1.25));
  CHECK(dsim::parse_angle(" -3e-2 ") == doctest::Approx(-0.03));
  CHECK(dsim::parse_angle("0") == 0.0);
  CHECK_THROWS_AS(dsim::parse_angle(""), std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_angle("abc"), std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_angle("pipi"), std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_angle("1.2.3"), std::invalid_argument);
}

TEST_CASE("experiment names round-trip and accept hyphens") {
  for (auto k : {ExperimentKind::trajectory, ExperimentKind::basins,
                 ExperimentKind::noise_curve, ExperimentKind::schmidt_flow,
                 ExperimentKind::validate})
    CHECK(dsim::experiment_from_string(dsim::to_string(k)) == k);
  CHECK(dsim::experiment_from_string("noise-curve") ==
        ExperimentKind::noise_curve);
  CHECK(dsim::experiment_from_string("schmidt-flow") ==
        ExperimentKind::schmidt_flow);
  CHECK_THROWS_AS(dsim::experiment_from_string("frobnicate"),
                  std::invalid_argument);
}

TEST_CASE("partial documents override only what they name") {
  const std::string doc = R"({
    "experiment": "noise-curve",
    "sim": {"t_max": 12.5},
    "geometry": {"n1": ["0.55pi", "0.45pi"]},
    "noise": {"mc_samples": 1e6}
  })";
  ExperimentConfig c = dsim::parse_config(doc);
  CHECK(c.experiment == ExperimentKind::noise_curve);
  CHECK(c.sim.t_max == 12.5);
  CHECK(c.sim.dt_initial == 1e-3);  // untouched default
  CHECK(c.geometry.n1.theta == doctest::Approx(0.55 * kPi));
  CHECK(c.geometry.n1.phi == doctest::Approx(0.45 * kPi));
  CHECK(c.geometry.u_d.theta == doctest::Approx(0.375 * kPi));
  CHECK(c.noise.mc_samples == 1000000);
  CHECK(c.spins.two_s2 == 21);
}

TEST_CASE("angle pairs accept object form with pi strings") {
  ExperimentConfig c = dsim::parse_config(
      R"({"geometry": {"u_d": {"theta": "0.25pi", "phi": 1.0}}})");
  CHECK(c.geometry.u_d.theta == doctest::Approx(0.25 * kPi));
  CHECK(c.geometry.u_d.phi == 1.0);
  // Partial object form keeps the other member at its default.
  ExperimentConfig d = dsim::parse_config(
      R"({"geometry": {"n1": {"phi": "0.1pi"}}})");
  CHECK(d.geometry.n1.theta == doctest::Approx(0.5 * kPi));
  CHECK(d.geometry.n1.phi == doctest::Approx(0.1 * kPi));
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_AS(dsim::parse_config(R"({"simm": {}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config(R"({"sim": {"dtt": 1}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config(R"({"geometry": {"u_d": {"thet": 1}}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config("[1,2]"), std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config("{ not json"), std::invalid_argument);
}

TEST_CASE("type errors are rejected") {
  CHECK_THROWS_AS(dsim::parse_config(R"({"sim": {"t_max": "soon"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config(R"({"noise": {"mc_samples": 2.5}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config(R"({"noise": {"seed": -3}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      dsim::parse_config(R"({"sim": {"renorm_each_step": 1}})"),
      std::invalid_argument);
  CHECK_THROWS_AS(dsim::parse_config(R"({"geometry": {"n1": [0.1]}})"),
                  std::invalid_argument);
}

TEST_CASE("validation catches out-of-range fields") {
  auto expect_reject = [](const std::string& doc) {
    CHECK_THROWS_AS(dsim::parse_config(doc), std::invalid_argument);
  };
  expect_reject(R"({"spins": {"two_s1": 0}})");
  expect_reject(R"({"spins": {"two_s1": 127, "two_s2": 127}})");  // over cap
  expect_reject(R"({"rates": {"gamma": -1}})");
  expect_reject(R"({"rates": {"gamma_mode": "sometimes"}})");
  expect_reject(R"({"noise": {"phi0": 0}})");
  expect_reject(R"({"noise": {"theta_grid_size": 1}})");
  expect_reject(R"({"basins": {"eps": 0.6}})");
  expect_reject(R"({"flow": {"m": 0}})");
  expect_reject(R"({"output": {"format": "xml"}})");
  expect_reject(R"({"sim": {"rel_tol": 0}})");
  // Degenerate but legal: zero-length run.
  ExperimentConfig c = dsim::parse_config(R"({"sim": {"t_max": 0}})");
  CHECK(c.sim.t_max == 0.0);
}

TEST_CASE("json echo round-trips to an equal config") {
  ExperimentConfig a;
  CHECK(dsim::parse_config(dsim::to_json(a)) == a);

  ExperimentConfig b = dsim::parse_config(R"({
    "experiment": "basins",
    "spins": {"two_s1": 3, "two_s2": 9},
    "rates": {"gamma_mode": "coupling", "gamma": 0.7, "omega_d": 2.25},
    "geometry": {"u_d": ["0.123pi", "0.456pi"], "n2": [2.0, -0.5]},
    "sim": {"t_max": 7.75, "rel_tol": 1e-9, "sample_stride": 3,
            "renorm_each_step": false},
    "noise": {"phi0": 0.001, "mc_samples": 12345678901, "seed": 987654321},
    "basins": {"n_theta": 5, "n_phi": 7, "eps": 0.02},
    "flow": {"m": 4, "perturbation": 0.25, "t_max": 13.5},
    "output": {"path": "out/run1", "format": "json"}
  })");
  CHECK(dsim::parse_config(dsim::to_json(b)) == b);
  CHECK(b.noise.mc_samples == 12345678901ULL);

  // Awkward non-representable decimals still round-trip exactly.
  ExperimentConfig d;
  d.sim.t_max = 1.0 / 3.0;
  d.geometry.n1.theta = std::nextafter(kPi, 4.0);
  CHECK(dsim::parse_config(dsim::to_json(d)) == d);
}

TEST_CASE("dotted-path overrides") {
  ExperimentConfig c;
  dsim::apply_override(c, "sim.t_max", "7.5");
  CHECK(c.sim.t_max == 7.5);
  dsim::apply_override(c, "geometry.n1.theta", "0.3pi");
  CHECK(c.geometry.n1.theta == doctest::Approx(0.3 * kPi));
  dsim::apply_override(c, "geometry.u_d", R"(["0.1pi", "0.2pi"])");
  CHECK(c.geometry.u_d.theta == doctest::Approx(0.1 * kPi));
  CHECK(c.geometry.u_d.phi == doctest::Approx(0.2 * kPi));
  dsim::apply_override(c, "output.format", "json");
  CHECK(c.output.format == "json");
  dsim::apply_override(c, "noise.seed", "42");
  CHECK(c.noise.seed == 42);
  dsim::apply_override(c, "sim.renorm_each_step", "false");
  CHECK_FALSE(c.sim.renorm_each_step);
  dsim::apply_override(c, "experiment", "schmidt-flow");
  CHECK(c.experiment == ExperimentKind::schmidt_flow);
  c.validate();

  CHECK_THROWS_AS(dsim::apply_override(c, "sim.bogus", "1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::apply_override(c, "sim..t_max", "1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dsim::apply_override(c, "sim.t_max.deep", "1"),
                  std::invalid_argument);

  // Overrides do not validate; a transiently inconsistent pair is fine.
  ExperimentConfig d;
  dsim::apply_override(d, "sim.t_max", "1e-4");
  dsim::apply_override(d, "sim.dt_initial", "1e-5");
  d.validate();
  CHECK(d.sim.dt_initial == 1e-5);
}

TEST_CASE("config files load through the same parser") {
  const std::string path = "test_config_tmp.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    const std::string doc = R"({"sim": {"t_max": 3.5}})";
    std::fwrite(doc.data(), 1, doc.size(), f);
    std::fclose(f);
  }
  ExperimentConfig c = dsim::load_config_file(path);
  CHECK(c.sim.t_max == 3.5);
  std::remove(path.c_str());
  CHECK_THROWS_AS(dsim::load_config_file("no_such_file.json"),
                  std::invalid_argument);
}

#pragma once

#include <cstdint>
#include <string>

#include "dsim/dynamics.hpp"
#include "dsim/spin.hpp"

namespace dsim {

inline constexpr double kPi = 3.14159265358979323846;

enum class ExperimentKind {
  trajectory,
  basins,
  noise_curve,
  schmidt_flow,
  validate,
};

std::string to_string(ExperimentKind kind);

/// Accepts the canonical snake_case names and the hyphenated spellings used
/// on the command line ("noise-curve", "schmidt-flow").
ExperimentKind experiment_from_string(const std::string& name);

/// Parses an angle literal: a plain number in radians, or a multiple of pi
/// written with a "pi" suffix ("0.55pi", "pi", "-pi").
double parse_angle(const std::string& text);

/// Polar direction (colatitude, azimuth) in radians.
struct AnglePair {
  double theta = 0.0;
  double phi = 0.0;

  UnitVector3 direction() const { return UnitVector3::from_angles(theta, phi); }
  bool operator==(const AnglePair&) const = default;
};

struct SpinSection {
  int two_s1 = 1;
  int two_s2 = 21;
  bool operator==(const SpinSection&) const = default;
};

struct RateSection {
  std::string gamma_mode = "constant";  // "constant" | "coupling"
  double gamma = 1.0;
  double omega_d = 1.0;
  bool operator==(const RateSection&) const = default;
};

struct GeometrySection {
  AnglePair u_d{0.375 * kPi, 0.75 * kPi};
  AnglePair n1{0.5 * kPi, 0.5 * kPi};
  AnglePair n2{kPi, 0.0};
  bool operator==(const GeometrySection&) const = default;
};

struct NoiseSection {
  double phi0 = 0.5;
  int theta_grid_size = 181;
  std::uint64_t mc_samples = 10000000;
  std::uint64_t seed = 12345;
  bool operator==(const NoiseSection&) const = default;
};

struct BasinSection {
  int n_theta = 36;
  int n_phi = 72;
  double eps = 0.01;
  bool operator==(const BasinSection&) const = default;
};

struct FlowSection {
  int m = 10;
  double perturbation = 1e-3;  // relative bump of the largest component
  double t_max = 40.0;
  bool operator==(const FlowSection&) const = default;
};

struct OutputSection {
  std::string path = ".";
  std::string format = "csv";  // "csv" | "json"
  bool operator==(const OutputSection&) const = default;
};

/// Full experiment description. The defaults reproduce the tilted-axis
/// collapse run (spin 1/2 against spin 21/2, gamma = omega_d = 1).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::trajectory;
  SpinSection spins;
  RateSection rates;
  GeometrySection geometry;
  SimConfig sim;
  NoiseSection noise;
  BasinSection basins;
  FlowSection flow;
  OutputSection output;

  SpinQuantumNumber s1() const { return SpinQuantumNumber{spins.two_s1}; }
  SpinQuantumNumber s2() const { return SpinQuantumNumber{spins.two_s2}; }

  /// Throws std::invalid_argument on any out-of-range or inconsistent field.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a JSON document. Missing keys keep their defaults; unknown keys are
/// rejected. Angle-valued entries accept numbers or "...pi" strings, as
/// either [theta, phi] arrays or {"theta":., "phi":.} objects. The result is
/// validated.
ExperimentConfig parse_config(const std::string& json_text);

ExperimentConfig load_config_file(const std::string& path);

/// Applies one dotted-path override such as ("sim.t_max", "30") or
/// ("geometry.n1", "[\"0.55pi\",\"0.45pi\"]"). The value is parsed as JSON
/// when it scans as JSON, otherwise taken as a bare string. Unknown paths are
/// rejected. Does not validate, so a sequence of overrides may pass through
/// transiently inconsistent states; call validate() after the last one.
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

/// Canonical full-document echo; parse_config(to_json(c)) reproduces c
/// exactly.
std::string to_json(const ExperimentConfig& config, int indent = 2);

}  // namespace dsim

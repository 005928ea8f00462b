#pragma once

#include <cstdint>
#include <vector>

#include "dsim/dynamics.hpp"
#include "dsim/spin.hpp"

namespace dsim {

/// Angular noise model: the polar deviation away from the noise-free
/// direction follows this distribution; the azimuth about it is uniform.
struct WrappedCauchy {
  double phi0 = 0.5;  // scale, radians

  void validate() const;
};

/// f(phi_r) = (1/2pi) sinh(phi0) / (cosh(phi0) - cos(phi_r)); 2pi-periodic.
double wrapped_cauchy_pdf(double phi_r, const WrappedCauchy& dist);

/// cos^2(theta1/2).
double born_rule(double theta1);

/// Share of the azimuth circle at polar angle alpha around a direction of
/// polar angle theta1 that lies in the z >= 0 hemisphere, in [0, 1].
double arc_fraction(double theta1, double alpha);

/// Probability that the noise-rotated direction lands in the upper
/// hemisphere. Evaluated as the 1D integral p = int_0^pi 2 f(a) w(a) da in
/// noise-centered coordinates, where w is arc_fraction; the integrable
/// singularity of the naive spherical form cancels exactly in this reduction.
/// Throws ComputationError when the quadrature error estimate exceeds 1e-4.
double p_plus(double theta1, const WrappedCauchy& dist);

/// The same probability via raw 2D spherical quadrature with a small cap of
/// radius 1e-4 excised around each singular point (its contribution is added
/// back in closed form). Slower; kept as an independent cross-check.
double p_plus_quadrature_2d(double theta1, const WrappedCauchy& dist);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

/// Sampling route: draw the polar deviation through the inverse CDF of the
/// unwrapped distribution, wrap, pick a uniform azimuth, count hemisphere
/// hits. Deterministic for a fixed seed.
MonteCarloEstimate p_plus_monte_carlo(double theta1, const WrappedCauchy& dist,
                                      std::uint64_t n_samples,
                                      std::uint64_t seed);

struct NoisePoint {
  double theta1 = 0.0;
  double p_plus = 0.0;
  double born = 0.0;
  double step = 0.0;  // noiseless classifier, 1/2 exactly at the equator
};

std::vector<NoisePoint> noise_curve(const WrappedCauchy& dist,
                                    const std::vector<double>& thetas);

enum class OutcomeLabel : int { minus = -1, unresolved = 0, plus = 1 };

/// +1 / -1 when the trajectory has converged onto one of the two attractors
/// (final purity > 1 - eps and |k . u_d| > 1 - eps with the matching sign);
/// unresolved otherwise. eps must lie in (0, 0.5).
OutcomeLabel classify_outcome(const Trajectory& traj, UnitVector3 u_d,
                              double eps);

/// Cell-centered theta x phi lattice: theta_i = pi (i + 1/2) / n_theta,
/// phi_j = 2 pi j / n_phi, row-major in (i, j). No point ever sits exactly on
/// a pole, so every grid direction is a valid initial condition.
struct SphereGrid {
  int n_theta = 0;
  int n_phi = 0;
  std::vector<double> thetas;       // per point, row-major
  std::vector<double> phis;         // per point, row-major
  std::vector<UnitVector3> points;  // per point, row-major

  static SphereGrid regular(int n_theta, int n_phi);
  std::size_t size() const { return points.size(); }
};

struct BasinSetup {
  SpinQuantumNumber s1{1};
  SpinQuantumNumber s2{21};
  double gamma = 1.0;
  double omega_d = 1.0;
  bool coupling_driven_gamma = false;  // rate from the coupling when true
  UnitVector3 u_d{1.0, 0.0, 0.0};
  UnitVector3 n2{0.0, 0.0, -1.0};
  SimConfig sim;
  double eps = 0.01;
};

struct BasinMap {
  SphereGrid grid;
  std::vector<OutcomeLabel> labels;  // one per grid point, same order
  BasinSetup setup;
  int failure_count = 0;  // integrations that failed and were left unresolved
};

/// One trajectory per grid point (product start: coherent(s1, point) with
/// coherent(s2, n2)), classified against u_d. Points are independent work
/// items; n_threads = 0 means one worker per available core. Results are
/// aggregated by grid index, so the map is deterministic regardless of the
/// thread count.
BasinMap basin_map(const SphereGrid& grid, const BasinSetup& setup,
                   int n_threads = 0);

}  // namespace dsim

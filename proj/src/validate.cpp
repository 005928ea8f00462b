#include "dsim/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "json.hpp"

#include "dsim/linalg.hpp"
#include "dsim/measurement.hpp"
#include "dsim/runner.hpp"
#include "dsim/schmidt_flow.hpp"

namespace dsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

CoeffMatrix random_coeffs(int n1, int n2, std::mt19937_64& rng) {
  return random_state(BipartiteShape{n1, n2}, rng).coefficients();
}

Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
  return Eigen::HouseholderQR<Eigen::MatrixXcd>(g).householderQ();
}

Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
  return 0.5 * (g + g.adjoint());
}

UnitVector3 random_direction(std::mt19937_64& rng) {
  const double z = 2.0 * detail::uniform01(rng) - 1.0;
  const double phi = 2.0 * kPi * detail::uniform01(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVector3{r * std::cos(phi), r * std::sin(phi), z};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PropertyResult bound(double residual, double threshold,
                     const std::string& note = "") {
  PropertyResult r;
  r.passed = std::isfinite(residual) && residual <= threshold;
  r.residual = residual;
  r.threshold = threshold;
  r.note = note;
  return r;
}

using PropertyFn = std::function<PropertyResult()>;

void run_property(std::vector<PropertyResult>& out, const std::string& name,
                  const PropertyFn& fn) {
  try {
    PropertyResult r = fn();
    r.name = name;
    out.push_back(std::move(r));
  } catch (const std::exception& e) {
    PropertyResult r;
    r.name = name;
    r.passed = false;
    r.residual = std::numeric_limits<double>::quiet_NaN();
    r.note = std::string("exception: ") + e.what();
    out.push_back(std::move(r));
  }
}

// --- state ------------------------------------------------------------

PropertyResult check_q_complements_purity(std::mt19937_64& rng) {
  const BipartiteShape shapes[] = {{1, 5}, {2, 2}, {3, 4}, {6, 8}};
  double worst = 0.0;
  for (const auto& sh : shapes) {
    for (int rep = 0; rep < 250; ++rep) {
      const PureState psi(random_coeffs(sh.n1, sh.n2, rng));
      worst = std::max(worst,
                       std::abs((1.0 - purity(psi)) - q_expectation(psi)));
    }
  }
  return bound(worst, 1e-10, "1000 random states over 4 shapes");
}

PropertyResult check_purity_local_unitary(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const CoeffMatrix c = random_coeffs(4, 5, rng);
    const Eigen::MatrixXcd u1 = random_unitary(4, rng);
    const Eigen::MatrixXcd u2 = random_unitary(5, rng);
    const double before = purity(PureState(c));
    const double after = purity(PureState(CoeffMatrix(u1 * c * u2.transpose())));
    worst = std::max(worst, std::abs(after - before));
  }
  return bound(worst, 1e-10);
}

PropertyResult check_subsystem_purities(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const CoeffMatrix c = random_coeffs(3, 7, rng);
    const Eigen::MatrixXcd r1 = c * c.adjoint();
    const Eigen::MatrixXcd r2 = c.adjoint() * c;
    worst = std::max(worst, std::abs((r1 * r1).trace().real() -
                                     (r2 * r2).trace().real()));
  }
  return bound(worst, 1e-10);
}

PropertyResult check_two_qubit_bound(std::mt19937_64& rng) {
  double worst = -1.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const PureState psi(random_coeffs(2, 2, rng));
    worst = std::max(worst, q_expectation(psi) - 0.5);
  }
  return bound(worst, 1e-12, "max of q_expectation - 1/2 over 10^4 states");
}

PropertyResult check_q_expectation_real(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const CoeffMatrix c = random_coeffs(4, 6, rng);
    CoeffMatrix qc;
    detail::apply_q_accumulate(c, qc);
    const std::complex<double> ip = c.conjugate().cwiseProduct(qc).sum();
    worst = std::max(worst, std::abs(ip.imag()));
  }
  return bound(worst, 1e-12);
}

PropertyResult check_dense_q_hermitian(std::mt19937_64& rng) {
  const BipartiteShape shapes[] = {{2, 2}, {3, 4}, {4, 4}};
  double worst = 0.0;
  for (const auto& sh : shapes)
    for (int rep = 0; rep < 5; ++rep)
      worst = std::max(worst, hermiticity_residual(dense_q_matrix(
                                  PureState(random_coeffs(sh.n1, sh.n2, rng)))));
  return bound(worst, 1e-12);
}

// --- spin -------------------------------------------------------------

PropertyResult check_commutation_casimir() {
  double worst = 0.0;
  for (int two_s = 1; two_s <= 21; ++two_s) {
    const SpinQuantumNumber s{two_s};
    const SpinOperators ops = spin_matrices(s);
    const std::complex<double> im(0.0, 1.0);
    const auto res = [](const Eigen::MatrixXcd& m) {
      return m.cwiseAbs().maxCoeff();
    };
    worst = std::max(worst, res(ops.sx * ops.sy - ops.sy * ops.sx - im * ops.sz));
    worst = std::max(worst, res(ops.sy * ops.sz - ops.sz * ops.sy - im * ops.sx));
    worst = std::max(worst, res(ops.sz * ops.sx - ops.sx * ops.sz - im * ops.sy));
    const Eigen::MatrixXcd casimir =
        ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
    const double want = s.value() * (s.value() + 1.0);
    worst = std::max(
        worst, res(casimir - want * Eigen::MatrixXcd::Identity(s.dimension(),
                                                               s.dimension())));
  }
  return bound(worst, 1e-10, "all spins up to 21/2");
}

PropertyResult check_coherent_eigenvector(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int two_s : {1, 3, 7, 21}) {
    const SpinQuantumNumber s{two_s};
    const SpinOperators ops = spin_matrices(s);
    for (int rep = 0; rep < 5; ++rep) {
      const UnitVector3 n = random_direction(rng);
      const Eigen::VectorXcd chi = coherent_state(s, n);
      worst = std::max(
          worst, (spin_along(ops, n) * chi - s.value() * chi).norm());
    }
  }
  return bound(worst, 1e-10);
}

PropertyResult check_bloch_unit_on_products(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXcd v1(2);
    v1 << std::complex<double>(detail::gaussian(rng), detail::gaussian(rng)),
        std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
    v1.normalize();
    Eigen::VectorXcd v2(6);
    for (int i = 0; i < 6; ++i)
      v2(i) = std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
    v2.normalize();
    const PureState psi = product_state(v1, v2);
    worst = std::max(worst, std::abs(bloch_vector(psi).norm() - 1.0));
  }
  return bound(worst, 1e-8, "pure spin-1/2 marginals have unit Bloch vectors");
}

PropertyResult check_dipolar_spectrum_axis_free(std::mt19937_64& rng) {
  double worst = 0.0;
  const std::pair<int, int> spins[] = {{1, 3}, {2, 2}};
  for (const auto& [a, b] : spins) {
    const SpinQuantumNumber s1{a}, s2{b};
    const Eigen::MatrixXcd href =
        dipolar_hamiltonian(s1, s2, 1.0, UnitVector3{0.0, 0.0, 1.0}).matrix;
    Eigen::VectorXd ref =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(href).eigenvalues();
    std::sort(ref.begin(), ref.end());
    for (int rep = 0; rep < 4; ++rep) {
      const Eigen::MatrixXcd h =
          dipolar_hamiltonian(s1, s2, 1.0, random_direction(rng)).matrix;
      Eigen::VectorXd ev =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h).eigenvalues();
      std::sort(ev.begin(), ev.end());
      worst = std::max(worst, (ev - ref).cwiseAbs().maxCoeff());
    }
  }
  return bound(worst, 1e-9);
}

// --- dynamics ----------------------------------------------------------

struct CollapseCase {
  double theta1, phi1;
  UnitVector3 u_d;
};

Trajectory run_collapse(const CollapseCase& c, bool renorm, double t_max) {
  const SpinQuantumNumber s1{1}, s2{21};
  const DipolarHamiltonian ham = dipolar_hamiltonian(s1, s2, 1.0, c.u_d);
  const PureState psi0 = product_state(
      coherent_state(s1, UnitVector3::from_angles(c.theta1, c.phi1)),
      coherent_state(s2, UnitVector3{0.0, 0.0, -1.0}));
  SimConfig cfg;
  cfg.t_max = t_max;
  cfg.renorm_each_step = renorm;
  return integrate(psi0, ham.matrix, GammaPolicy::constant(1.0), cfg);
}

PropertyResult check_norm_conservation() {
  const CollapseCase tilted{0.5 * kPi, 0.5 * kPi,
                            UnitVector3::from_angles(0.375 * kPi, 0.75 * kPi)};
  const Trajectory traj = run_collapse(tilted, false, 20.0);
  double worst = 0.0;
  for (const auto& s : traj.samples) worst = std::max(worst, s.norm_error);
  return bound(worst, 1e-7, "renormalization off up to t = 20");
}

PropertyResult check_monotone_purity_h0(std::mt19937_64& rng) {
  const BipartiteShape shapes[] = {{2, 2}, {3, 4}, {6, 8}};
  double worst = 0.0;
  for (const auto& sh : shapes) {
    const PureState psi0(random_coeffs(sh.n1, sh.n2, rng));
    SimConfig cfg;
    cfg.t_max = 10.0;
    const Trajectory traj = integrate(psi0, Eigen::MatrixXcd(),
                                      GammaPolicy::constant(1.0), cfg);
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
      worst = std::max(worst, traj.samples[i - 1].purity -
                                  traj.samples[i].purity);
  }
  return bound(worst, 1e-9, "largest purity drop between samples");
}

PropertyResult check_gamma0_unitary(std::mt19937_64& rng) {
  const PureState psi0(random_coeffs(2, 3, rng));
  const Eigen::MatrixXcd h = random_hermitian(6, rng);
  SimConfig cfg;
  cfg.t_max = 5.0;
  const Trajectory traj = integrate(psi0, h, GammaPolicy::constant(0.0), cfg);
  const Eigen::VectorXcd want =
      unitary_propagator(h, cfg.t_max) * psi0.to_vector();
  const double fid = std::abs(want.dot(traj.final_state.to_vector()));
  return bound(1.0 - fid, 1e-8, "overlap with the matrix-exponential state");
}

PropertyResult check_product_transparency(std::mt19937_64& rng) {
  const int n1 = 3, n2 = 4;
  const Eigen::MatrixXcd h1 = random_hermitian(n1, rng);
  const Eigen::MatrixXcd h2 = random_hermitian(n2, rng);
  const Eigen::MatrixXcd h =
      Eigen::kroneckerProduct(h1, Eigen::MatrixXcd::Identity(n2, n2)) +
      Eigen::kroneckerProduct(Eigen::MatrixXcd::Identity(n1, n1), h2);
  Eigen::VectorXcd v1(n1), v2(n2);
  for (int i = 0; i < n1; ++i)
    v1(i) = std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
  for (int i = 0; i < n2; ++i)
    v2(i) = std::complex<double>(detail::gaussian(rng), detail::gaussian(rng));
  v1.normalize();
  v2.normalize();
  SimConfig cfg;
  cfg.t_max = 5.0;
  const Trajectory traj = integrate(product_state(v1, v2), h,
                                    GammaPolicy::constant(2.5), cfg);
  double low = 1.0;
  for (const auto& s : traj.samples) low = std::min(low, s.purity);
  return bound(1.0 - low, 1e-8, "non-interacting drive of a product state");
}

PropertyResult check_collapse_perpendicular() {
  const UnitVector3 x{1.0, 0.0, 0.0};
  const CollapseCase cases[] = {{0.55 * kPi, 0.45 * kPi, x},
                                {0.55 * kPi, 0.55 * kPi, x},
                                {0.55 * kPi, 0.75 * kPi, x}};
  double worst = -1.0;
  for (const auto& c : cases) {
    const Trajectory traj = run_collapse(c, true, 30.0);
    const auto& last = traj.samples.back();
    const double along = last.k(0);
    const double want_sign =
        std::sin(c.theta1) * std::cos(c.phi1) > 0.0 ? 1.0 : -1.0;
    worst = std::max(worst, 0.99 - last.purity);
    worst = std::max(worst, 0.99 - std::abs(along));
    worst = std::max(worst, want_sign * along > 0.0 ? -1.0 : 1.0);
  }
  return bound(worst, 0.0, "purity, |k.u|, and attractor sign at t = 30");
}

// Negative control: a deliberately sign-flipped nonlinear term must drive
// purity down, proving the monotonicity check can actually fire.
PropertyResult check_harness_flags_sign_flip() {
  CoeffMatrix c(2, 2);
  c.setZero();
  c(0, 0) = 0.9;
  c(1, 1) = std::sqrt(1.0 - 0.81);
  const double before = purity(PureState(c));
  const double h = 1e-3;
  CoeffMatrix qc;
  for (int step = 0; step < 2000; ++step) {
    const double sds = detail::apply_q_accumulate(c, qc);
    // gamma = -1: d c = +(Q c - <Q> c) dt instead of the damped direction.
    c += h * (qc - (2.0 * sds) * c);
    c /= c.norm();
  }
  const double after = purity(PureState(c));
  return bound(after - before, -1e-6, "corrupted flow must lose purity");
}

// --- schmidt flow -------------------------------------------------------

Eigen::VectorXd random_spectrum(int m, std::mt19937_64& rng) {
  Eigen::VectorXd q(m);
  for (int i = 0; i < m; ++i) q(i) = 0.05 + detail::uniform01(rng);
  q /= q.norm();
  std::sort(q.data(), q.data() + m, std::greater<double>());
  return q;
}

PropertyResult check_flow_ratio_monotonic(std::mt19937_64& rng) {
  double worst = 0.0;
  // Derivative level, exact: d/dt log(q_a/q_b) >= 0 whenever q_a > q_b, i.e.
  // r_a q_b - r_b q_a carries the sign of q_a - q_b. Checked without division
  // so vanishing entries cost nothing.
  for (int rep = 0; rep < 100; ++rep) {
    const int m = 3 + static_cast<int>(detail::uniform01(rng) * 6.0);
    const FlowState state{random_spectrum(m, rng), 0.5 + detail::uniform01(rng)};
    const Eigen::VectorXd r = flow_rhs(state);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const double cross = r(a) * state.q(b) - r(b) * state.q(a);
        if (state.q(a) > state.q(b)) worst = std::max(worst, -cross);
      }
    }
  }
  // Path level: a descending start stays descending. Entries below 1e-4 are
  // exempt; down there the integrator's absolute error can exceed the gap.
  Eigen::VectorXd q(5);
  q << 1.0, 0.85, 0.6, 0.45, 0.3;
  for (int i = 0; i < 5; ++i) q(i) += 1e-2 * detail::uniform01(rng);
  q /= q.norm();
  const FlowResult res = integrate_flow(FlowState{q, 1.0}, 40.0);
  for (const auto& s : res.samples)
    for (int i = 1; i < s.q.size(); ++i)
      if (s.q(i - 1) > 1e-4 && s.q(i) > 1e-4)
        worst = std::max(worst, s.q(i) - s.q(i - 1));
  return bound(worst, 1e-9, "ratio ordering at the rhs and along the flow");
}

PropertyResult check_flow_l4_and_norm(std::mt19937_64& rng,
                                      double* norm_residual) {
  const FlowResult res =
      integrate_flow(FlowState{random_spectrum(6, rng), 1.3}, 30.0);
  double worst_drop = 0.0;
  double worst_norm = 0.0;
  double prev = res.samples.front().l4;
  for (const auto& s : res.samples) {
    worst_drop = std::max(worst_drop, prev - s.l4);
    prev = s.l4;
    worst_norm = std::max(worst_norm, std::abs(s.q.squaredNorm() - 1.0));
  }
  *norm_residual = worst_norm;
  return bound(worst_drop, 1e-12, "largest L4 drop along the flow");
}

PropertyResult check_flow_entropy(std::mt19937_64& rng) {
  Eigen::VectorXd q = Eigen::VectorXd::Constant(10, 1.0);
  q(0) += 1e-2;
  for (int i = 1; i < 10; ++i) q(i) += 1e-3 * detail::uniform01(rng);
  q /= q.norm();
  const FlowResult res = integrate_flow(FlowState{q, 1.0}, 40.0);
  double worst = 0.0;
  double prev = res.samples.front().entropy;
  for (const auto& s : res.samples) {
    worst = std::max(worst, s.entropy - prev);
    prev = s.entropy;
  }
  return bound(worst, 1e-10, "largest entropy rise from a unique-max start");
}

PropertyResult check_flow_equilibria() {
  double worst = 0.0;
  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.5);
  worst = std::max(worst,
                   flow_rhs(FlowState{uniform, 2.0}).cwiseAbs().maxCoeff());
  Eigen::VectorXd partial = Eigen::VectorXd::Zero(5);
  partial(0) = partial(1) = 1.0 / std::sqrt(2.0);
  worst = std::max(worst,
                   flow_rhs(FlowState{partial, 1.0}).cwiseAbs().maxCoeff());
  Eigen::VectorXd point = Eigen::VectorXd::Zero(3);
  point(0) = 1.0;
  worst = std::max(worst,
                   flow_rhs(FlowState{point, 1.0}).cwiseAbs().maxCoeff());
  return bound(worst, 1e-12, "equal-support spectra are fixed points");
}

// --- measurement --------------------------------------------------------

PropertyResult check_p_plus_monotone(const std::vector<double>& grid,
                                     const std::vector<double>& p) {
  double worst = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    worst = std::max(worst, p[i] - p[i - 1]);
  return bound(worst, 1e-6, "largest increase along the 181-point grid");
}

PropertyResult check_complementarity(const std::vector<double>& p) {
  double worst = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(p[i] + p[n - 1 - i] - 1.0));
  return bound(worst, 1e-6);
}

PropertyResult check_routes_agree(std::uint64_t seed) {
  const WrappedCauchy dist{0.5};
  double worst = 0.0;
  int idx = 0;
  for (double theta : {0.7, 1.9}) {
    const double a = p_plus(theta, dist);
    const double b = p_plus_quadrature_2d(theta, dist);
    const double c =
        p_plus_monte_carlo(theta, dist, 4000000, seed + idx++).value;
    worst = std::max({worst, std::abs(a - b), std::abs(a - c),
                      std::abs(b - c)});
  }
  return bound(worst, 1e-3, "1D reduction vs 2D quadrature vs Monte Carlo");
}

PropertyResult check_basin_refinement(int n_threads) {
  BasinSetup setup;
  setup.u_d = UnitVector3::from_angles(0.375 * kPi, 0.75 * kPi);
  int mismatches = 0;
  int unresolved_clear = 0;
  for (const auto& [nt, np] : {std::pair{3, 6}, std::pair{6, 12}}) {
    const BasinMap map =
        basin_map(SphereGrid::regular(nt, np), setup, n_threads);
    for (std::size_t i = 0; i < map.grid.size(); ++i) {
      const double along = dot(map.grid.points[i], setup.u_d);
      if (std::abs(along) <= 0.05) continue;
      const int want = along > 0.0 ? 1 : -1;
      const int got = static_cast<int>(map.labels[i]);
      if (got == 0)
        ++unresolved_clear;
      else if (got != want)
        ++mismatches;
    }
  }
  return bound(static_cast<double>(mismatches + unresolved_clear), 0.0,
               "label vs hemisphere on 3x6 and its 2x refinement");
}

PropertyResult check_density_normalized() {
  // Composite Simpson over the polar marginal 2 f(alpha) on [0, pi].
  const WrappedCauchy dist{0.5};
  const int n = 40000;  // even
  const double h = kPi / n;
  double acc = 2.0 * wrapped_cauchy_pdf(0.0, dist) +
               2.0 * wrapped_cauchy_pdf(kPi, dist);
  for (int i = 1; i < n; ++i)
    acc += (i % 2 ? 8.0 : 4.0) * wrapped_cauchy_pdf(i * h, dist);
  const double integral = acc * h / 3.0;
  return bound(std::abs(integral - 1.0), 1e-8,
               "full-sphere mass of the noise density");
}

// --- cli ----------------------------------------------------------------

ExperimentConfig scratch_config(const ExperimentConfig& base,
                                const std::string& dir, ExperimentKind kind) {
  ExperimentConfig c = base;
  c.experiment = kind;
  c.output.path = dir;
  c.output.format = "csv";
  c.noise.theta_grid_size = 11;
  c.sim.t_max = 0.5;
  c.sim.sample_stride = 20;
  return c;
}

PropertyResult check_cli_determinism(const ExperimentConfig& base) {
  const fs::path root = fs::path(base.output.path) / "validate_scratch";
  int diffs = 0;
  std::string note;
  for (ExperimentKind kind :
       {ExperimentKind::noise_curve, ExperimentKind::trajectory}) {
    const std::string stem =
        kind == ExperimentKind::noise_curve ? "noise" : "trajectory";
    std::string first;
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = root / (stem + (run ? "_b" : "_a"));
      run_experiment(scratch_config(base, dir.string(), kind));
      const std::string text = read_file(dir / (stem + ".csv"));
      if (run == 0)
        first = text;
      else if (text != first)
        ++diffs;
    }
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return bound(static_cast<double>(diffs), 0.0,
               "byte-compare of rerun noise and trajectory tables");
}

PropertyResult check_manifest_roundtrip(const ExperimentConfig& base) {
  const fs::path dir =
      fs::path(base.output.path) / "validate_scratch" / "manifest";
  const ExperimentConfig cfg =
      scratch_config(base, dir.string(), ExperimentKind::noise_curve);
  const RunOutcome outcome = run_experiment(cfg);
  const json manifest = json::parse(outcome.manifest);
  const ExperimentConfig echoed = parse_config(manifest.at("config").dump());
  std::error_code ec;
  fs::remove_all(dir.parent_path(), ec);
  return bound(echoed == cfg ? 0.0 : 1.0, 0.0,
               "manifest config echo parses back to an equal config");
}

PropertyResult check_csv_format(const ExperimentConfig& base) {
  const fs::path dir = fs::path(base.output.path) / "validate_scratch" / "csv";
  const ExperimentConfig cfg =
      scratch_config(base, dir.string(), ExperimentKind::noise_curve);
  run_experiment(cfg);
  const std::string text = read_file(dir / "noise.csv");
  std::error_code ec;
  fs::remove_all(dir.parent_path(), ec);

  int violations = 0;
  if (text.find("theta1,p_plus,born,step\r\n") != 0) ++violations;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t eol = text.find("\r\n", pos);
    if (eol == std::string::npos) {
      ++violations;  // unterminated line
      break;
    }
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 2;
    if (line.find('\n') != std::string::npos) ++violations;
    if (header) {
      header = false;
      continue;
    }
    // Each cell must re-parse and re-format to the identical text.
    std::size_t cells = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      ++cells;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || format_float17(v) != cell)
        ++violations;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells != 4) ++violations;
  }
  return bound(static_cast<double>(violations), 0.0,
               "CRLF lines, 4 cells per row, canonical float text");
}

}  // namespace

bool ValidationReport::all_passed() const {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

ValidationReport run_validation_suite(const ExperimentConfig& config,
                                      int n_threads) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.noise.seed);
  ValidationReport report;
  auto& out = report.results;

  run_property(out, "state.q_complements_purity",
               [&] { return check_q_complements_purity(rng); });
  run_property(out, "state.purity_local_unitary_invariant",
               [&] { return check_purity_local_unitary(rng); });
  run_property(out, "state.subsystem_purities_match",
               [&] { return check_subsystem_purities(rng); });
  run_property(out, "state.two_qubit_bound",
               [&] { return check_two_qubit_bound(rng); });
  run_property(out, "state.q_expectation_real",
               [&] { return check_q_expectation_real(rng); });
  run_property(out, "state.dense_q_hermitian",
               [&] { return check_dense_q_hermitian(rng); });

  run_property(out, "spin.commutation_casimir", check_commutation_casimir);
  run_property(out, "spin.coherent_top_eigenvector",
               [&] { return check_coherent_eigenvector(rng); });
  run_property(out, "spin.bloch_unit_on_products",
               [&] { return check_bloch_unit_on_products(rng); });
  run_property(out, "spin.dipolar_spectrum_axis_free",
               [&] { return check_dipolar_spectrum_axis_free(rng); });

  run_property(out, "dynamics.norm_conservation", check_norm_conservation);
  run_property(out, "dynamics.monotone_purity_h0",
               [&] { return check_monotone_purity_h0(rng); });
  run_property(out, "dynamics.gamma0_matches_unitary",
               [&] { return check_gamma0_unitary(rng); });
  run_property(out, "dynamics.product_transparency",
               [&] { return check_product_transparency(rng); });
  run_property(out, "dynamics.collapse_perpendicular",
               check_collapse_perpendicular);
  run_property(out, "dynamics.harness_flags_sign_flip",
               check_harness_flags_sign_flip);

  run_property(out, "flow.ratio_monotonic",
               [&] { return check_flow_ratio_monotonic(rng); });
  double norm_residual = 0.0;
  run_property(out, "flow.l4_monotone",
               [&] { return check_flow_l4_and_norm(rng, &norm_residual); });
  run_property(out, "flow.norm_invariant", [&] {
    return bound(norm_residual, 1e-8, "worst |L2 - 1| along the same flow");
  });
  run_property(out, "flow.entropy_decreasing",
               [&] { return check_flow_entropy(rng); });
  run_property(out, "flow.equilibria", check_flow_equilibria);

  {
    std::vector<double> grid, p;
    run_property(out, "measurement.p_plus_monotone", [&] {
      const WrappedCauchy dist{0.5};
      const int n = 181;
      grid.reserve(n);
      p.reserve(n);
      for (int i = 0; i < n; ++i) {
        grid.push_back(kPi * (static_cast<double>(i) / (n - 1)));
        p.push_back(p_plus(grid.back(), dist));
      }
      return check_p_plus_monotone(grid, p);
    });
    run_property(out, "measurement.complementarity", [&] {
      if (p.empty()) throw ComputationError("grid unavailable");
      return check_complementarity(p);
    });
  }
  run_property(out, "measurement.routes_agree",
               [&] { return check_routes_agree(config.noise.seed); });
  run_property(out, "measurement.basin_refinement",
               [&] { return check_basin_refinement(n_threads); });
  run_property(out, "measurement.density_normalized",
               check_density_normalized);

  run_property(out, "cli.deterministic_outputs",
               [&] { return check_cli_determinism(config); });
  run_property(out, "cli.manifest_roundtrip",
               [&] { return check_manifest_roundtrip(config); });
  run_property(out, "cli.csv_format", [&] { return check_csv_format(config); });

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::string to_json(const ValidationReport& report, int indent) {
  json props = json::array();
  for (const auto& r : report.results) {
    props.push_back(json{{"name", r.name},
                         {"passed", r.passed},
                         {"residual", r.residual},
                         {"threshold", r.threshold},
                         {"note", r.note}});
  }
  const json doc{{"all_passed", report.all_passed()},
                 {"seconds", report.seconds},
                 {"properties", std::move(props)}};
  return doc.dump(indent);
}

}  // namespace dsim

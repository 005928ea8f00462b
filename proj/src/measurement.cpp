#include "dsim/measurement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "dsim/errors.hpp"
#include "dsim/state.hpp"

namespace dsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Quadrature {
  double value = 0.0;
  double error = 0.0;
};

template <class F>
void simpson_rec(const F& f, double a, double fa, double b, double fb,
                 double m, double fm, double whole, double tol, int depth,
                 Quadrature& out) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const bool splittable = a < lm && lm < m && m < rm && rm < b;
  if (depth <= 0 || !splittable || std::abs(delta) <= 15.0 * tol) {
    out.value += left + right + delta / 15.0;
    out.error += std::abs(delta) / 15.0;
    return;
  }
  // Floor the halving so noise-level residuals cannot drive the recursion
  // to full depth across an entire interval.
  const double half_tol = std::max(0.5 * tol, 1e-16);
  simpson_rec(f, a, fa, m, fm, lm, flm, left, half_tol, depth - 1, out);
  simpson_rec(f, m, fm, b, fb, rm, frm, right, half_tol, depth - 1, out);
}

template <class F>
Quadrature adaptive_simpson(const F& f, double a, double b, double tol,
                            int depth = 48) {
  Quadrature out;
  if (!(b > a)) return out;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, depth, out);
  return out;
}

double checked_theta(double theta1, const char* who) {
  if (!(theta1 >= -1e-12) || !(theta1 <= kPi + 1e-12))
    throw std::invalid_argument(std::string(who) + ": angle must lie in [0, pi]");
  return std::clamp(theta1, 0.0, kPi);
}

}  // namespace

void WrappedCauchy::validate() const {
  if (!(phi0 > 0.0) || !std::isfinite(phi0))
    throw std::invalid_argument("WrappedCauchy: phi0 must be finite and > 0");
}

double wrapped_cauchy_pdf(double phi_r, const WrappedCauchy& dist) {
  dist.validate();
  // Overflow-free form through rho = exp(-phi0); equal to
  // sinh(phi0) / (2 pi (cosh(phi0) - cos(phi_r))) for every phi0 > 0.
  const double rho = std::exp(-dist.phi0);
  const double num = -std::expm1(-2.0 * dist.phi0);        // 1 - rho^2
  const double one_minus_rho = -std::expm1(-dist.phi0);    // 1 - rho
  const double s = std::sin(0.5 * phi_r);
  const double denom = one_minus_rho * one_minus_rho + 4.0 * rho * s * s;
  return num / (2.0 * kPi * denom);
}

double born_rule(double theta1) {
  theta1 = checked_theta(theta1, "born_rule");
  const double c = std::cos(0.5 * theta1);
  return c * c;
}

double arc_fraction(double theta1, double alpha) {
  const double ct = std::cos(theta1) * std::cos(alpha);
  const double st = std::sin(theta1) * std::sin(alpha);
  if (st <= 0.0) return ct >= 0.0 ? 1.0 : 0.0;
  return std::acos(std::clamp(-ct / st, -1.0, 1.0)) / kPi;
}

double p_plus(double theta1, const WrappedCauchy& dist) {
  dist.validate();
  theta1 = checked_theta(theta1, "p_plus");

  // Marginal density of the polar deviation alpha = |phi_r| is 2 f(alpha);
  // weight it by the azimuthal arc landing in the upper hemisphere. The arc
  // weight has kinks where the deviation circle becomes tangent to the
  // equator, so the quadrature is split there.
  auto integrand = [&](double a) {
    return 2.0 * wrapped_cauchy_pdf(a, dist) * arc_fraction(theta1, a);
  };
  const double kink = std::abs(0.5 * kPi - theta1);
  const double edges[4] = {0.0, kink, kPi - kink, kPi};
  Quadrature total;
  for (int i = 0; i < 3; ++i) {
    const Quadrature part = adaptive_simpson(integrand, edges[i], edges[i + 1], 1e-12);
    total.value += part.value;
    total.error += part.error;
  }
  if (total.error > 1e-4)
    throw ComputationError("p_plus: quadrature error estimate " +
                           std::to_string(total.error) + " exceeds 1e-4");
  return std::clamp(total.value, 0.0, 1.0);
}

double p_plus_quadrature_2d(double theta1, const WrappedCauchy& dist) {
  dist.validate();
  theta1 = checked_theta(theta1, "p_plus_quadrature_2d");
  constexpr double cap = 1e-4;

  // Slice the upper hemisphere by lab colatitude tp. Along each slice the
  // deviation angle from the noise-free direction runs monotonically from
  // |tp - theta1| to pi - |pi - tp - theta1| as the azimuth sweeps a half
  // turn, so the azimuth integral is rewritten over the deviation angle u.
  // That substitution cancels the 1/sin(u) of the surface density; the
  // leftover inverse-square-root endpoint factors are flattened by the
  // further substitution u = a_lo + span * sin^2(s/2). Small discs around
  // the two density singularities (deviation < cap and > pi - cap) are
  // excised here and added back in closed form below.
  auto slice = [&](double tp) -> double {
    const double a_minus = std::abs(tp - theta1);
    const double a_plus = kPi - std::abs(kPi - tp - theta1);
    if (a_plus - a_minus < 1e-12) {
      // Degenerate slice: the deviation angle is constant along it.
      const double a = 0.5 * (a_minus + a_plus);
      if (a < cap || a > kPi - cap) return 0.0;
      return 2.0 * std::sin(tp) * kPi * 4.0 * wrapped_cauchy_pdf(a, dist) /
             std::sin(a);
    }
    const double a_lo = std::max(a_minus, cap);
    const double a_hi = std::min(a_plus, kPi - cap);
    if (!(a_hi > a_lo)) return 0.0;
    const double span = a_hi - a_lo;
    const double lo_shift = a_lo - a_minus;
    const double hi_shift = a_plus - a_hi;
    const double gap = std::cos(a_minus) - std::cos(a_plus);

    auto transformed = [&](double s) -> double {
      const double sh = std::sin(0.5 * s);
      const double ch = std::cos(0.5 * s);
      const double du_lo = span * sh * sh;  // u - a_lo
      const double du_hi = span * ch * ch;  // a_hi - u
      const double u = a_lo + du_lo;
      if (du_lo == 0.0 && lo_shift == 0.0)
        return 4.0 * wrapped_cauchy_pdf(a_minus, dist) *
               std::sqrt(span / (std::sin(a_minus) * gap));
      if (du_hi == 0.0 && hi_shift == 0.0)
        return 4.0 * wrapped_cauchy_pdf(a_plus, dist) *
               std::sqrt(span / (std::sin(a_plus) * gap));
      const double d_lo = du_lo + lo_shift;  // u - a_minus
      const double d_hi = du_hi + hi_shift;  // a_plus - u
      const double term_lo =
          2.0 * std::sin(0.5 * (u + a_minus)) * std::sin(0.5 * d_lo);
      const double term_hi =
          2.0 * std::sin(0.5 * (a_plus + u)) * std::sin(0.5 * d_hi);
      const double g = std::sqrt(term_lo * term_hi);
      if (!(g > 0.0)) return 0.0;
      return 4.0 * wrapped_cauchy_pdf(u, dist) * 0.5 * span * std::sin(s) / g;
    };
    return 2.0 * std::sin(tp) * adaptive_simpson(transformed, 0.0, kPi, 1e-11).value;
  };

  // The slice integral has kinks where the excision boundaries cross a slice
  // and a rounded peak where a slice meets a singular point; cut there.
  std::vector<double> cuts = {0.0, 0.5 * kPi};
  for (double c : {theta1 - cap, theta1, theta1 + cap, kPi - theta1 - cap,
                   kPi - theta1, kPi - theta1 + cap})
    if (c > 0.0 && c < 0.5 * kPi) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  double value = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] - cuts[i] > 1e-12)
      value += adaptive_simpson(slice, cuts[i], cuts[i + 1], 2e-9).value;
  value /= 4.0 * kPi;

  auto cap_mass = [&](double from, double to) {
    auto f = [&](double a) { return 2.0 * wrapped_cauchy_pdf(a, dist); };
    return adaptive_simpson(f, from, to, 1e-13).value;
  };
  // The excised disc around the noise-free direction sits in the upper
  // hemisphere when theta1 < pi/2 (half in, half out at the equator); its
  // antipode mirrors the rule.
  if (theta1 < 0.5 * kPi - cap)
    value += cap_mass(0.0, cap);
  else if (theta1 <= 0.5 * kPi + cap)
    value += 0.5 * cap_mass(0.0, cap);
  if (theta1 > 0.5 * kPi + cap)
    value += cap_mass(kPi - cap, kPi);
  else if (theta1 >= 0.5 * kPi - cap)
    value += 0.5 * cap_mass(kPi - cap, kPi);
  return std::clamp(value, 0.0, 1.0);
}

MonteCarloEstimate p_plus_monte_carlo(double theta1, const WrappedCauchy& dist,
                                      std::uint64_t n_samples,
                                      std::uint64_t seed) {
  dist.validate();
  theta1 = checked_theta(theta1, "p_plus_monte_carlo");
  if (n_samples == 0)
    throw std::invalid_argument("p_plus_monte_carlo: need at least one sample");

  std::mt19937_64 rng(seed);
  const double ct = std::cos(theta1);
  const double st = std::sin(theta1);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    // Inverse CDF of the unwrapped distribution, then wrap into (-pi, pi].
    const double raw = dist.phi0 * std::tan(kPi * (detail::uniform01(rng) - 0.5));
    const double alpha = std::abs(std::remainder(raw, 2.0 * kPi));
    const double beta = 2.0 * kPi * detail::uniform01(rng);
    const double z = ct * std::cos(alpha) + st * std::sin(alpha) * std::cos(beta);
    if (z >= 0.0) ++hits;
  }
  MonteCarloEstimate est;
  est.value = static_cast<double>(hits) / static_cast<double>(n_samples);
  est.standard_error = std::sqrt(
      std::max(est.value * (1.0 - est.value), 1e-300) /
      static_cast<double>(n_samples));
  est.samples = n_samples;
  return est;
}

std::vector<NoisePoint> noise_curve(const WrappedCauchy& dist,
                                    const std::vector<double>& thetas) {
  std::vector<NoisePoint> out;
  out.reserve(thetas.size());
  for (double th : thetas) {
    NoisePoint p;
    p.theta1 = th;
    p.p_plus = p_plus(th, dist);
    p.born = born_rule(th);
    p.step = th < 0.5 * kPi ? 1.0 : (th > 0.5 * kPi ? 0.0 : 0.5);
    out.push_back(p);
  }
  return out;
}

OutcomeLabel classify_outcome(const Trajectory& traj, UnitVector3 u_d,
                              double eps) {
  if (!(eps > 0.0) || !(eps < 0.5))
    throw std::invalid_argument("classify_outcome: eps must lie in (0, 0.5)");
  if (traj.samples.empty())
    throw std::invalid_argument("classify_outcome: empty trajectory");
  const TrajectorySample& last = traj.samples.back();
  const double along =
      last.k(0) * u_d.x + last.k(1) * u_d.y + last.k(2) * u_d.z;
  if (last.purity > 1.0 - eps) {
    if (along > 1.0 - eps) return OutcomeLabel::plus;
    if (along < -(1.0 - eps)) return OutcomeLabel::minus;
  }
  return OutcomeLabel::unresolved;
}

SphereGrid SphereGrid::regular(int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 2)
    throw std::invalid_argument("SphereGrid: resolution must be at least 2x2");
  SphereGrid g;
  g.n_theta = n_theta;
  g.n_phi = n_phi;
  const std::size_t n = static_cast<std::size_t>(n_theta) * n_phi;
  g.thetas.reserve(n);
  g.phis.reserve(n);
  g.points.reserve(n);
  for (int i = 0; i < n_theta; ++i) {
    const double theta = kPi * (i + 0.5) / n_theta;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * kPi * j / n_phi;
      g.thetas.push_back(theta);
      g.phis.push_back(phi);
      g.points.push_back(UnitVector3::from_angles(theta, phi));
    }
  }
  return g;
}

BasinMap basin_map(const SphereGrid& grid, const BasinSetup& setup,
                   int n_threads) {
  if (grid.points.empty())
    throw std::invalid_argument("basin_map: empty grid");
  setup.sim.validate();
  if (!(setup.eps > 0.0) || !(setup.eps < 0.5))
    throw std::invalid_argument("basin_map: eps must lie in (0, 0.5)");

  const DipolarHamiltonian ham =
      dipolar_hamiltonian(setup.s1, setup.s2, setup.omega_d, setup.u_d);
  const GammaPolicy policy = setup.coupling_driven_gamma
                                 ? GammaPolicy::coupling_driven(ham.matrix)
                                 : GammaPolicy::constant(setup.gamma);
  const Eigen::VectorXcd partner = coherent_state(setup.s2, setup.n2);

  BasinMap map;
  map.grid = grid;
  map.setup = setup;
  map.labels.assign(grid.size(), OutcomeLabel::unresolved);

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        const PureState psi0 = product_state(
            coherent_state(setup.s1, grid.points[i]), partner);
        const Trajectory traj = integrate(psi0, ham.matrix, policy, setup.sim);
        map.labels[i] = classify_outcome(traj, setup.u_d, setup.eps);
      } catch (const std::exception&) {
        map.labels[i] = OutcomeLabel::unresolved;
        failures.fetch_add(1);
      }
    }
  };

  int workers = n_threads > 0
                    ? n_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, static_cast<int>(grid.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  map.failure_count = failures.load();
  return map;
}

}  // namespace dsim

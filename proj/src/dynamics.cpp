#include "dsim/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "dsim/linalg.hpp"
#include "dsim/ode.hpp"

namespace dsim {

namespace {

// Homogeneous extension of the unit-sphere right-hand side. For y of any
// norm the nonlinear part is
//   -gamma (Q_raw(y)/|y|^2 - 2 S(y)/|y|^4 y),
// with Q_raw the cubic image and S the subdeterminant sum. On the unit sphere
// this is exactly -gamma (Q psi - <Q> psi), and Re<y|dy> = 0 for every y, so
// the flow never drifts off the sphere at the equation level.
void modified_rhs(const Eigen::MatrixXcd* h, double gamma, int n1, int n2,
                  const Eigen::VectorXcd& y, Eigen::VectorXcd& dy,
                  CoeffMatrix& qbuf) {
  if (h != nullptr) {
    dy.noalias() = Complex(0.0, -1.0) * ((*h) * y);
  } else {
    dy.resize(y.size());
    dy.setZero();
  }
  if (gamma == 0.0) return;
  Eigen::Map<const CoeffMatrix> c(y.data(), n1, n2);
  const double sds = detail::apply_q_accumulate(c, qbuf);
  const double nsq = y.squaredNorm();
  Eigen::Map<const Eigen::VectorXcd> qflat(qbuf.data(), y.size());
  dy -= gamma * (qflat / nsq - (2.0 * sds / (nsq * nsq)) * y);
}

void check_operator_dims(const Eigen::MatrixXcd& m, int dim, const char* who) {
  if (m.size() != 0 && (m.rows() != dim || m.cols() != dim))
    throw std::invalid_argument(std::string(who) + ": operator dimension " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) +
                                " does not match state dimension " +
                                std::to_string(dim));
}

}  // namespace

GammaPolicy GammaPolicy::constant(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("GammaPolicy: rate must be finite and >= 0");
  GammaPolicy p;
  p.impl_ = gamma;
  return p;
}

GammaPolicy GammaPolicy::coupling_driven(Eigen::MatrixXcd v) {
  if (v.size() == 0 || v.rows() != v.cols())
    throw std::invalid_argument("GammaPolicy: coupling matrix must be square");
  if (hermiticity_residual(v) > 1e-10)
    throw std::invalid_argument("GammaPolicy: coupling matrix must be Hermitian");
  GammaPolicy p;
  p.impl_ = std::move(v);
  return p;
}

double GammaPolicy::evaluate(const Eigen::VectorXcd& y) const {
  if (const double* g = std::get_if<double>(&impl_)) return *g;
  const auto& v = std::get<Eigen::MatrixXcd>(impl_);
  if (v.rows() != y.size())
    throw std::invalid_argument("GammaPolicy: state dimension mismatch");
  const double yn = y.norm();
  if (yn == 0.0) return 0.0;
  return (v * y).norm() / yn;
}

void SimConfig::validate() const {
  if (!(dt_initial > 0.0) || !std::isfinite(dt_initial))
    throw std::invalid_argument("SimConfig: dt_initial must be > 0");
  if (!(t_max >= 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("SimConfig: t_max must be >= 0");
  if (t_max > 0.0 && dt_initial >= t_max)
    throw std::invalid_argument("SimConfig: dt_initial must be < t_max");
  auto tol_ok = [](double x) { return x > 0.0 && x <= 1e-2; };
  if (!tol_ok(rel_tol) || !tol_ok(abs_tol))
    throw std::invalid_argument("SimConfig: tolerances must lie in (0, 1e-2]");
  if (sample_stride < 1)
    throw std::invalid_argument("SimConfig: sample_stride must be >= 1");
}

CoeffMatrix nlse_rhs(const PureState& psi, const Eigen::MatrixXcd& h,
                     double gamma) {
  const BipartiteShape shape = psi.shape();
  const int dim = shape.total();
  check_operator_dims(h, dim, "nlse_rhs");
  if (!(gamma >= 0.0))
    throw std::invalid_argument("nlse_rhs: gamma must be >= 0");

  const Eigen::VectorXcd y = psi.to_vector();
  Eigen::VectorXcd dy;
  CoeffMatrix qbuf;
  modified_rhs(h.size() != 0 ? &h : nullptr, gamma, shape.n1, shape.n2, y, dy,
               qbuf);
  CoeffMatrix out(shape.n1, shape.n2);
  Eigen::Map<Eigen::VectorXcd>(out.data(), dim) = dy;
  return out;
}

double gamma_from_coupling(const PureState& psi, const Eigen::MatrixXcd& v) {
  const int dim = psi.shape().total();
  if (v.rows() != dim || v.cols() != dim)
    throw std::invalid_argument("gamma_from_coupling: dimension mismatch");
  return (v * psi.to_vector()).norm();
}

Trajectory integrate(const PureState& psi0, const Eigen::MatrixXcd& h,
                     const GammaPolicy& policy, const SimConfig& config) {
  config.validate();
  const BipartiteShape shape = psi0.shape();
  const int dim = shape.total();
  check_operator_dims(h, dim, "integrate");
  if (const auto* v = policy.coupling()) check_operator_dims(*v, dim, "integrate");

  Eigen::VectorXcd y = psi0.to_vector();

  std::vector<TrajectorySample> samples;
  auto push_sample = [&](double t, const Eigen::VectorXcd& raw,
                         double norm_err) {
    const PureState snap = PureState::from_vector(raw.normalized(), shape);
    TrajectorySample s;
    s.t = t;
    if (shape.n1 >= 2) s.k = bloch_vector(snap);
    s.q_expectation = q_expectation(snap);
    s.purity = 1.0 - s.q_expectation;
    s.norm_error = norm_err;
    samples.push_back(std::move(s));
  };

  push_sample(0.0, y, 0.0);
  if (config.t_max == 0.0)
    return Trajectory{std::move(samples), psi0, 0, 0};

  const Eigen::MatrixXcd* hp = h.size() != 0 ? &h : nullptr;
  CoeffMatrix qbuf;
  auto rhs = [&](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) {
    modified_rhs(hp, policy.evaluate(v), shape.n1, shape.n2, v, dv, qbuf);
  };

  ode::StepControl ctl;
  ctl.rel_tol = config.rel_tol;
  ctl.abs_tol = config.abs_tol;
  ctl.initial_step = config.dt_initial;

  std::size_t steps = 0;
  double last_norm_err = 0.0;
  const auto stride = static_cast<std::size_t>(config.sample_stride);
  auto on_accept = [&](double t, Eigen::VectorXcd& v) {
    ++steps;
    last_norm_err = std::abs(v.norm() - 1.0);
    if (config.renorm_each_step) v /= v.norm();
    if (steps % stride == 0) push_sample(t, v, last_norm_err);
  };

  const auto rep = ode::integrate(y, 0.0, config.t_max, rhs, ctl, on_accept);

  if (samples.back().t != rep.t_reached)
    push_sample(rep.t_reached, y, last_norm_err);

  PureState final_state = PureState::from_vector(y.normalized(), shape);
  if (rep.step_underflow) {
    auto partial = std::make_shared<const Trajectory>(Trajectory{
        std::move(samples), std::move(final_state), rep.accepted, rep.rejected});
    throw StiffnessError("integrate: step size underflow at t = " +
                             std::to_string(rep.t_reached),
                         std::move(partial));
  }
  return Trajectory{std::move(samples), std::move(final_state), rep.accepted,
                    rep.rejected};
}

Eigen::MatrixXcd unitary_propagator(const Eigen::MatrixXcd& h, double t) {
  if (h.size() == 0 || h.rows() != h.cols())
    throw std::invalid_argument("unitary_propagator: matrix must be square");
  if (hermiticity_residual(h) > 1e-10)
    throw std::invalid_argument("unitary_propagator: matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i)
    phases(i) = std::polar(1.0, -t * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double short_time_purity(UnitVector3 n1, UnitVector3 n2, UnitVector3 u_d,
                         SpinQuantumNumber s2, double omega_d, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("short_time_purity: t must be >= 0");
  const double rate = std::pow(2.0, -1.5) * s2.value() * cross(n1, u_d).norm() *
                      dot(n2, u_d) * omega_d;
  const double x = rate * t;
  return 1.0 - x * x;
}

std::pair<double, double> short_time_precession_rates(const PureState& psi,
                                                      UnitVector3 u_d,
                                                      double omega_d) {
  const BipartiteShape shape = psi.shape();
  if (shape.n1 < 2 || shape.n2 < 2)
    throw std::invalid_argument(
        "short_time_precession_rates: both subsystems need dimension >= 2");
  const CoeffMatrix& c = psi.coefficients();
  const Eigen::MatrixXcd rho1 = c * c.adjoint();
  const Eigen::MatrixXcd rho2 = (c.adjoint() * c).transpose();
  const auto ops1 = spin_matrices(SpinQuantumNumber{shape.n1 - 1});
  const auto ops2 = spin_matrices(SpinQuantumNumber{shape.n2 - 1});
  const double s1_proj = (rho1 * spin_along(ops1, u_d)).trace().real();
  const double s2_proj = (rho2 * spin_along(ops2, u_d)).trace().real();
  return {omega_d * s2_proj, omega_d * s1_proj};
}

}  // namespace dsim

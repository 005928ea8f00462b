#include "dsim/schmidt_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dsim/ode.hpp"

namespace dsim {

void FlowState::validate() const {
  if (q.size() < 1)
    throw std::invalid_argument("FlowState: empty spectrum");
  if (!q.allFinite() || q.minCoeff() < 0.0)
    throw std::invalid_argument("FlowState: spectrum must be nonnegative and finite");
  if (std::abs(q.squaredNorm() - 1.0) > 1e-9)
    throw std::invalid_argument("FlowState: spectrum must have unit square sum");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("FlowState: rate must be finite and > 0");
}

double MomentSet::at(int n) const {
  auto it = values.find(n);
  if (it == values.end())
    throw std::invalid_argument("MomentSet: moment " + std::to_string(n) +
                                " not available");
  return it->second;
}

double moment(const Eigen::VectorXd& q, int n) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("moment: order must be even and >= 2");
  return q.array().pow(n).sum();
}

MomentSet moments(const FlowState& state, int n_max) {
  state.validate();
  if (n_max < 2 || n_max % 2 != 0)
    throw std::invalid_argument("moments: n_max must be even and >= 2");
  MomentSet out;
  for (int n = 2; n <= n_max; n += 2) out.values[n] = moment(state.q, n);
  return out;
}

double moment_rhs(const MomentSet& m, double gamma, int n) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("moment_rhs: order must be even and >= 2");
  return n * gamma * (m.at(n + 2) - m.at(n) * m.at(4));
}

Eigen::VectorXd flow_rhs_raw(const Eigen::VectorXd& q, double gamma) {
  const double l2 = q.squaredNorm();
  const double l4 = q.array().pow(4).sum();
  return gamma * (q.array() * ((3.0 - 2.0 * l2) * q.array().square() - l4))
      .matrix();
}

Eigen::VectorXd flow_rhs(const FlowState& state) {
  state.validate();
  return flow_rhs_raw(state.q, state.gamma);
}

double flow_potential_raw(const Eigen::VectorXd& q, double gamma) {
  const double l2 = q.squaredNorm();
  const double l4 = q.array().pow(4).sum();
  return 0.25 * gamma * (3.0 - 2.0 * l2) * l4;
}

double flow_potential(const FlowState& state) {
  state.validate();
  return flow_potential_raw(state.q, state.gamma);
}

FlowResult integrate_flow(const FlowState& state0, double t_max,
                          const SimConfig& config) {
  state0.validate();
  if (!(t_max >= 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("integrate_flow: t_max must be >= 0");
  SimConfig cfg = config;
  cfg.t_max = t_max;
  cfg.validate();

  FlowResult result;
  const double qmax = state0.q.maxCoeff();
  int argmax = 0;
  int at_max = 0;
  for (int i = 0; i < state0.q.size(); ++i) {
    if (state0.q(i) == qmax) argmax = i;
    if (qmax - state0.q(i) <= 1e-12) ++at_max;
  }
  result.unique_attractor = (at_max == 1);
  result.attractor_index = result.unique_attractor ? argmax : -1;

  Eigen::VectorXd q = state0.q;
  auto push_sample = [&](double t, const Eigen::VectorXd& v) {
    FlowSample s;
    s.t = t;
    s.q = v;
    s.l4 = v.array().pow(4).sum();
    s.entropy = spectrum_entropy(v);
    result.samples.push_back(std::move(s));
  };

  push_sample(0.0, q);
  if (t_max == 0.0) return result;

  const double gamma = state0.gamma;
  auto rhs = [gamma](double, const Eigen::VectorXd& v, Eigen::VectorXd& dv) {
    dv = flow_rhs_raw(v, gamma);
  };

  ode::StepControl ctl;
  ctl.rel_tol = cfg.rel_tol;
  ctl.abs_tol = cfg.abs_tol;
  ctl.initial_step = cfg.dt_initial;

  std::size_t steps = 0;
  const auto stride = static_cast<std::size_t>(cfg.sample_stride);
  auto on_accept = [&](double t, Eigen::VectorXd& v) {
    ++steps;
    if (cfg.renorm_each_step) v /= v.norm();
    if (steps % stride == 0) push_sample(t, v);
  };

  const auto rep = ode::integrate(q, 0.0, t_max, rhs, ctl, on_accept);
  result.accepted_steps = rep.accepted;
  result.rejected_steps = rep.rejected;
  if (result.samples.back().t != rep.t_reached) push_sample(rep.t_reached, q);

  if (rep.step_underflow) {
    auto partial = std::make_shared<const FlowResult>(std::move(result));
    throw FlowStiffnessError("integrate_flow: step size underflow at t = " +
                                 std::to_string(rep.t_reached),
                             std::move(partial));
  }
  return result;
}

double cross_check_full(const FlowState& state0, BipartiteShape shape,
                        const std::vector<double>& t_grid,
                        const SimConfig& config) {
  state0.validate();
  check_shape(shape);
  const int m = shape.schmidt_rank_bound();
  if (state0.q.size() != m)
    throw std::invalid_argument(
        "cross_check_full: spectrum length must equal min(n1, n2)");
  if (t_grid.empty())
    throw std::invalid_argument("cross_check_full: empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0) || (i > 0 && t_grid[i] < t_grid[i - 1]))
      throw std::invalid_argument(
          "cross_check_full: grid must be non-decreasing and nonnegative");
  }

  // Embed the spectrum as a diagonal coefficient matrix.
  CoeffMatrix c = CoeffMatrix::Zero(shape.n1, shape.n2);
  for (int l = 0; l < m; ++l) c(l, l) = state0.q(l);
  PureState psi = PureState::normalized(std::move(c));

  const GammaPolicy policy = GammaPolicy::constant(state0.gamma);
  Eigen::VectorXd q_flow = state0.q;

  auto segment_config = [&](double dt) {
    SimConfig seg = config;
    seg.t_max = dt;
    if (seg.dt_initial >= dt) seg.dt_initial = 0.1 * dt;
    return seg;
  };

  double deviation = 0.0;
  double prev_t = 0.0;
  for (double t : t_grid) {
    const double dt = t - prev_t;
    if (dt > 0.0) {
      const SimConfig seg = segment_config(dt);
      psi = integrate(psi, Eigen::MatrixXcd(), policy, seg).final_state;
      FlowState fs{q_flow, state0.gamma};
      q_flow = integrate_flow(fs, dt, seg).samples.back().q;
      prev_t = t;
    }
    Eigen::VectorXd full_q = schmidt(psi).q;  // descending already
    Eigen::VectorXd flow_sorted = q_flow;
    std::sort(flow_sorted.data(), flow_sorted.data() + flow_sorted.size(),
              std::greater<double>());
    deviation = std::max(deviation,
                         (full_q - flow_sorted).cwiseAbs().maxCoeff());
  }
  return deviation;
}

}  // namespace dsim

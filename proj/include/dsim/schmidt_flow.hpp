#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsim/dynamics.hpp"
#include "dsim/state.hpp"

namespace dsim {

/// Schmidt spectrum evolving under the reduced (no-Hamiltonian) dynamics.
struct FlowState {
  Eigen::VectorXd q;   // nonnegative, sum of squares 1 within 1e-9
  double gamma = 1.0;  // strictly positive rate

  void validate() const;
};

struct MomentSet {
  std::map<int, double> values;  // even order n -> L_n = sum q^n

  double at(int n) const;  // throws std::invalid_argument when missing
};

/// L_n = sum q_l^n; n must be even and >= 2.
double moment(const Eigen::VectorXd& q, int n);

/// All even moments up to n_max.
MomentSet moments(const FlowState& state, int n_max);

/// dL_n/dt = n gamma (L_{n+2} - L_n L_4); requires L_n, L_{n+2}, L_4.
double moment_rhs(const MomentSet& m, double gamma, int n);

/// dq_l/dt = gamma q_l ((3 - 2 L_2) q_l^2 - L_4). On the unit sphere (L_2 = 1)
/// this is gamma q_l (q_l^2 - L_4); the general form is the exact gradient of
/// flow_potential at arbitrary q, and its sole effect off the sphere is to
/// pull L_2 back toward one.
Eigen::VectorXd flow_rhs(const FlowState& state);
Eigen::VectorXd flow_rhs_raw(const Eigen::VectorXd& q, double gamma);

/// H = (gamma/4) (3 - 2 L_2) L_4, the potential whose gradient is flow_rhs;
/// equals (gamma/4) L_4 on normalized spectra.
double flow_potential(const FlowState& state);
double flow_potential_raw(const Eigen::VectorXd& q, double gamma);

struct FlowSample {
  double t = 0.0;
  Eigen::VectorXd q;
  double l4 = 1.0;
  double entropy = 0.0;
};

struct FlowResult {
  std::vector<FlowSample> samples;
  bool unique_attractor = true;  // false when the initial maximum is tied
  int attractor_index = -1;      // argmax of the initial q when unique
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

/// Step-size underflow in the reduced flow; carries the completed part.
class FlowStiffnessError : public ComputationError {
 public:
  FlowStiffnessError(const std::string& what,
                     std::shared_ptr<const FlowResult> partial)
      : ComputationError(what), partial_(std::move(partial)) {}
  const std::shared_ptr<const FlowResult>& partial() const { return partial_; }

 private:
  std::shared_ptr<const FlowResult> partial_;
};

/// Adaptive drive of flow_rhs from t = 0 to t_max. Only dt_initial, the
/// tolerances, renorm_each_step and sample_stride of the config are honored;
/// the horizon comes from the t_max argument. Sampling mirrors the full
/// integrator: initial point, every sample_stride-th step, final point.
FlowResult integrate_flow(const FlowState& state0, double t_max,
                          const SimConfig& config = SimConfig{});

/// Differential test tying the reduced flow to the full dynamics: embeds q(0)
/// as a diagonal coefficient matrix, drives both integrators through the grid
/// times, and returns the largest deviation between the sorted Schmidt
/// spectra. t_grid must be non-decreasing and nonnegative.
double cross_check_full(const FlowState& state0, BipartiteShape shape,
                        const std::vector<double>& t_grid,
                        const SimConfig& config = SimConfig{});

}  // namespace dsim

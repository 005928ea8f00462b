#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dsim/errors.hpp"
#include "dsim/spin.hpp"
#include "dsim/state.hpp"

namespace dsim {

/// Damping-rate policy for the nonlinear term: either a fixed nonnegative
/// rate, or a rate re-derived from a coupling matrix at every right-hand-side
/// evaluation as gamma = sqrt(<psi|V^dag V|psi>).
class GammaPolicy {
 public:
  static GammaPolicy constant(double gamma);
  static GammaPolicy coupling_driven(Eigen::MatrixXcd v);

  /// Rate for a flattened state; scale-invariant in the norm of y, so it is
  /// safe to evaluate on the raw (un-renormalized) integrator state.
  double evaluate(const Eigen::VectorXcd& y) const;

  bool is_constant() const { return std::holds_alternative<double>(impl_); }
  double constant_value() const { return std::get<double>(impl_); }
  /// The coupling matrix, or nullptr in constant mode.
  const Eigen::MatrixXcd* coupling() const {
    return std::get_if<Eigen::MatrixXcd>(&impl_);
  }

 private:
  GammaPolicy() = default;
  std::variant<double, Eigen::MatrixXcd> impl_;
};

struct SimConfig {
  double dt_initial = 1e-3;
  double t_max = 30.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  bool renorm_each_step = true;
  int sample_stride = 5;

  /// Throws std::invalid_argument on out-of-range settings. t_max = 0 is
  /// accepted as a degenerate single-sample run.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector3d k = Eigen::Vector3d::Zero();  // subsystem-1 Bloch vector
  double purity = 1.0;
  double q_expectation = 0.0;
  // |  ||psi_raw|| - 1 | after the accepted step that produced this sample,
  // measured before any renormalization; cumulative drift when renorm is off.
  double norm_error = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  PureState final_state;  // always exactly normalized
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

/// Step-size underflow; carries whatever part of the trajectory completed.
class StiffnessError : public ComputationError {
 public:
  StiffnessError(const std::string& what, std::shared_ptr<const Trajectory> partial)
      : ComputationError(what), partial_(std::move(partial)) {}
  const std::shared_ptr<const Trajectory>& partial() const { return partial_; }

 private:
  std::shared_ptr<const Trajectory> partial_;
};

/// d psi / dt = -i H psi - gamma (Q psi - <Q> psi), in coefficient-matrix
/// form. An empty h (size 0) stands for H = 0. The real part of <psi|dpsi>
/// vanishes identically, so the flow conserves the norm.
CoeffMatrix nlse_rhs(const PureState& psi, const Eigen::MatrixXcd& h,
                     double gamma);

/// sqrt(<psi|V^dag V|psi>).
double gamma_from_coupling(const PureState& psi, const Eigen::MatrixXcd& v);

/// Adaptive drive of nlse_rhs from t = 0 to config.t_max. Records the initial
/// point, every sample_stride-th accepted step, and the final point. Throws
/// StiffnessError (with the partial trajectory attached) if the controller
/// underflows.
Trajectory integrate(const PureState& psi0, const Eigen::MatrixXcd& h,
                     const GammaPolicy& policy, const SimConfig& config);

/// exp(-i h t) through an eigendecomposition; h must be Hermitian.
Eigen::MatrixXcd unitary_propagator(const Eigen::MatrixXcd& h, double t);

/// Early-time purity estimate for a product start of coherent states along
/// n1 and n2: P = 1 - (2^{-3/2} S2 |n1 x u_d| (n2 . u_d) omega_d t)^2.
/// Only meaningful while the bracket is small and (n2 . u_d) is nonzero.
double short_time_purity(UnitVector3 n1, UnitVector3 n2, UnitVector3 u_d,
                         SpinQuantumNumber s2, double omega_d, double t);

/// Leading-order precession rates (omega_1, omega_2): each subsystem precesses
/// about u_d at a rate set by the partner's spin projection on u_d.
std::pair<double, double> short_time_precession_rates(const PureState& psi,
                                                      UnitVector3 u_d,
                                                      double omega_d);

}  // namespace dsim

#pragma once

#include <Eigen/Dense>

#include "dsim/state.hpp"

namespace dsim {

/// Spin quantum number held as 2S so half-integers stay exact.
struct SpinQuantumNumber {
  int two_s = 1;

  SpinQuantumNumber() = default;
  explicit SpinQuantumNumber(int two_s_);

  double value() const { return 0.5 * two_s; }
  int dimension() const { return two_s + 1; }
  bool operator==(const SpinQuantumNumber&) const = default;
};

/// Cartesian spin component matrices in the |S, m> basis ordered
/// m = S, S-1, ..., -S.
struct SpinOperators {
  Eigen::MatrixXcd sx, sy, sz;
};

SpinOperators spin_matrices(SpinQuantumNumber s,
                            int dimension_cap = kDefaultDimensionCap);

struct UnitVector3 {
  double x = 0.0, y = 0.0, z = 1.0;

  UnitVector3() = default;
  UnitVector3(double x_, double y_, double z_);
  static UnitVector3 from_angles(double theta, double phi);

  Eigen::Vector3d to_eigen() const { return {x, y, z}; }
  UnitVector3 operator-() const;
};

double dot(UnitVector3 a, UnitVector3 b);
Eigen::Vector3d cross(UnitVector3 a, UnitVector3 b);

/// S . n for a given operator triple.
Eigen::MatrixXcd spin_along(const SpinOperators& ops, UnitVector3 n);

/// Top eigenvector of S . n (eigenvalue S), built from the closed-form
/// half-angle expansion; global phase fixed so the first nonzero component is
/// real positive.
Eigen::VectorXcd coherent_state(SpinQuantumNumber s, UnitVector3 n);

struct DipolarHamiltonian {
  Eigen::MatrixXcd matrix;  // omega_d (S1.u)(S2.u) on the flattened space
  double omega_d = 1.0;
  UnitVector3 u_d;
  SpinQuantumNumber s1, s2;
};

DipolarHamiltonian dipolar_hamiltonian(SpinQuantumNumber s1,
                                       SpinQuantumNumber s2, double omega_d,
                                       UnitVector3 u_d,
                                       int dimension_cap = kDefaultDimensionCap);

/// Subsystem-1 spin expectation scaled by 1/S1, so coherent states map to
/// unit vectors. S1 is inferred from the row dimension (needs n1 >= 2).
Eigen::Vector3d bloch_vector(const PureState& psi);

}  // namespace dsim

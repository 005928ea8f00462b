#include "dsim/spin.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dsim/linalg.hpp"

namespace dsim {

SpinQuantumNumber::SpinQuantumNumber(int two_s_) : two_s(two_s_) {
  if (two_s < 1)
    throw std::invalid_argument("spin quantum number must satisfy 2S >= 1, got 2S = " +
                                std::to_string(two_s));
}

SpinOperators spin_matrices(SpinQuantumNumber s, int dimension_cap) {
  const int d = s.dimension();
  if (d > dimension_cap)
    throw std::invalid_argument("spin dimension " + std::to_string(d) +
                                " exceeds the cap of " +
                                std::to_string(dimension_cap));
  const double sv = s.value();
  Eigen::MatrixXcd sp = Eigen::MatrixXcd::Zero(d, d);
  Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = sv - i;
    sz(i, i) = m;
    if (i > 0) sp(i - 1, i) = std::sqrt(sv * (sv + 1.0) - m * (m + 1.0));
  }
  SpinOperators ops;
  ops.sx = 0.5 * (sp + sp.adjoint());
  ops.sy = Complex(0.0, -0.5) * (sp - sp.adjoint());
  ops.sz = sz;
  return ops;
}

UnitVector3::UnitVector3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {
  const double n2 = x * x + y * y + z * z;
  if (std::abs(n2 - 1.0) > 1e-12)
    throw std::invalid_argument("direction is not a unit vector: |n|^2 - 1 = " +
                                std::to_string(n2 - 1.0));
}

UnitVector3 UnitVector3::from_angles(double theta, double phi) {
  UnitVector3 n;
  n.x = std::sin(theta) * std::cos(phi);
  n.y = std::sin(theta) * std::sin(phi);
  n.z = std::cos(theta);
  return n;
}

UnitVector3 UnitVector3::operator-() const {
  UnitVector3 n;
  n.x = -x;
  n.y = -y;
  n.z = -z;
  return n;
}

double dot(UnitVector3 a, UnitVector3 b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

Eigen::Vector3d cross(UnitVector3 a, UnitVector3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Eigen::MatrixXcd spin_along(const SpinOperators& ops, UnitVector3 n) {
  return n.x * ops.sx + n.y * ops.sy + n.z * ops.sz;
}

Eigen::VectorXcd coherent_state(SpinQuantumNumber s, UnitVector3 n) {
  const int d = s.dimension();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
  const double ch = std::sqrt(std::max(0.0, 0.5 * (1.0 + n.z)));  // cos(theta/2)
  const double sh = std::sqrt(std::max(0.0, 0.5 * (1.0 - n.z)));  // sin(theta/2)
  if (sh == 0.0) {
    v[0] = 1.0;
    return v;
  }
  if (ch == 0.0) {
    v[d - 1] = 1.0;  // phase convention already satisfied
    return v;
  }
  const double phi = std::atan2(n.y, n.x);
  const double lc = std::log(ch);
  const double ls = std::log(sh);
  // Magnitudes in log space so large S stays finite:
  // |v_i| = sqrt(binom(2S, i)) cos^(2S-i) sin^i.
  double lbinom = 0.0;
  for (int i = 0; i < d; ++i) {
    if (i > 0)
      lbinom += std::log(static_cast<double>(s.two_s - i + 1)) -
                std::log(static_cast<double>(i));
    const double mag = std::exp(0.5 * lbinom + (s.two_s - i) * lc + i * ls);
    v[i] = std::polar(mag, i * phi);
  }
  v /= v.norm();
  // First nonzero component is v[0] = cos^(2S) > 0: already real positive.
  return v;
}

DipolarHamiltonian dipolar_hamiltonian(SpinQuantumNumber s1,
                                       SpinQuantumNumber s2, double omega_d,
                                       UnitVector3 u_d, int dimension_cap) {
  check_shape({s1.dimension(), s2.dimension()}, dimension_cap);
  const SpinOperators ops1 = spin_matrices(s1, dimension_cap);
  const SpinOperators ops2 = spin_matrices(s2, dimension_cap);
  DipolarHamiltonian h;
  h.matrix = omega_d * kron(spin_along(ops1, u_d), spin_along(ops2, u_d));
  h.omega_d = omega_d;
  h.u_d = u_d;
  h.s1 = s1;
  h.s2 = s2;
  return h;
}

Eigen::Vector3d bloch_vector(const PureState& psi) {
  const CoeffMatrix& c = psi.coefficients();
  const int n1 = static_cast<int>(c.rows());
  if (n1 < 2)
    throw std::invalid_argument(
        "bloch_vector needs a subsystem-1 dimension of at least 2");
  const SpinOperators ops = spin_matrices(SpinQuantumNumber(n1 - 1));
  const Eigen::MatrixXcd rho1 = c * c.adjoint();
  const double s = 0.5 * (n1 - 1);
  return {(rho1 * ops.sx).trace().real() / s,
          (rho1 * ops.sy).trace().real() / s,
          (rho1 * ops.sz).trace().real() / s};
}

}  // namespace dsim

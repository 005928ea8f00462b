#include <doctest.h>

#include <cmath>
#include <complex>
#include <set>

#include <Eigen/Dense>

#include "dsim/linalg.hpp"
#include "dsim/spin.hpp"
#include "dsim/state.hpp"

namespace {

using dsim::Complex;
using dsim::SpinQuantumNumber;
using dsim::UnitVector3;

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("spin matrices satisfy the su(2) algebra") {
  for (int two_s : {1, 2, 3, 7, 21}) {
    auto ops = dsim::spin_matrices(SpinQuantumNumber{two_s});
    const Complex i1(0.0, 1.0);
    Eigen::MatrixXcd comm_xy = ops.sx * ops.sy - ops.sy * ops.sx;
    Eigen::MatrixXcd comm_yz = ops.sy * ops.sz - ops.sz * ops.sy;
    Eigen::MatrixXcd comm_zx = ops.sz * ops.sx - ops.sx * ops.sz;
    CHECK((comm_xy - i1 * ops.sz).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((comm_yz - i1 * ops.sx).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((comm_zx - i1 * ops.sy).cwiseAbs().maxCoeff() < 1e-12);

    const double s = 0.5 * two_s;
    Eigen::MatrixXcd casimir = ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
    Eigen::MatrixXcd want = s * (s + 1.0) *
        Eigen::MatrixXcd::Identity(two_s + 1, two_s + 1);
    CHECK((casimir - want).cwiseAbs().maxCoeff() < 1e-12);

    CHECK(dsim::hermiticity_residual(ops.sx) < 1e-14);
    CHECK(dsim::hermiticity_residual(ops.sy) < 1e-14);
    CHECK(dsim::hermiticity_residual(ops.sz) < 1e-14);
  }
}

TEST_CASE("z component is diagonal and descending") {
  auto ops = dsim::spin_matrices(SpinQuantumNumber{3});
  CHECK(ops.sz(0, 0).real() == doctest::Approx(1.5));
  CHECK(ops.sz(1, 1).real() == doctest::Approx(0.5));
  CHECK(ops.sz(2, 2).real() == doctest::Approx(-0.5));
  CHECK(ops.sz(3, 3).real() == doctest::Approx(-1.5));
}

TEST_CASE("coherent state is a max-projection eigenvector along its axis") {
  for (int two_s : {1, 4, 21}) {
    SpinQuantumNumber s{two_s};
    auto ops = dsim::spin_matrices(s);
    for (auto [theta, phi] : {std::pair{0.3, 1.1}, std::pair{2.4, -0.7},
                              std::pair{kPi / 2, kPi / 2}}) {
      UnitVector3 n = UnitVector3::from_angles(theta, phi);
      Eigen::VectorXcd v = dsim::coherent_state(s, n);
      CHECK(std::abs(v.norm() - 1.0) < 1e-13);
      Eigen::MatrixXcd sn = dsim::spin_along(ops, n);
      const double sval = 0.5 * two_s;
      CHECK((sn * v - sval * v).norm() < 1e-11);

      // Cross-check against the eigensolver: the eigenvector of the largest
      // eigenvalue of the projected operator must match up to phase.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sn);
      Eigen::VectorXcd top = es.eigenvectors().col(two_s);
      CHECK(std::abs(es.eigenvalues()(two_s) - sval) < 1e-12);
      CHECK(std::abs(std::abs(top.dot(v)) - 1.0) < 1e-11);
    }
  }
}

TEST_CASE("coherent state at the poles reduces to basis vectors") {
  SpinQuantumNumber s{5};
  Eigen::VectorXcd up = dsim::coherent_state(s, UnitVector3{0.0, 0.0, 1.0});
  Eigen::VectorXcd down = dsim::coherent_state(s, UnitVector3{0.0, 0.0, -1.0});
  CHECK(std::abs(up(0) - 1.0) < 1e-15);
  CHECK(up.tail(5).norm() < 1e-15);
  CHECK(std::abs(down(5) - 1.0) < 1e-15);
  CHECK(down.head(5).norm() < 1e-15);
}

TEST_CASE("coherent amplitudes stay finite for large spins") {
  SpinQuantumNumber s{21};
  Eigen::VectorXcd v = dsim::coherent_state(s, UnitVector3::from_angles(3.0, 0.4));
  CHECK(v.allFinite());
  CHECK(std::abs(v.norm() - 1.0) < 1e-12);
}

TEST_CASE("coupling matrix has the product spectrum") {
  SpinQuantumNumber s1{1}, s2{3};
  const UnitVector3 u = UnitVector3::from_angles(3.0 * kPi / 8.0, 3.0 * kPi / 4.0);
  auto ham = dsim::dipolar_hamiltonian(s1, s2, 1.7, u);
  CHECK(ham.matrix.rows() == 2 * 4);
  CHECK(dsim::hermiticity_residual(ham.matrix) < 1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ham.matrix);
  std::multiset<long long> got, want;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    got.insert(std::llround(es.eigenvalues()(i) * 1e9));
  for (double m1 : {-0.5, 0.5})
    for (double m2 : {-1.5, -0.5, 0.5, 1.5})
      want.insert(std::llround(1.7 * m1 * m2 * 1e9));
  CHECK(got == want);
}

TEST_CASE("coupling matrix respects the tensor ordering") {
  // kron(A, B) must place the first subsystem on the slow index, matching the
  // row-major flattening of the coefficient matrix.
  SpinQuantumNumber s1{1}, s2{2};
  auto ops1 = dsim::spin_matrices(s1);
  auto ops2 = dsim::spin_matrices(s2);
  Eigen::MatrixXcd k = dsim::kron(ops1.sz, ops2.sz);
  // Element ((0,0),(0,0)): m1 = +1/2, m2 = +1.
  CHECK(k(0, 0).real() == doctest::Approx(0.5));
  // Element ((1,2),(1,2)): m1 = -1/2, m2 = -1, composite index 1*3+2 = 5.
  CHECK(k(5, 5).real() == doctest::Approx(0.5));
  // Element ((0,2),(0,2)): m1 = +1/2, m2 = -1.
  CHECK(k(2, 2).real() == doctest::Approx(-0.5));
}

TEST_CASE("bloch vector of a product of coherent states points along the axis") {
  SpinQuantumNumber s1{1}, s2{21};
  const UnitVector3 n1 = UnitVector3::from_angles(kPi / 2, kPi / 2);
  const UnitVector3 n2{0.0, 0.0, -1.0};
  auto psi = dsim::product_state(dsim::coherent_state(s1, n1),
                                 dsim::coherent_state(s2, n2));
  auto k = dsim::bloch_vector(psi);
  CHECK(std::abs(k(0) - n1.x) < 1e-12);
  CHECK(std::abs(k(1) - n1.y) < 1e-12);
  CHECK(std::abs(k(2) - n1.z) < 1e-12);
}

TEST_CASE("bloch vector length never exceeds one") {
  std::mt19937_64 rng(4242);
  for (int rep = 0; rep < 5; ++rep) {
    auto psi = dsim::random_state(dsim::BipartiteShape{2, 8}, rng);
    auto k = dsim::bloch_vector(psi);
    CHECK(k.norm() <= 1.0 + 1e-12);
  }
}

TEST_CASE("unit vector construction and algebra") {
  CHECK_THROWS_AS((UnitVector3{1.0, 1.0, 0.0}), std::invalid_argument);
  const UnitVector3 a = UnitVector3::from_angles(0.55 * kPi, 0.25 * kPi);
  CHECK(std::abs(a.x * a.x + a.y * a.y + a.z * a.z - 1.0) < 1e-14);
  const UnitVector3 z{0.0, 0.0, 1.0};
  const UnitVector3 x{1.0, 0.0, 0.0};
  CHECK(dsim::dot(z, x) == 0.0);
  auto c = dsim::cross(z, x);
  CHECK(c(1) == doctest::Approx(1.0));
  const UnitVector3 mz = -z;
  CHECK(mz.z == -1.0);
}

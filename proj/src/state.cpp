#include "dsim/state.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dsim {

void check_shape(BipartiteShape shape, int dimension_cap) {
  if (shape.n1 < 1 || shape.n2 < 1)
    throw std::invalid_argument("state shape must have positive dimensions, got " +
                                std::to_string(shape.n1) + "x" +
                                std::to_string(shape.n2));
  if (static_cast<long long>(shape.n1) * shape.n2 > dimension_cap)
    throw std::invalid_argument(
        "composite dimension " + std::to_string(shape.n1) + "x" +
        std::to_string(shape.n2) + " exceeds the cap of " +
        std::to_string(dimension_cap));
}

PureState::PureState(CoeffMatrix c, int dimension_cap) : c_(std::move(c)) {
  check_shape({static_cast<int>(c_.rows()), static_cast<int>(c_.cols())},
              dimension_cap);
  const double n2 = c_.squaredNorm();
  if (std::abs(n2 - 1.0) > kNormTolerance)
    throw std::invalid_argument(
        "state is not normalized: squared norm deviates by " +
        std::to_string(n2 - 1.0));
}

PureState PureState::normalized(CoeffMatrix c, int dimension_cap) {
  check_shape({static_cast<int>(c.rows()), static_cast<int>(c.cols())},
              dimension_cap);
  const double n = c.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("cannot normalize a zero-norm state");
  PureState out;
  out.c_ = std::move(c);
  out.c_ /= n;
  return out;
}

Eigen::VectorXcd PureState::to_vector() const {
  return Eigen::Map<const Eigen::VectorXcd>(c_.data(), c_.size());
}

PureState PureState::from_vector(const Eigen::VectorXcd& v,
                                 BipartiteShape shape) {
  check_shape(shape);
  if (v.size() != shape.total())
    throw std::invalid_argument("flat vector length does not match the shape");
  CoeffMatrix c = Eigen::Map<const CoeffMatrix>(v.data(), shape.n1, shape.n2);
  return PureState(std::move(c));
}

PureState PureState::renormalized() const {
  CoeffMatrix c = c_;
  return normalized(std::move(c));
}

PureState product_state(const Eigen::VectorXcd& v1,
                        const Eigen::VectorXcd& v2) {
  const double m1 = v1.norm();
  const double m2 = v2.norm();
  if (m1 == 0.0 || m2 == 0.0)
    throw std::invalid_argument("product_state: zero-norm input vector");
  if (std::abs(m1 - 1.0) > kNormTolerance || std::abs(m2 - 1.0) > kNormTolerance)
    throw std::invalid_argument("product_state: input vectors must be unit");
  CoeffMatrix c = v1 * v2.transpose();
  // The product of two almost-unit norms can sit just outside the state
  // tolerance; rescale exactly.
  return PureState::normalized(std::move(c));
}

SchmidtSpectrum schmidt(const PureState& psi) {
  Eigen::JacobiSVD<CoeffMatrix> svd(psi.coefficients());
  return SchmidtSpectrum{svd.singularValues()};
}

double spectrum_entropy(const Eigen::VectorXd& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double p = q[i] * q[i];
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double entanglement_entropy(const SchmidtSpectrum& spectrum) {
  return spectrum_entropy(spectrum.q);
}

double entanglement_entropy(const PureState& psi) {
  return entanglement_entropy(schmidt(psi));
}

double purity(const PureState& psi) {
  return 1.0 - 2.0 * detail::subdeterminant_sum(psi.coefficients());
}

double q_expectation(const PureState& psi) {
  return 2.0 * detail::subdeterminant_sum(psi.coefficients());
}

EntanglementReport entanglement_report(const PureState& psi) {
  const double qexp = q_expectation(psi);
  return {1.0 - qexp, qexp, entanglement_entropy(schmidt(psi))};
}

CoeffMatrix apply_q(const PureState& psi) {
  CoeffMatrix out;
  detail::apply_q_accumulate(psi.coefficients(), out);
  return out;
}

Eigen::MatrixXcd dense_q_matrix(const PureState& psi) {
  const CoeffMatrix& c = psi.coefficients();
  const int n1 = static_cast<int>(c.rows());
  const int n2 = static_cast<int>(c.cols());
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n1 * n2, n1 * n2);
  int idx[4];
  Complex amp[4];
  for (int k1p = 0; k1p < n1; ++k1p)
    for (int k1pp = k1p + 1; k1pp < n1; ++k1pp)
      for (int k2p = 0; k2p < n2; ++k2p)
        for (int k2pp = k2p + 1; k2pp < n2; ++k2pp) {
          // |Psi> has four nonzero components; accumulate (1/2)|Psi><Psi|.
          idx[0] = k1p * n2 + k2p;    // a
          idx[1] = k1p * n2 + k2pp;   // b
          idx[2] = k1pp * n2 + k2p;   // c
          idx[3] = k1pp * n2 + k2pp;  // d
          amp[0] = std::conj(c(k1pp, k2pp));
          amp[1] = -std::conj(c(k1pp, k2p));
          amp[2] = -std::conj(c(k1p, k2pp));
          amp[3] = std::conj(c(k1p, k2p));
          for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s)
              q(idx[r], idx[s]) += 0.5 * amp[r] * std::conj(amp[s]);
        }
  return q;
}

PureState random_state(BipartiteShape shape, std::mt19937_64& rng,
                       int dimension_cap) {
  check_shape(shape, dimension_cap);
  CoeffMatrix c(shape.n1, shape.n2);
  for (int i = 0; i < shape.n1; ++i)
    for (int j = 0; j < shape.n2; ++j) {
      const double re = detail::gaussian(rng);
      const double im = detail::gaussian(rng);
      c(i, j) = Complex(re, im);
    }
  return PureState::normalized(std::move(c), dimension_cap);
}

namespace detail {

double subdeterminant_sum(const Eigen::Ref<const CoeffMatrix>& c) {
  const int n1 = static_cast<int>(c.rows());
  const int n2 = static_cast<int>(c.cols());
  double sum = 0.0;
  for (int k1p = 0; k1p < n1; ++k1p)
    for (int k1pp = k1p + 1; k1pp < n1; ++k1pp)
      for (int k2p = 0; k2p < n2; ++k2p)
        for (int k2pp = k2p + 1; k2pp < n2; ++k2pp) {
          const Complex phi = c(k1p, k2p) * c(k1pp, k2pp) -
                              c(k1p, k2pp) * c(k1pp, k2p);
          sum += std::norm(phi);
        }
  return sum;
}

double apply_q_accumulate(const Eigen::Ref<const CoeffMatrix>& c,
                          CoeffMatrix& out) {
  const int n1 = static_cast<int>(c.rows());
  const int n2 = static_cast<int>(c.cols());
  out.setZero(n1, n2);
  double sum = 0.0;
  for (int k1p = 0; k1p < n1; ++k1p)
    for (int k1pp = k1p + 1; k1pp < n1; ++k1pp)
      for (int k2p = 0; k2p < n2; ++k2p)
        for (int k2pp = k2p + 1; k2pp < n2; ++k2pp) {
          const Complex phi = c(k1p, k2p) * c(k1pp, k2pp) -
                              c(k1p, k2pp) * c(k1pp, k2p);
          sum += std::norm(phi);
          out(k1p, k2p) += phi * std::conj(c(k1pp, k2pp));    // position a
          out(k1pp, k2pp) += phi * std::conj(c(k1p, k2p));    // position d
          out(k1p, k2pp) -= phi * std::conj(c(k1pp, k2p));    // position b
          out(k1pp, k2p) -= phi * std::conj(c(k1p, k2pp));    // position c
        }
  return sum;
}

double gaussian(std::mt19937_64& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 == 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

}  // namespace dsim

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <random>

namespace dsim {

using Complex = std::complex<double>;

/// Coefficient matrices are stored row-major so that the flattened composite
/// index k = k1*n2 + k2 is the raw memory order.
using CoeffMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultDimensionCap = 4096;
inline constexpr double kNormTolerance = 1e-9;

struct BipartiteShape {
  int n1 = 0;
  int n2 = 0;
  int total() const { return n1 * n2; }
  int schmidt_rank_bound() const { return n1 < n2 ? n1 : n2; }
  bool operator==(const BipartiteShape&) const = default;
};

void check_shape(BipartiteShape shape, int dimension_cap = kDefaultDimensionCap);

/// Normalized pure state of a bipartite system, stored as the n1 x n2
/// coefficient matrix C with |psi> = sum C(k1,k2) |k1>|k2>.
///
/// Construction rejects matrices whose squared Frobenius norm deviates from 1
/// by more than kNormTolerance; renormalization is always explicit.
class PureState {
 public:
  explicit PureState(CoeffMatrix c, int dimension_cap = kDefaultDimensionCap);

  /// Rescales an arbitrary nonzero matrix to unit norm.
  static PureState normalized(CoeffMatrix c,
                              int dimension_cap = kDefaultDimensionCap);

  const CoeffMatrix& coefficients() const { return c_; }
  BipartiteShape shape() const {
    return {static_cast<int>(c_.rows()), static_cast<int>(c_.cols())};
  }

  /// Row-major flatten: component k1*n2 + k2 is C(k1, k2).
  Eigen::VectorXcd to_vector() const;
  static PureState from_vector(const Eigen::VectorXcd& v, BipartiteShape shape);

  PureState renormalized() const;

 private:
  PureState() = default;
  CoeffMatrix c_;
};

/// C = v1 v2^T (no conjugation). Inputs must be unit vectors within
/// kNormTolerance; the result carries exactly unit norm.
PureState product_state(const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2);

struct SchmidtSpectrum {
  Eigen::VectorXd q;  // singular values of C, descending
};

/// Singular values of the coefficient matrix, descending.
SchmidtSpectrum schmidt(const PureState& psi);

/// -sum q_l^2 log q_l^2 with the 0 log 0 = 0 convention.
double entanglement_entropy(const SchmidtSpectrum& spectrum);
double entanglement_entropy(const PureState& psi);
double spectrum_entropy(const Eigen::VectorXd& q);

/// P = 1 - 2 sum |phi|^2 over index pairs, phi = C_a C_d - C_b C_c.
double purity(const PureState& psi);

/// <Q> = 1 - P, computed directly from the subdeterminant sum (exact
/// complement of purity, and nonnegative by construction).
double q_expectation(const PureState& psi);

struct EntanglementReport {
  double purity;
  double q_expectation;
  double entropy;
};

EntanglementReport entanglement_report(const PureState& psi);

/// Coefficients of Q|psi>, accumulated through the pairwise quadruple sum.
CoeffMatrix apply_q(const PureState& psi);

/// Dense matrix of Q on the flattened composite space, built as
/// (1/2) sum |Psi><Psi| over index pairs. Independent route used to check
/// apply_q; only sensible at desk-scale dimensions.
Eigen::MatrixXcd dense_q_matrix(const PureState& psi);

/// Haar-like random state: iid complex Gaussian entries, exactly normalized.
/// All randomness flows through the supplied engine deterministically.
PureState random_state(BipartiteShape shape, std::mt19937_64& rng,
                       int dimension_cap = kDefaultDimensionCap);

namespace detail {

/// sum over k1'<k1'', k2'<k2'' of |phi|^2 (homogeneous; no norm assumption).
double subdeterminant_sum(const Eigen::Ref<const CoeffMatrix>& c);

/// Accumulates the Q|psi> coefficients into out (resized and zeroed here);
/// returns the subdeterminant sum from the same pass.
double apply_q_accumulate(const Eigen::Ref<const CoeffMatrix>& c,
                          CoeffMatrix& out);

/// Deterministic, platform-stable uniform in [0, 1) from the raw engine.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller normal deviate (cosine branch, u1 = 0 rejected).
double gaussian(std::mt19937_64& rng);

}  // namespace detail

}  // namespace dsim

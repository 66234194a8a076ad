#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qmei/config.hpp"

namespace qmei {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dense complex Hermitian matrix.
///
/// Construction from a raw matrix checks Hermiticity: inputs whose largest
/// entrywise asymmetry |H_ij - conj(H_ji)| is below `hermit_tol` are
/// symmetrized, anything else is rejected with a HermiticityError.
class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix& m, const Tolerances& tol = {});

  static HermitianOperator identity(Index d);
  static HermitianOperator zero(Index d);
  static HermitianOperator diagonal(const RealVector& diag);
  /// (M + M^dagger) / 2 without a tolerance check, for internally computed products.
  static HermitianOperator hermitian_part(const Matrix& m);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }

  HermitianOperator& operator+=(const HermitianOperator& other);
  HermitianOperator& operator-=(const HermitianOperator& other);
  HermitianOperator& operator*=(double s);

  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
  friend HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }
  friend HermitianOperator operator*(HermitianOperator a, double s) { return a *= s; }

 private:
  struct Unchecked {};
  HermitianOperator(Unchecked, Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Positive semidefinite Hermitian operator with trace in (0, 1].
class DensityOperator {
 public:
  explicit DensityOperator(const HermitianOperator& op, const Tolerances& tol = {});
  explicit DensityOperator(const Matrix& m, const Tolerances& tol = {})
      : DensityOperator(HermitianOperator(m, tol), tol) {}

  static DensityOperator maximally_mixed(Index d, double trace = 1.0);
  static DensityOperator pure(const Eigen::VectorXcd& psi);
  static DensityOperator diagonal(const RealVector& weights, const Tolerances& tol = {});

  Index dim() const { return op_.dim(); }
  const HermitianOperator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  double trace() const { return trace_; }

  /// alpha * rho; the result must still have trace <= 1.
  DensityOperator scaled(double alpha, const Tolerances& tol = {}) const;

 private:
  HermitianOperator op_;
  double trace_;
};

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
struct SpectralDecomposition {
  RealVector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const;
};

/// Contiguous run [begin, begin + size) of (numerically) equal eigenvalues.
struct Eigenspace {
  Index begin;
  Index size;
  double value;  // mean eigenvalue of the group
};

SpectralDecomposition spectral_decompose(const HermitianOperator& h);

/// Groups ascending eigenvalues into degenerate runs. Neighbours closer than
/// `degeneracy_gap * spectral range` (absolute `degeneracy_gap` for a
/// vanishing range) share an eigenspace.
std::vector<Eigenspace> eigenspaces(const SpectralDecomposition& s, const Tolerances& tol = {});

/// Eigenvalues at or below this value count as zero.
double support_floor(const RealVector& eigenvalues, const Tolerances& tol = {});

/// V f(diag(w)) V^dagger. With `support_only` set, f is applied only to
/// eigenvalues above the support floor and the rest map to 0 (0 ln 0 := 0).
/// Throws DomainError when f returns a non-finite value on a retained eigenvalue.
HermitianOperator operator_function(const HermitianOperator& h, const std::function<double(double)>& f,
                                    bool support_only = false, const Tolerances& tol = {});
HermitianOperator operator_function(const SpectralDecomposition& s, const std::function<double(double)>& f,
                                    bool support_only = false, const Tolerances& tol = {});

/// tr(rho A). Throws ValidationError on dimension mismatch or when the
/// imaginary residue exceeds `herm_residue_tol`.
double expectation(const DensityOperator& rho, const HermitianOperator& a, const Tolerances& tol = {});

/// tr(A B) for Hermitian A, B (always real up to rounding).
double trace_product(const Matrix& a, const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);
HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b,
                                 const Tolerances& tol = {});
DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b, const Tolerances& tol = {});

/// A^{(x)N}. Throws CapacityError when dim^N exceeds `max_dim`.
HermitianOperator n_fold_power(const HermitianOperator& a, int n, const Tolerances& tol = {});
DensityOperator n_fold_power(const DensityOperator& a, int n, const Tolerances& tol = {});

enum class Subsystem { a, b };

/// Partial trace over the complementary factor of a (d_a x d_b) bipartition.
DensityOperator partial_trace(const DensityOperator& rho_ab, Index d_a, Index d_b, Subsystem keep,
                              const Tolerances& tol = {});
Matrix partial_trace(const Matrix& m, Index d_a, Index d_b, Subsystem keep);

/// Orthogonal projector onto eigenvectors with eigenvalue above the support floor.
HermitianOperator support_projector(const DensityOperator& rho, const Tolerances& tol = {});

/// Generalized Gell-Mann matrices: d^2 - 1 traceless Hermitian operators,
/// pairwise Hilbert-Schmidt orthogonal with tr(G^2) = 2.
std::vector<HermitianOperator> gell_mann_basis(Index d);

/// Pauli matrices, for convenience in examples and tests.
HermitianOperator pauli_x();
HermitianOperator pauli_y();
HermitianOperator pauli_z();

/// (I + r . sigma) * trace / 2 for a Bloch vector r with |r| <= 1.
DensityOperator qubit_state(double rx, double ry, double rz, double trace = 1.0);

}  // namespace qmei

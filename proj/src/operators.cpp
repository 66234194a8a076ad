#include "qmei/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmei/errors.hpp"

namespace qmei {

namespace {

void require_square(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << "operator must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw ValidationError(os.str());
  }
}

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace

HermitianOperator::HermitianOperator(const Matrix& m, const Tolerances& tol) {
  require_square(m);
  double worst = 0.0;
  Index wr = 0, wc = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double a = std::abs(m(i, j) - std::conj(m(j, i)));
      if (!std::isfinite(a)) throw ValidationError("operator has non-finite entries");
      if (a > worst) {
        worst = a;
        wr = i;
        wc = j;
      }
    }
  }
  if (worst > tol.hermit_tol) throw HermiticityError(worst, static_cast<std::size_t>(wr), static_cast<std::size_t>(wc));
  m_ = 0.5 * (m + m.adjoint());
}

HermitianOperator HermitianOperator::identity(Index d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  return {Unchecked{}, Matrix::Identity(d, d)};
}

HermitianOperator HermitianOperator::zero(Index d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  return {Unchecked{}, Matrix::Zero(d, d)};
}

HermitianOperator HermitianOperator::diagonal(const RealVector& diag) {
  if (diag.size() < 1) throw ValidationError("dimension must be >= 1");
  return {Unchecked{}, diag.cast<Complex>().asDiagonal()};
}

HermitianOperator HermitianOperator::hermitian_part(const Matrix& m) {
  require_square(m);
  return {Unchecked{}, 0.5 * (m + m.adjoint())};
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& other) {
  require_same_dim(dim(), other.dim(), "operator sum");
  m_ += other.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& other) {
  require_same_dim(dim(), other.dim(), "operator difference");
  m_ -= other.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double s) {
  m_ *= s;
  return *this;
}

DensityOperator::DensityOperator(const HermitianOperator& op, const Tolerances& tol) : op_(op), trace_(op.trace()) {
  const RealVector w = Eigen::SelfAdjointEigenSolver<Matrix>(op_.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  if (w.minCoeff() < -tol.psd_tol * scale) {
    std::ostringstream os;
    os << "density operator has negative eigenvalue " << w.minCoeff();
    throw ValidationError(os.str());
  }
  if (!(trace_ > 0.0) || trace_ > 1.0 + tol.trace_tol) {
    std::ostringstream os;
    os << "density operator trace " << trace_ << " outside (0, 1]";
    throw ValidationError(os.str());
  }
}

DensityOperator DensityOperator::maximally_mixed(Index d, double trace) {
  return DensityOperator(HermitianOperator::identity(d) * (trace / static_cast<double>(d)));
}

DensityOperator DensityOperator::pure(const Eigen::VectorXcd& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw ValidationError("pure state vector must be nonzero");
  const Eigen::VectorXcd u = psi / n;
  return DensityOperator(HermitianOperator(u * u.adjoint()));
}

DensityOperator DensityOperator::diagonal(const RealVector& weights, const Tolerances& tol) {
  return DensityOperator(HermitianOperator::diagonal(weights), tol);
}

DensityOperator DensityOperator::scaled(double alpha, const Tolerances& tol) const {
  return DensityOperator(op_ * alpha, tol);
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

SpectralDecomposition spectral_decompose(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw ValidationError("eigen-decomposition failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

std::vector<Eigenspace> eigenspaces(const SpectralDecomposition& s, const Tolerances& tol) {
  const RealVector& w = s.eigenvalues;
  const Index n = w.size();
  std::vector<Eigenspace> out;
  if (n == 0) return out;
  const double range = w(n - 1) - w(0);
  const double gap = range > 0.0 ? tol.degeneracy_gap * range : tol.degeneracy_gap;
  Index begin = 0;
  for (Index i = 1; i <= n; ++i) {
    if (i == n || w(i) - w(i - 1) > gap) {
      out.push_back({begin, i - begin, w.segment(begin, i - begin).mean()});
      begin = i;
    }
  }
  return out;
}

double support_floor(const RealVector& eigenvalues, const Tolerances& tol) {
  if (eigenvalues.size() == 0) return 0.0;
  return tol.eig_floor * eigenvalues.cwiseAbs().maxCoeff();
}

HermitianOperator operator_function(const SpectralDecomposition& s, const std::function<double(double)>& f,
                                    bool support_only, const Tolerances& tol) {
  const double floor = support_floor(s.eigenvalues, tol);
  RealVector fw(s.eigenvalues.size());
  for (Index i = 0; i < fw.size(); ++i) {
    const double w = s.eigenvalues(i);
    if (support_only && w <= floor) {
      fw(i) = 0.0;
      continue;
    }
    fw(i) = f(w);
    if (!std::isfinite(fw(i))) {
      std::ostringstream os;
      os << "operator function undefined at eigenvalue " << w;
      throw DomainError(os.str());
    }
  }
  return HermitianOperator::hermitian_part(s.eigenvectors * fw.cast<Complex>().asDiagonal() *
                                           s.eigenvectors.adjoint());
}

HermitianOperator operator_function(const HermitianOperator& h, const std::function<double(double)>& f,
                                    bool support_only, const Tolerances& tol) {
  return operator_function(spectral_decompose(h), f, support_only, tol);
}

double trace_product(const Matrix& a, const Matrix& b) {
  return (a.transpose().cwiseProduct(b)).sum().real();
}

double expectation(const DensityOperator& rho, const HermitianOperator& a, const Tolerances& tol) {
  require_same_dim(rho.dim(), a.dim(), "expectation");
  const Complex v = (rho.matrix().transpose().cwiseProduct(a.matrix())).sum();
  const double scale = std::max(1.0, std::abs(v));
  if (std::abs(v.imag()) > tol.herm_residue_tol * scale) {
    std::ostringstream os;
    os << "expectation has imaginary residue " << v.imag();
    throw ValidationError(os.str());
  }
  return v.real();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

void check_budget(double dim, const Tolerances& tol) {
  if (dim > static_cast<double>(tol.max_dim)) {
    std::ostringstream os;
    os << "dimension " << dim << " exceeds max_dim " << tol.max_dim;
    throw CapacityError(os.str());
  }
}

}  // namespace

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b, const Tolerances& tol) {
  check_budget(static_cast<double>(a.dim()) * static_cast<double>(b.dim()), tol);
  return HermitianOperator::hermitian_part(kron(a.matrix(), b.matrix()));
}

DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b, const Tolerances& tol) {
  return DensityOperator(tensor_product(a.op(), b.op(), tol), tol);
}

HermitianOperator n_fold_power(const HermitianOperator& a, int n, const Tolerances& tol) {
  if (n < 1) throw ValidationError("n_fold_power requires N >= 1");
  check_budget(std::pow(static_cast<double>(a.dim()), n), tol);
  Matrix m = a.matrix();
  for (int k = 1; k < n; ++k) m = kron(m, a.matrix());
  return HermitianOperator::hermitian_part(m);
}

DensityOperator n_fold_power(const DensityOperator& a, int n, const Tolerances& tol) {
  return DensityOperator(n_fold_power(a.op(), n, tol), tol);
}

Matrix partial_trace(const Matrix& m, Index d_a, Index d_b, Subsystem keep) {
  if (d_a < 1 || d_b < 1 || m.rows() != d_a * d_b || m.cols() != d_a * d_b) {
    std::ostringstream os;
    os << "dimension " << m.rows() << " does not factor as " << d_a << " x " << d_b;
    throw ValidationError(os.str());
  }
  if (keep == Subsystem::a) {
    Matrix out = Matrix::Zero(d_a, d_a);
    for (Index i = 0; i < d_a; ++i)
      for (Index j = 0; j < d_a; ++j)
        for (Index k = 0; k < d_b; ++k) out(i, j) += m(i * d_b + k, j * d_b + k);
    return out;
  }
  Matrix out = Matrix::Zero(d_b, d_b);
  for (Index i = 0; i < d_b; ++i)
    for (Index j = 0; j < d_b; ++j)
      for (Index k = 0; k < d_a; ++k) out(i, j) += m(k * d_b + i, k * d_b + j);
  return out;
}

DensityOperator partial_trace(const DensityOperator& rho_ab, Index d_a, Index d_b, Subsystem keep,
                              const Tolerances& tol) {
  return DensityOperator(HermitianOperator::hermitian_part(partial_trace(rho_ab.matrix(), d_a, d_b, keep)), tol);
}

HermitianOperator support_projector(const DensityOperator& rho, const Tolerances& tol) {
  return operator_function(rho.op(), [](double) { return 1.0; }, true, tol);
}

std::vector<HermitianOperator> gell_mann_basis(Index d) {
  std::vector<HermitianOperator> out;
  const Complex i1(0.0, 1.0);
  for (Index j = 0; j < d; ++j) {
    for (Index k = j + 1; k < d; ++k) {
      Matrix s = Matrix::Zero(d, d);
      s(j, k) = 1.0;
      s(k, j) = 1.0;
      out.emplace_back(s);
      Matrix a = Matrix::Zero(d, d);
      a(j, k) = -i1;
      a(k, j) = i1;
      out.emplace_back(a);
    }
  }
  for (Index l = 1; l < d; ++l) {
    RealVector diag = RealVector::Zero(d);
    const double c = std::sqrt(2.0 / static_cast<double>(l * (l + 1)));
    for (Index j = 0; j < l; ++j) diag(j) = c;
    diag(l) = -c * static_cast<double>(l);
    out.push_back(HermitianOperator::diagonal(diag));
  }
  return out;
}

HermitianOperator pauli_x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return HermitianOperator(m);
}

HermitianOperator pauli_y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return HermitianOperator(m);
}

HermitianOperator pauli_z() { return HermitianOperator::diagonal(RealVector{{1.0, -1.0}}); }

DensityOperator qubit_state(double rx, double ry, double rz, double trace) {
  HermitianOperator h = HermitianOperator::identity(2) + rx * pauli_x() + ry * pauli_y() + rz * pauli_z();
  return DensityOperator(h * (0.5 * trace));
}

}  // namespace qmei

#include "qmei/random.hpp"

#include "qmei/errors.hpp"

namespace qmei {

Matrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

Matrix random_unitary(Index d, Rng& rng) {
  const Eigen::HouseholderQR<Matrix> qr(ginibre(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phases so the distribution is Haar.
  for (Index k = 0; k < d; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

DensityOperator random_density(Index d, Rng& rng, double trace, Index rank) {
  if (rank < 0) rank = d;
  if (rank < 1 || rank > d) throw ValidationError("random_density: rank must lie in [1, d]");
  const Matrix g = ginibre(d, rank, rng);
  Matrix m = g * g.adjoint();
  m *= trace / m.trace().real();
  return DensityOperator(HermitianOperator::hermitian_part(m));
}

HermitianOperator random_hermitian(Index d, Rng& rng) { return HermitianOperator::hermitian_part(ginibre(d, d, rng)); }

}  // namespace qmei

#include <cmath>

#include "doctest.h"
#include "qmei/errors.hpp"
#include "qmei/operators.hpp"
#include "test_support.hpp"

using namespace qmei;
using oracle::max_abs;

namespace {

Matrix mat2(Complex a, Complex b, Complex c, Complex d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("hermitian construction symmetrizes small asymmetry and rejects large") {
  Matrix m = mat2(1.0, Complex(0.5, 1e-12), 0.5, 2.0);
  HermitianOperator h(m);
  CHECK(max_abs(h.matrix() - h.matrix().adjoint()) == 0.0);
  CHECK(h.matrix()(0, 1).imag() == doctest::Approx(0.5e-12));

  Matrix bad = mat2(1.0, 0.5, 0.7, 2.0);
  try {
    HermitianOperator rejected(bad);
    FAIL("expected HermiticityError");
  } catch (const HermiticityError& e) {
    CHECK(e.max_asymmetry() == doctest::Approx(0.2));
    CHECK(((e.row() == 0 && e.col() == 1) || (e.row() == 1 && e.col() == 0)));
  }
}

TEST_CASE("spectral decomposition examples") {
  SUBCASE("identity") {
    auto s = spectral_decompose(HermitianOperator::identity(2));
    CHECK(s.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(max_abs(s.eigenvectors.adjoint() * s.eigenvectors - Matrix::Identity(2, 2)) < 1e-14);
  }
  SUBCASE("diag(3,-1) ascending") {
    auto s = spectral_decompose(HermitianOperator::diagonal(vec({3.0, -1.0})));
    CHECK(s.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(3.0));
    CHECK(std::abs(s.eigenvectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(s.eigenvectors(0, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("pauli x by hand") {
    auto s = spectral_decompose(pauli_x());
    CHECK(s.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0));
    const double r = 1.0 / std::sqrt(2.0);
    // eigenvector for -1 is (1,-1)/sqrt2 up to phase
    Eigen::VectorXcd minus(2), plus(2);
    minus << r, -r;
    plus << r, r;
    CHECK(std::abs(minus.dot(s.eigenvectors.col(0))) == doctest::Approx(1.0));
    CHECK(std::abs(plus.dot(s.eigenvectors.col(1))) == doctest::Approx(1.0));
  }
  SUBCASE("reconstruct") {
    auto rng = oracle::rng(11);
    auto h = random_hermitian(4, rng);
    CHECK(max_abs(spectral_decompose(h).reconstruct() - h.matrix()) < 1e-12);
  }
}

TEST_CASE("eigenspace grouping") {
  auto s = spectral_decompose(HermitianOperator::diagonal(vec({0.2, 0.5, 0.2, 0.5 + 1e-13})));
  auto groups = eigenspaces(s);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].size == 2);
  CHECK(groups[1].size == 2);
  CHECK(groups[0].value == doctest::Approx(0.2));
}

TEST_CASE("operator functions") {
  SUBCASE("exp of zero is identity") {
    auto e = operator_function(HermitianOperator::zero(3), [](double x) { return std::exp(x); });
    CHECK(max_abs(e.matrix() - Matrix::Identity(3, 3)) < 1e-15);
  }
  SUBCASE("ln of I/2") {
    auto l = operator_function(HermitianOperator::diagonal(vec({0.5, 0.5})), [](double x) { return std::log(x); });
    CHECK(max_abs(l.matrix() + std::log(2.0) * Matrix::Identity(2, 2)) < 1e-15);
  }
  SUBCASE("ln with support_only on diag(1,0)") {
    auto l = operator_function(HermitianOperator::diagonal(vec({1.0, 0.0})), [](double x) { return std::log(x); },
                               true);
    CHECK(max_abs(l.matrix()) < 1e-15);
  }
  SUBCASE("ln of a negative eigenvalue is a domain error") {
    CHECK_THROWS_AS(operator_function(HermitianOperator::diagonal(vec({1.0, -0.5})),
                                      [](double x) { return std::log(x); }),
                    DomainError);
  }
  SUBCASE("identity function reproduces input") {
    auto rng = oracle::rng(3);
    for (int k = 0; k < 20; ++k) {
      auto h = random_hermitian(2 + k % 4, rng);
      auto same = operator_function(h, [](double x) { return x; });
      CHECK(max_abs(same.matrix() - h.matrix()) < Tolerances{}.spec_tol);
    }
  }
  SUBCASE("exp(ln rho) round trip against Schur-Pade log") {
    auto rng = oracle::rng(4);
    for (int k = 0; k < 20; ++k) {
      auto rho = random_density(2 + k % 3, rng);
      auto l = operator_function(rho.op(), [](double x) { return std::log(x); });
      CHECK(max_abs(l.matrix() - oracle::logm(rho.matrix())) < 1e-9);
      auto back = operator_function(l, [](double x) { return std::exp(x); });
      CHECK(max_abs(back.matrix() - rho.matrix()) < 10 * Tolerances{}.spec_tol);
    }
  }
}

TEST_CASE("expectation values") {
  auto half = DensityOperator::maximally_mixed(2);
  CHECK(expectation(half, pauli_z()) == doctest::Approx(0.0));
  auto pure0 = DensityOperator::diagonal(vec({1.0, 0.0}));
  CHECK(expectation(pure0, HermitianOperator::diagonal(vec({2.5, -7.0}))) == doctest::Approx(2.5));
  auto d = DensityOperator::diagonal(vec({0.75, 0.25}));
  CHECK(std::abs(expectation(d, pauli_x())) < 1e-15);
  CHECK_THROWS_AS(expectation(d, HermitianOperator::identity(3)), ValidationError);

  auto rng = oracle::rng(5);
  auto rho = random_density(3, rng);
  auto a = random_hermitian(3, rng);
  CHECK(expectation(rho, a) == doctest::Approx((rho.matrix() * a.matrix()).trace().real()).epsilon(1e-12));
}

TEST_CASE("density operator validation") {
  CHECK_THROWS_AS(DensityOperator::diagonal(vec({0.7, 0.7})), ValidationError);
  CHECK_THROWS_AS(DensityOperator::diagonal(vec({1.2, -0.2})), ValidationError);
  CHECK_THROWS_AS(DensityOperator::diagonal(vec({0.0, 0.0})), ValidationError);
  auto sub = DensityOperator::diagonal(vec({0.3, 0.2}));
  CHECK(sub.trace() == doctest::Approx(0.5));
  CHECK_THROWS_AS(sub.scaled(3.0), ValidationError);
}

TEST_CASE("tensor products and powers") {
  auto half = DensityOperator::maximally_mixed(2);
  auto four = tensor_product(half, half);
  CHECK(four.dim() == 4);
  CHECK(max_abs(four.matrix() - 0.25 * Matrix::Identity(4, 4)) < 1e-15);

  const double p = 0.3;
  auto cube = n_fold_power(DensityOperator::diagonal(vec({p, 1 - p})), 3);
  REQUIRE(cube.dim() == 8);
  for (int idx = 0; idx < 8; ++idx) {
    double expect = 1.0;
    for (int bit = 2; bit >= 0; --bit) expect *= ((idx >> bit) & 1) ? (1 - p) : p;
    CHECK(cube.matrix()(idx, idx).real() == doctest::Approx(expect));
  }
  CHECK(max_abs(cube.matrix() - Matrix(cube.matrix().diagonal().asDiagonal())) < 1e-15);

  Tolerances small;
  small.max_dim = 16;
  CHECK_THROWS_AS(n_fold_power(half, 5, small), CapacityError);
  CHECK(n_fold_power(half, 4, small).dim() == 16);
}

TEST_CASE("partial trace") {
  auto rng = oracle::rng(6);
  SUBCASE("product state recovers factors scaled by partner trace") {
    for (int k = 0; k < 10; ++k) {
      auto a = random_density(2, rng, 0.8);
      auto b = random_density(3, rng, 0.5);
      auto ab = tensor_product(a, b);
      auto ka = partial_trace(ab, 2, 3, Subsystem::a);
      auto kb = partial_trace(ab, 2, 3, Subsystem::b);
      CHECK(max_abs(ka.matrix() - 0.5 * a.matrix()) < Tolerances{}.spec_tol);
      CHECK(max_abs(kb.matrix() - 0.8 * b.matrix()) < Tolerances{}.spec_tol);
    }
  }
  SUBCASE("bell state marginal is I/2") {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    auto bell = DensityOperator::pure(psi);
    auto a = partial_trace(bell, 2, 2, Subsystem::a);
    CHECK(max_abs(a.matrix() - 0.5 * Matrix::Identity(2, 2)) < 1e-15);
  }
  SUBCASE("index contraction oracle on a generic state") {
    auto rho = random_density(6, rng);
    Matrix expect_a = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 3; ++k) expect_a(i, j) += rho.matrix()(i * 3 + k, j * 3 + k);
    CHECK(max_abs(partial_trace(rho, 2, 3, Subsystem::a).matrix() - expect_a) < 1e-14);
  }
  CHECK_THROWS_AS(partial_trace(DensityOperator::maximally_mixed(4), 3, 2, Subsystem::a), ValidationError);
}

TEST_CASE("support projector") {
  auto rng = oracle::rng(7);
  auto full = random_density(3, rng);
  CHECK(max_abs(support_projector(full).matrix() - Matrix::Identity(3, 3)) < 1e-12);
  auto pure0 = DensityOperator::diagonal(vec({1.0, 0.0}));
  CHECK(max_abs(support_projector(pure0).matrix() - HermitianOperator::diagonal(vec({1, 0})).matrix()) < 1e-15);
  auto half = DensityOperator::diagonal(vec({0.5, 0.5, 0.0}));
  CHECK(max_abs(support_projector(half).matrix() - HermitianOperator::diagonal(vec({1, 1, 0})).matrix()) < 1e-15);

  for (int k = 0; k < 20; ++k) {
    auto rho = random_density(4, rng, 1.0, 1 + k % 4);
    const Matrix p = support_projector(rho).matrix();
    CHECK(max_abs(p * p - p) < Tolerances{}.spec_tol);
    CHECK(max_abs(p - p.adjoint()) < Tolerances{}.spec_tol);
    CHECK(p.trace().real() == doctest::Approx(static_cast<double>(1 + k % 4)));
  }
}

TEST_CASE("gell-mann basis") {
  for (Index d : {2, 3, 4}) {
    auto basis = gell_mann_basis(d);
    REQUIRE(basis.size() == static_cast<std::size_t>(d * d - 1));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      CHECK(std::abs(basis[i].trace()) < 1e-14);
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const double ip = trace_product(basis[i].matrix(), basis[j].matrix());
        CHECK(ip == doctest::Approx(i == j ? 2.0 : 0.0));
      }
    }
  }
}

TEST_CASE("qubit state bloch parametrization") {
  auto rho = qubit_state(0.3, -0.2, 0.5);
  CHECK(max_abs(rho.matrix() - oracle::bloch(0.3, -0.2, 0.5)) < 1e-15);
  CHECK(expectation(rho, pauli_y()) == doctest::Approx(-0.2));
  CHECK_THROWS_AS(qubit_state(1.0, 1.0, 0.0), ValidationError);
}

}  // TEST_SUITE

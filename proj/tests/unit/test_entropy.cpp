#include <cmath>
#include <random>

#include "doctest.h"
#include "qmei/entropy.hpp"
#include "qmei/errors.hpp"
#include "test_support.hpp"

using namespace qmei;

namespace {

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double rel(const DensityOperator& r, const DensityOperator& s) { return quantum_relative_entropy(r, s).value(); }

// Block-diagonal pinching by hand: keep the blocks [0,k) and [k,d).
Matrix pinch_blocks(const Matrix& m, Index k) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  out.topLeftCorner(k, k) = m.topLeftCorner(k, k);
  out.bottomRightCorner(m.rows() - k, m.cols() - k) = m.bottomRightCorner(m.rows() - k, m.cols() - k);
  return out;
}

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("classical entropy") {
  CHECK(classical_entropy(ClassicalDistribution(vec({1, 0, 0}))) == doctest::Approx(0.0));
  CHECK(classical_entropy(ClassicalDistribution::uniform(4)) == doctest::Approx(1.3862943611198906));
  CHECK(classical_entropy(ClassicalDistribution(vec({0.75, 0.25}))) ==
        doctest::Approx(0.75 * std::log(4.0 / 3.0) + 0.25 * std::log(4.0)));
  CHECK_THROWS_AS(ClassicalDistribution(vec({0.6, 0.6})), ValidationError);
  CHECK_THROWS_AS(ClassicalDistribution(vec({1.1, -0.1})), ValidationError);
}

TEST_CASE("classical relative entropy") {
  ClassicalDistribution p(vec({0.2, 0.3, 0.5}));
  CHECK(classical_relative_entropy(p, p).value() == doctest::Approx(0.0));
  auto v = classical_relative_entropy(ClassicalDistribution(vec({1, 0})), ClassicalDistribution(vec({0.5, 0.5})));
  CHECK(v.is_finite());
  CHECK(v.value() == doctest::Approx(std::log(2.0)));
  auto inf = classical_relative_entropy(ClassicalDistribution(vec({0.5, 0.5})), ClassicalDistribution(vec({1, 0})));
  CHECK(inf.is_infinite());
  CHECK(std::isinf(inf.value()));
}

TEST_CASE("von Neumann entropy") {
  auto rng = oracle::rng(21);
  Eigen::VectorXcd psi = qmei::ginibre(3, 1, rng).col(0);
  psi.normalize();
  CHECK(von_neumann_entropy(DensityOperator::pure(psi)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(von_neumann_entropy(DensityOperator::maximally_mixed(5)) == doctest::Approx(std::log(5.0)));
  CHECK(von_neumann_entropy(DensityOperator::diagonal(vec({0.75, 0.25}))) ==
        doctest::Approx(classical_entropy(ClassicalDistribution(vec({0.75, 0.25})))));
  for (int k = 0; k < 10; ++k) {
    auto rho = random_density(3, rng);
    CHECK(von_neumann_entropy(rho) == doctest::Approx(oracle::entropy(rho.matrix())).epsilon(1e-10));
  }
}

TEST_CASE("quantum relative entropy examples") {
  auto half = DensityOperator::maximally_mixed(2);
  auto pure0 = DensityOperator::diagonal(vec({1, 0}));
  CHECK(rel(half, half) == doctest::Approx(0.0));
  CHECK(rel(pure0, half) == doctest::Approx(std::log(2.0)));
  CHECK(quantum_relative_entropy(half, pure0).is_infinite());

  auto rng = oracle::rng(22);
  for (int k = 0; k < 20; ++k) {
    const Index d = 2 + k % 3;
    auto r = random_density(d, rng);
    auto s = random_density(d, rng);
    CHECK(rel(r, s) == doctest::Approx(oracle::relative_entropy(r.matrix(), s.matrix())).epsilon(1e-9));
  }
}

TEST_CASE("support rule uses the kernel weight of sigma") {
  auto sigma = DensityOperator::diagonal(vec({0.5, 0.5, 0.0}));
  auto inside = DensityOperator::diagonal(vec({0.9, 0.1, 0.0}));
  CHECK(quantum_relative_entropy(inside, sigma).is_finite());
  CHECK(rel(inside, sigma) == doctest::Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)));
  auto leak = DensityOperator::diagonal(vec({0.9, 0.1 - 1e-6, 1e-6}));
  CHECK(quantum_relative_entropy(leak, sigma).is_infinite());
}

TEST_CASE("entropy from relative entropy") {
  CHECK(entropy_from_relative(DensityOperator::maximally_mixed(3)) == doctest::Approx(std::log(3.0)));
  CHECK(entropy_from_relative(DensityOperator::diagonal(vec({0, 1, 0}))) == doctest::Approx(0.0).epsilon(1e-12));
  auto rng = oracle::rng(23);
  for (int k = 0; k < 10; ++k) {
    auto rho = random_density(2, rng);
    CHECK(std::abs(entropy_from_relative(rho) - von_neumann_entropy(rho)) < 1e-10);
  }
  CHECK_THROWS_AS(entropy_from_relative(DensityOperator::maximally_mixed(2, 0.5)), ValidationError);
}

TEST_CASE("relative entropy via extension") {
  auto half = DensityOperator::maximally_mixed(2);
  auto d = DensityOperator::diagonal(vec({0.75, 0.25}));
  auto exact = relative_entropy_via_extension(d, half, 2);
  CHECK(exact.denominator <= 2);
  CHECK(exact.value == doctest::Approx(rel(d, half)).epsilon(1e-12));
  CHECK(exact.error_bound == doctest::Approx(0.0));

  auto same = relative_entropy_via_extension(d, d, 100);
  CHECK(std::abs(same.value) < 1e-12);

  // rho tilted towards x, sigma along z
  auto rho = qubit_state(0.6, 0.0, 0.3);
  auto sigma = qubit_state(0.0, 0.0, 0.7);
  auto ext = relative_entropy_via_extension(rho, sigma, 10000);
  CHECK(std::abs(ext.value - rel(rho, sigma)) < 1e-6);
  CHECK(std::abs(ext.value - rel(rho, sigma)) <= ext.error_bound + 1e-12);
  CHECK(ext.denominator <= 10000);
  long sum = 0;
  for (auto b : ext.block_dims) sum += b;
  CHECK(sum == ext.denominator);

  CHECK_THROWS_AS(relative_entropy_via_extension(half, DensityOperator::diagonal(vec({1, 0})), 100), SupportError);
  CHECK_THROWS_AS(relative_entropy_via_extension(DensityOperator::maximally_mixed(2, 0.5), half, 100),
                  ValidationError);
}

TEST_CASE("meta probability") {
  auto half = DensityOperator::maximally_mixed(2);
  CHECK(meta_probability(half, half) == doctest::Approx(1.0));
  CHECK(meta_probability(half, DensityOperator::diagonal(vec({1, 0}))) == 0.0);
  CHECK(meta_probability(DensityOperator::diagonal(vec({1, 0})), half) == doctest::Approx(0.5));
}

TEST_CASE("axiom: unitary invariance") {
  auto rng = oracle::rng(31);
  for (int k = 0; k < 50; ++k) {
    const Index d = 2 + k % 3;
    auto r = random_density(d, rng);
    auto s = random_density(d, rng);
    Matrix u = random_unitary(d, rng);
    DensityOperator ur(Matrix(u * r.matrix() * u.adjoint()));
    DensityOperator us(Matrix(u * s.matrix() * u.adjoint()));
    CHECK(std::abs(rel(ur, us) - rel(r, s)) < 1e-10);
  }
}

TEST_CASE("axiom: additivity") {
  auto rng = oracle::rng(32);
  for (int k = 0; k < 50; ++k) {
    auto ra = random_density(2, rng), sa = random_density(2, rng);
    auto rb = random_density(3, rng), sb = random_density(3, rng);
    const double joint = rel(tensor_product(ra, rb), tensor_product(sa, sb));
    CHECK(std::abs(joint - rel(ra, sa) - rel(rb, sb)) < 1e-9);
    CHECK(std::abs(joint - oracle::relative_entropy(ra.matrix(), sa.matrix()) -
                   oracle::relative_entropy(rb.matrix(), sb.matrix())) < 1e-9);
  }
}

TEST_CASE("axiom: invariance under Hilbert space reduction") {
  auto rng = oracle::rng(33);
  for (int k = 0; k < 50; ++k) {
    auto r = random_density(2, rng), s = random_density(2, rng);
    Matrix u = random_unitary(3, rng);
    auto embed = [&](const DensityOperator& x) {
      Matrix big = Matrix::Zero(3, 3);
      big.topLeftCorner(2, 2) = x.matrix();
      return DensityOperator(Matrix(u * big * u.adjoint()));
    };
    CHECK(std::abs(rel(embed(r), embed(s)) - rel(r, s)) < 1e-10);
    CHECK(std::abs(von_neumann_entropy(embed(r)) - von_neumann_entropy(r)) < 1e-10);
  }
}

TEST_CASE("axiom: positivity and equality only at rho = sigma") {
  auto rng = oracle::rng(34);
  for (int k = 0; k < 50; ++k) {
    const Index d = 2 + k % 3;
    auto r = random_density(d, rng, 1.0, 1 + k % d);
    auto s = random_density(d, rng);
    CHECK(rel(r, s) > 0.0);
    CHECK(std::abs(rel(s, s)) < 1e-12);
  }
}

TEST_CASE("axiom: scaling") {
  auto rng = oracle::rng(35);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int k = 0; k < 50; ++k) {
    auto r = random_density(3, rng), s = random_density(3, rng);
    const double alpha = unit(rng);
    CHECK(std::abs(rel(r.scaled(alpha), s.scaled(alpha)) - alpha * rel(r, s)) < 1e-10);
  }
}

TEST_CASE("axiom: quasi-linearity in the first argument") {
  auto rng = oracle::rng(36);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    auto r1 = random_density(3, rng), r2 = random_density(3, rng);
    auto s1 = random_density(3, rng), s2 = random_density(3, rng);
    const double t = unit(rng);
    DensityOperator mix(Matrix(t * r1.matrix() + (1 - t) * r2.matrix()));
    const double mixing = von_neumann_entropy(mix) - t * von_neumann_entropy(r1) - (1 - t) * von_neumann_entropy(r2);
    const double brace1 = t * rel(r1, s1) + (1 - t) * rel(r2, s1) - rel(mix, s1);
    const double brace2 = t * rel(r1, s2) + (1 - t) * rel(r2, s2) - rel(mix, s2);
    CHECK(std::abs(brace1 - brace2) < 1e-9);
    CHECK(std::abs(brace1 - mixing) < 1e-9);
  }
}

TEST_CASE("axiom: strict concavity") {
  auto rng = oracle::rng(37);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int k = 0; k < 50; ++k) {
    auto r = random_density(3, rng), m = random_density(3, rng);
    const double t = unit(rng);
    DensityOperator mix(Matrix(t * r.matrix() + (1 - t) * m.matrix()));
    CHECK(von_neumann_entropy(mix) > t * von_neumann_entropy(r) + (1 - t) * von_neumann_entropy(m));
    DensityOperator self(Matrix(t * r.matrix() + (1 - t) * r.matrix()));
    CHECK(std::abs(von_neumann_entropy(self) - von_neumann_entropy(r)) < 1e-12);
  }
}

TEST_CASE("quadratic approximation") {
  auto rng = oracle::rng(38);
  for (int k = 0; k < 10; ++k) {
    DensityOperator rho(Matrix(0.5 * random_density(3, rng).matrix() + Matrix::Identity(3, 3) / 6.0));
    Matrix dir = random_hermitian(3, rng).matrix();
    dir -= (dir.trace() / 3.0) * Matrix::Identity(3, 3);
    dir /= dir.norm();
    double ratio[3];
    const double hs[3] = {1e-2, 1e-3, 1e-4};
    for (int i = 0; i < 3; ++i) {
      DensityOperator moved(Matrix(rho.matrix() + hs[i] * dir));
      ratio[i] = rel(moved, rho) / (hs[i] * hs[i]);
      CHECK(ratio[i] > 0.0);
    }
    // the ratio approaches its limit linearly in h, so successive gaps shrink about tenfold
    CHECK(std::abs(ratio[2] - ratio[1]) < 0.2 * std::abs(ratio[1] - ratio[0]) + 1e-6);
  }
}

TEST_CASE("axiom: monotonicity under pinching") {
  auto rng = oracle::rng(39);
  for (int k = 0; k < 100; ++k) {
    const Index d = 3 + k % 2;
    auto r = random_density(d, rng), s = random_density(d, rng);
    Matrix u = random_unitary(d, rng);
    const Index cut = 1 + k % (d - 1);
    auto pinched = [&](const DensityOperator& x) {
      return DensityOperator(Matrix(u * pinch_blocks(u.adjoint() * x.matrix() * u, cut) * u.adjoint()));
    };
    CHECK(rel(pinched(r), pinched(s)) <= rel(r, s) + 1e-12);
  }
}

TEST_CASE("axiom: subadditivity and Araki-Lieb") {
  auto rng = oracle::rng(40);
  for (int k = 0; k < 50; ++k) {
    auto ab = random_density(6, rng, 1.0, 1 + k % 6);
    const double s_ab = von_neumann_entropy(ab);
    const double s_a = von_neumann_entropy(partial_trace(ab, 2, 3, Subsystem::a));
    const double s_b = von_neumann_entropy(partial_trace(ab, 2, 3, Subsystem::b));
    CHECK(s_ab <= s_a + s_b + 1e-12);
    CHECK(std::abs(s_a - s_b) <= s_ab + 1e-12);
  }
  for (int k = 0; k < 20; ++k) {
    auto pure = random_density(6, rng, 1.0, 1);
    CHECK(std::abs(von_neumann_entropy(partial_trace(pure, 2, 3, Subsystem::a)) -
                   von_neumann_entropy(partial_trace(pure, 2, 3, Subsystem::b))) < 1e-10);
  }
}

}  // TEST_SUITE

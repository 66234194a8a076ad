#include "qmei/selftest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "qmei/asymptotics.hpp"
#include "qmei/canonical.hpp"
#include "qmei/coarsegrain.hpp"
#include "qmei/entropy.hpp"
#include "qmei/errors.hpp"
#include "qmei/random.hpp"

namespace qmei {

bool SelftestReport::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

namespace {

constexpr double kAlgebraicTol = 1e-12;

using Check = std::function<double(Rng&, const Tolerances&)>;
using Bound = std::function<double(const Tolerances&)>;

struct Property {
  const char* name;
  Bound tolerance;
  Check check;
};

double rel(const DensityOperator& a, const DensityOperator& b, const Tolerances& tol) {
  return quantum_relative_entropy(a, b, tol).value();
}

double vn(const DensityOperator& a, const Tolerances& tol) { return von_neumann_entropy(a, tol); }

Index pick(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

DensityOperator conjugate(const DensityOperator& rho, const Matrix& u, const Tolerances& tol) {
  return DensityOperator(HermitianOperator::hermitian_part(u * rho.matrix() * u.adjoint()), tol);
}

DensityOperator mix(const DensityOperator& a, const DensityOperator& b, double t, const Tolerances& tol) {
  return DensityOperator(HermitianOperator::hermitian_part(t * a.matrix() + (1.0 - t) * b.matrix()), tol);
}

// Blocks of consecutive columns of a random unitary.
Pinching random_pinching(Index d, Rng& rng, const Tolerances& tol) {
  const Matrix u = random_unitary(d, rng);
  const Index blocks = pick(rng, 1, d);
  std::vector<Index> cuts(static_cast<std::size_t>(d - 1));
  std::iota(cuts.begin(), cuts.end(), Index{1});
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(static_cast<std::size_t>(blocks - 1));
  cuts.push_back(0);
  cuts.push_back(d);
  std::sort(cuts.begin(), cuts.end());
  std::vector<HermitianOperator> ps;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const Matrix v = u.middleCols(cuts[k], cuts[k + 1] - cuts[k]);
    ps.push_back(HermitianOperator::hermitian_part(v * v.adjoint()));
  }
  return Pinching(std::move(ps), tol);
}

LevelOfDescription random_level(Index d, Rng& rng, const Tolerances& tol) {
  const Index m = pick(rng, 1, std::min<Index>(3, d * d - 2));
  std::vector<HermitianOperator> obs;
  for (Index a = 0; a < m; ++a) obs.push_back(random_hermitian(d, rng));
  return LevelOfDescription(d, std::move(obs), tol);
}

CanonicalState random_solved_state(Rng& rng, const Tolerances& tol) {
  const Index d = pick(rng, 2, 3);
  const DensityOperator sigma = random_density(d, rng);
  const LevelOfDescription level = random_level(d, rng, tol);
  const DensityOperator rho = random_density(d, rng, uniform(rng, 0.3, 1.0));
  return kawasaki_gunton(sigma, level, rho, tol);
}

std::vector<Property> properties() {
  std::vector<Property> ps;
  const Bound identity = [](const Tolerances& t) { return t.identity_tol; };

  ps.push_back({"unitary_invariance", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  const Matrix u = random_unitary(d, rng);
                  const auto ur = conjugate(rho, u, tol), us = conjugate(sigma, u, tol);
                  return std::max(std::abs(rel(ur, us, tol) - rel(rho, sigma, tol)), std::abs(vn(ur, tol) - vn(rho, tol)));
                }});

  ps.push_back({"additivity", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index da = pick(rng, 2, 3), db = pick(rng, 2, 3);
                  const auto ra = random_density(da, rng), sa = random_density(da, rng);
                  const auto rb = random_density(db, rng), sb = random_density(db, rng);
                  const auto rab = tensor_product(ra, rb, tol), sab = tensor_product(sa, sb, tol);
                  return std::max(std::abs(rel(rab, sab, tol) - rel(ra, sa, tol) - rel(rb, sb, tol)),
                                  std::abs(vn(rab, tol) - vn(ra, tol) - vn(rb, tol)));
                }});

  ps.push_back({"reduction_invariance", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 3), extra = pick(rng, 1, 2);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  const Matrix w = random_unitary(d + extra, rng);
                  auto embed = [&](const DensityOperator& x) {
                    Matrix big = Matrix::Zero(d + extra, d + extra);
                    big.topLeftCorner(d, d) = x.matrix();
                    return DensityOperator(HermitianOperator::hermitian_part(w * big * w.adjoint()), tol);
                  };
                  const auto er = embed(rho), es = embed(sigma);
                  return std::max(std::abs(rel(er, es, tol) - rel(rho, sigma, tol)), std::abs(vn(er, tol) - vn(rho, tol)));
                }});

  ps.push_back({"positivity", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  return std::max(std::max(0.0, -rel(rho, sigma, tol)), std::abs(rel(rho, rho, tol)));
                }});

  ps.push_back({"scaling", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  const double alpha = uniform(rng, 0.05, 1.0);
                  return std::abs(rel(rho.scaled(alpha, tol), sigma.scaled(alpha, tol), tol) - alpha * rel(rho, sigma, tol));
                }});

  ps.push_back({"quasi_linearity", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), mu = random_density(d, rng), sigma = random_density(d, rng);
                  const double t = uniform(rng, 0.0, 1.0);
                  const auto m = mix(rho, mu, t, tol);
                  const double gap = vn(m, tol) - t * vn(rho, tol) - (1.0 - t) * vn(mu, tol);
                  return std::abs(rel(m, sigma, tol) - t * rel(rho, sigma, tol) - (1.0 - t) * rel(mu, sigma, tol) + gap);
                }});

  ps.push_back({"concavity", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), mu = random_density(d, rng);
                  const double t = uniform(rng, 0.0, 1.0);
                  return std::max(0.0, t * vn(rho, tol) + (1.0 - t) * vn(mu, tol) - vn(mix(rho, mu, t, tol), tol));
                }});

  ps.push_back({"monotonicity_under_pinching", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  const Pinching p = random_pinching(d, rng, tol);
                  return std::max(0.0, rel(pinch(p, rho, tol), pinch(p, sigma, tol), tol) - rel(rho, sigma, tol));
                }});

  ps.push_back({"subadditivity", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index da = pick(rng, 2, 3), db = pick(rng, 2, 3);
                  const auto rab = random_density(da * db, rng, 1.0, pick(rng, 1, da * db));
                  const auto ra = partial_trace(rab, da, db, Subsystem::a, tol);
                  const auto rb = partial_trace(rab, da, db, Subsystem::b, tol);
                  return std::max(0.0, vn(rab, tol) - vn(ra, tol) - vn(rb, tol));
                }});

  ps.push_back({"araki_lieb", identity, [](Rng& rng, const Tolerances& tol) {
                  const Index da = pick(rng, 2, 3), db = pick(rng, 2, 3);
                  const auto rab = random_density(da * db, rng, 1.0, pick(rng, 1, da * db));
                  const auto ra = partial_trace(rab, da, db, Subsystem::a, tol);
                  const auto rb = partial_trace(rab, da, db, Subsystem::b, tol);
                  return std::max(0.0, std::abs(vn(ra, tol) - vn(rb, tol)) - vn(rab, tol));
                }});

  const Bound pyth = [](const Tolerances& t) { return t.pyth_tol; };
  ps.push_back({"pythagorean_pinching", pyth, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  return pythagorean_residual(rho, sigma, random_pinching(d, rng, tol), tol);
                }});

  ps.push_back({"pythagorean_decorrelator", pyth, [](Rng& rng, const Tolerances& tol) {
                  const Index da = pick(rng, 2, 3), db = pick(rng, 2, 3);
                  const auto rho = random_density(da * db, rng), sigma = random_density(da * db, rng);
                  return pythagorean_residual(rho, sigma, Decorrelator{da, db}, tol);
                }});

  ps.push_back({"pythagorean_kawasaki_gunton", pyth, [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 3);
                  const auto omega = random_density(d, rng);
                  const auto level = random_level(d, rng, tol);
                  const auto rho = random_density(d, rng), sigma = random_density(d, rng);
                  return pythagorean_residual(rho, sigma, KawasakiGunton{omega, level}, tol);
                }});

  ps.push_back({"kawasaki_gunton_idempotence", [](const Tolerances& t) { return t.solver_tol; },
                [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 3);
                  const auto sigma = random_density(d, rng);
                  const auto level = random_level(d, rng, tol);
                  const auto once = kawasaki_gunton(sigma, level, random_density(d, rng), tol).mu;
                  const auto twice = kawasaki_gunton(sigma, level, once, tol).mu;
                  return (twice.matrix() - once.matrix()).cwiseAbs().maxCoeff();
                }});

  ps.push_back({"canonical_entropy_identity", identity, [](Rng& rng, const Tolerances& tol) {
                  const auto e = canonical_entropy_identity(random_solved_state(rng, tol), tol);
                  return std::abs(e.lhs - e.rhs);
                }});

  ps.push_back({"partition_gradient", [](const Tolerances& t) { return t.fd_tol; },
                [](Rng& rng, const Tolerances& tol) { return partition_gradient_check(random_solved_state(rng, tol), tol); }});

  ps.push_back({"correlation_matrix_response", [](const Tolerances& t) { return t.fd_tol; },
                [](Rng& rng, const Tolerances& tol) {
                  const CanonicalState s = random_solved_state(rng, tol);
                  const RealMatrix c = correlation_matrix(s, tol);
                  const Index m = c.rows();
                  double worst = (c - c.transpose()).cwiseAbs().maxCoeff();
                  const double lowest = Eigen::SelfAdjointEigenSolver<RealMatrix>(c).eigenvalues()(0);
                  if (!(lowest > 0.0)) return std::numeric_limits<double>::infinity();
                  for (Index b = 0; b < m; ++b) {
                    RealVector up = s.lambda, down = s.lambda;
                    up(b) += tol.fd_step;
                    down(b) -= tol.fd_step;
                    const RealVector dg = (canonical_state(s.reference, s.level, up, s.iota, tol).expectations -
                                           canonical_state(s.reference, s.level, down, s.iota, tol).expectations) /
                                          (2.0 * tol.fd_step);
                    worst = std::max(worst, (c.col(b) + dg).cwiseAbs().maxCoeff() / std::max(1.0, c.cwiseAbs().maxCoeff()));
                  }
                  return worst;
                }});

  ps.push_back({"frequency_identity", [](const Tolerances&) { return kAlgebraicTol; },
                [](Rng& rng, const Tolerances& tol) {
                  const Index d = pick(rng, 2, 4);
                  const std::int64_t n = pick(rng, 1, 60);
                  std::vector<Index> counts(static_cast<std::size_t>(d), 0);
                  for (std::int64_t k = 0; k < n; ++k) ++counts[static_cast<std::size_t>(pick(rng, 0, d - 1))];
                  RealVector f(d), p(d);
                  for (Index i = 0; i < d; ++i) {
                    f(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(n);
                    p(i) = uniform(rng, 0.1, 1.0);
                  }
                  p /= p.sum();
                  const auto m = frequency_meta_probability(ClassicalDistribution(f, tol), ClassicalDistribution(p, tol), n, tol);
                  return std::abs(m.exact - m.factored) / m.exact;
                }});

  ps.push_back({"neyman_pearson_classical", [](const Tolerances&) { return 1e-10; },
                [](Rng& rng, const Tolerances& tol) {
                  const Index d = 2;
                  const int n = static_cast<int>(pick(rng, 1, 4));
                  RealVector r(d), s(d);
                  for (Index i = 0; i < d; ++i) {
                    r(i) = uniform(rng, 0.05, 1.0);
                    s(i) = uniform(rng, 0.05, 1.0);
                  }
                  r /= r.sum();
                  s /= s.sum();
                  const double eps = uniform(rng, 0.01, 0.5);
                  const double beta =
                      quantum_neyman_pearson(DensityOperator::diagonal(r, tol), DensityOperator::diagonal(s, tol), n, eps, tol).beta;
                  // Greedy test over individual sequences ordered by likelihood ratio.
                  const Index outcomes = static_cast<Index>(std::pow(2, n));
                  std::vector<std::pair<double, double>> seq;
                  for (Index x = 0; x < outcomes; ++x) {
                    double pr = 1.0, ps = 1.0;
                    for (int k = 0; k < n; ++k) {
                      pr *= r((x >> k) & 1);
                      ps *= s((x >> k) & 1);
                    }
                    seq.emplace_back(pr, ps);
                  }
                  std::sort(seq.begin(), seq.end(),
                            [](const auto& a, const auto& b) { return a.first * b.second > b.first * a.second; });
                  double acc = 0.0, oracle = 0.0;
                  for (const auto& [pr, ps] : seq) {
                    if (acc >= 1.0 - eps) break;
                    const double take = std::min(1.0, (1.0 - eps - acc) / pr);
                    acc += take * pr;
                    oracle += take * ps;
                  }
                  return std::abs(beta - oracle);
                }});

  ps.push_back({"concentration_thread_independence", [](const Tolerances&) { return 0.0; },
                [](Rng& rng, const Tolerances& tol) {
                  RealVector p(3);
                  for (Index i = 0; i < 3; ++i) p(i) = uniform(rng, 0.2, 1.0);
                  p /= p.sum();
                  const std::uint64_t seed = rng();
                  Tolerances mc = tol;
                  mc.enum_max = 0;
                  const ClassicalDistribution prior(p, tol);
                  const auto a = concentration_simulation(prior, 200, 1000, {0.005}, seed, mc, 1);
                  const auto b = concentration_simulation(prior, 200, 1000, {0.005}, seed, mc, 3);
                  return std::abs(a.mean_rel_entropy - b.mean_rel_entropy) + std::abs(a.empirical_tail[0] - b.empirical_tail[0]);
                }});
  return ps;
}

PropertyResult run_property(const Property& prop, std::size_t index, std::uint64_t seed, const Tolerances& tol,
                            std::int64_t instances) {
  PropertyResult res;
  res.name = prop.name;
  res.tolerance = prop.tolerance(tol);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  Rng rng(seq);
  for (std::int64_t i = 0; i < instances; ++i) {
    double v;
    try {
      v = prop.check(rng, tol);
    } catch (const std::exception& e) {
      v = std::numeric_limits<double>::infinity();
      if (res.first_error.empty()) res.first_error = e.what();
    }
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    ++res.instances;
    res.worst = std::max(res.worst, v);
    if (v > res.tolerance) ++res.failures;
  }
  return res;
}

}  // namespace

std::vector<std::string> selftest_property_names() {
  std::vector<std::string> out;
  for (const auto& p : properties()) out.emplace_back(p.name);
  return out;
}

SelftestReport run_selftest(std::uint64_t seed, const Tolerances& tol, int threads, std::int64_t instances) {
  if (threads < 1) throw ValidationError("selftest: threads must be >= 1");
  if (instances < 1) throw ValidationError("selftest: instances must be >= 1");
  const std::vector<Property> props = properties();
  SelftestReport rep;
  rep.seed = seed;
  rep.instances = instances;
  rep.properties.resize(props.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < props.size(); i = next++) rep.properties[i] = run_property(props[i], i, seed, tol, instances);
  };
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(threads), props.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rep;
}

}  // namespace qmei

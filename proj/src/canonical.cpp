#include "qmei/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmei/errors.hpp"

namespace qmei {

// ---------------------------------------------------------------------------
// LevelOfDescription

LevelOfDescription::LevelOfDescription(Index dim, std::vector<HermitianOperator> observables,
                                       const Tolerances& tol)
    : dim_(dim), observables_(std::move(observables)) {
  if (dim_ < 1) throw ValidationError("level of description needs dimension >= 1");
  const auto m = static_cast<Index>(observables_.size());
  for (std::size_t a = 0; a < observables_.size(); ++a) {
    if (observables_[a].dim() != dim_) {
      std::ostringstream os;
      os << "observable " << a << " has dimension " << observables_[a].dim() << ", level has " << dim_;
      throw ValidationError(os.str());
    }
  }
  if (m >= dim_ * dim_) {
    std::ostringstream os;
    os << "level of description has " << m << " observables; at most " << dim_ * dim_ - 1 << " allowed";
    throw ValidationError(os.str());
  }
  // Normalized Hilbert-Schmidt Gram matrix of {I, G_1..G_m}.
  std::vector<const Matrix*> ops;
  const Matrix id = Matrix::Identity(dim_, dim_);
  ops.push_back(&id);
  for (const auto& g : observables_) ops.push_back(&g.matrix());
  const Index n = m + 1;
  RealMatrix gram(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = trace_product(*ops[i], *ops[j]);
  RealVector norms = gram.diagonal().cwiseSqrt();
  for (Index i = 0; i < n; ++i) {
    if (!(norms(i) > 0.0)) {
      std::ostringstream os;
      os << "observable " << i - 1 << " is the zero operator";
      throw ValidationError(os.str());
    }
  }
  gram = norms.cwiseInverse().asDiagonal() * gram * norms.cwiseInverse().asDiagonal();
  const RealVector w = Eigen::SelfAdjointEigenSolver<RealMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  gram_condition_ = w(0) > 0.0 ? w(n - 1) / w(0) : std::numeric_limits<double>::infinity();
  if (!(gram_condition_ <= tol.gram_cond_max)) {
    std::ostringstream os;
    os << "observables {I, G_a} are linearly dependent (Gram condition number " << gram_condition_ << ")";
    throw ValidationError(os.str());
  }
}

LevelOfDescription LevelOfDescription::extended(const std::vector<HermitianOperator>& extra,
                                                const Tolerances& tol) const {
  std::vector<HermitianOperator> all = observables_;
  all.insert(all.end(), extra.begin(), extra.end());
  return LevelOfDescription(dim_, std::move(all), tol);
}

bool LevelOfDescription::same_as(const LevelOfDescription& other, double tol) const {
  if (dim_ != other.dim_ || observables_.size() != other.observables_.size()) return false;
  for (std::size_t a = 0; a < observables_.size(); ++a)
    if ((observables_[a].matrix() - other.observables_[a].matrix()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

double CanonicalState::z() const { return std::exp(log_z); }

// ---------------------------------------------------------------------------
// Exponential family on the support of sigma

namespace {

// Largest change of the exponent, in operator norm, allowed in one Newton step.
constexpr double kMaxExponentStep = 8.0;

struct ReducedFamily {
  Matrix support;                    // d x r orthonormal support vectors of sigma
  RealVector log_sigma;              // ln s_j - shift
  double shift = 0.0;                // <ln sigma>_{1/d}, averaged over the support
  std::vector<Matrix> observables;   // V^dagger G_a V
};

ReducedFamily reduce(const DensityOperator& sigma, const LevelOfDescription& level, const Tolerances& tol) {
  if (sigma.dim() != level.dim()) {
    std::ostringstream os;
    os << "reference state dimension " << sigma.dim() << " does not match level dimension " << level.dim();
    throw ValidationError(os.str());
  }
  const SpectralDecomposition s = spectral_decompose(sigma.op());
  const double floor = support_floor(s.eigenvalues, tol);
  Index first = 0;
  while (first < s.eigenvalues.size() && s.eigenvalues(first) <= floor) ++first;
  const Index r = s.eigenvalues.size() - first;
  if (r == 0) throw ValidationError("reference state has empty support");

  ReducedFamily fam;
  fam.support = s.eigenvectors.rightCols(r);
  fam.log_sigma = s.eigenvalues.tail(r).array().log().matrix();
  fam.shift = fam.log_sigma.mean();
  fam.log_sigma.array() -= fam.shift;
  for (const auto& g : level.observables()) {
    Matrix red = fam.support.adjoint() * g.matrix() * fam.support;
    fam.observables.push_back(0.5 * (red + red.adjoint()));
  }
  return fam;
}

struct Evaluation {
  double log_z = 0.0;
  RealVector probs;     // eigenvalues of mu on the support, summing to iota
  Matrix basis;         // r x r eigenvectors of the reduced exponent
  RealVector expectations;
};

Evaluation evaluate(const ReducedFamily& fam, const RealVector& lambda, double iota, const Tolerances& tol) {
  const Index r = fam.log_sigma.size();
  Matrix drive = Matrix::Zero(r, r);
  for (std::size_t a = 0; a < fam.observables.size(); ++a) drive += lambda(static_cast<Index>(a)) * fam.observables[a];
  if (!fam.observables.empty()) {
    const RealVector dw = Eigen::SelfAdjointEigenSolver<Matrix>(drive, Eigen::EigenvaluesOnly).eigenvalues();
    const double radius = std::max(std::abs(dw(0)), std::abs(dw(r - 1)));
    if (!(radius <= tol.lambda_max)) {
      std::ostringstream os;
      os << "exponent overflow: spectral radius of sum lambda^a G_a is " << radius << " (lambda_max "
         << tol.lambda_max << ")";
      throw DomainError(os.str());
    }
  }
  Matrix exponent = -drive;
  exponent.diagonal() += fam.log_sigma.cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (exponent + exponent.adjoint()));
  const RealVector& a = eig.eigenvalues();
  const double top = a.maxCoeff();
  const double sum = (a.array() - top).exp().sum();

  Evaluation ev;
  ev.log_z = top + std::log(sum);
  ev.probs = iota * (a.array() - ev.log_z).exp().matrix();
  ev.basis = eig.eigenvectors();
  ev.expectations.resize(static_cast<Index>(fam.observables.size()));
  for (std::size_t k = 0; k < fam.observables.size(); ++k) {
    const Matrix g = ev.basis.adjoint() * fam.observables[k] * ev.basis;
    ev.expectations(static_cast<Index>(k)) = g.diagonal().real().dot(ev.probs);
  }
  return ev;
}

// Integral of p^nu q^{1-nu} over nu in [0, 1].
double kubo_mori_kernel(double p, double q, const Tolerances& tol) {
  if (p <= 0.0 || q <= 0.0) return 0.0;
  const double dl = std::log(p) - std::log(q);
  if (std::abs(dl) < tol.kubo_degenerate) return p;
  return (p - q) / dl;
}

// C_ab in the eigenbasis of mu, operators already restricted to its support.
RealMatrix correlation_in_basis(const std::vector<Matrix>& observables, const Matrix& basis, const RealVector& probs,
                                const RealVector& expectations, double iota, const Tolerances& tol) {
  const Index r = probs.size();
  const auto m = static_cast<Index>(observables.size());
  RealMatrix kernel(r, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) kernel(i, j) = kubo_mori_kernel(probs(i), probs(j), tol);
  std::vector<Matrix> centered;
  centered.reserve(observables.size());
  for (Index a = 0; a < m; ++a) {
    Matrix b = basis.adjoint() * observables[static_cast<std::size_t>(a)] * basis;
    b.diagonal().array() -= expectations(a) / iota;
    centered.push_back(std::move(b));
  }
  RealMatrix c(m, m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b <= a; ++b) {
      // sum_ij k_ij (dG_a)_ij (dG_b)_ji
      const double v =
          (kernel.cast<Complex>().cwiseProduct(centered[static_cast<std::size_t>(a)])
               .cwiseProduct(centered[static_cast<std::size_t>(b)].transpose()))
              .sum()
              .real();
      c(a, b) = c(b, a) = v;
    }
  }
  return c;
}

CanonicalState assemble(const DensityOperator& sigma, const LevelOfDescription& level, const ReducedFamily& fam,
                        const Evaluation& ev, const RealVector& lambda, double iota, const Tolerances& tol) {
  const Matrix vectors = fam.support * ev.basis;
  const Matrix mu = vectors * ev.probs.cast<Complex>().asDiagonal() * vectors.adjoint();
  return CanonicalState{sigma,
                        level,
                        lambda,
                        iota,
                        ev.log_z,
                        DensityOperator(HermitianOperator::hermitian_part(mu), tol),
                        ev.expectations,
                        0.0,
                        0,
                        {},
                        {}};
}

void check_iota(double iota, const Tolerances& tol) {
  if (!(iota > 0.0) || iota > 1.0 + tol.trace_tol) {
    std::ostringstream os;
    os << "normalization iota = " << iota << " outside (0, 1]";
    throw ValidationError(os.str());
  }
}

struct Factorized {
  Eigen::LLT<RealMatrix> llt;
  bool shifted = false;
};

Factorized factorize(const RealMatrix& c, const Tolerances& tol) {
  Factorized f;
  const Index m = c.rows();
  if (m == 0) return f;
  f.llt.compute(c);
  const RealVector w = Eigen::SelfAdjointEigenSolver<RealMatrix>(c, Eigen::EigenvaluesOnly).eigenvalues();
  const bool near_singular = !(w(0) > 0.0) || w(m - 1) / w(0) > 1.0 / std::max(tol.tikh, 1e-300);
  if (f.llt.info() == Eigen::Success && !near_singular) return f;
  const double shift = tol.tikh * c.trace() / static_cast<double>(m);
  f.llt.compute(c + shift * RealMatrix::Identity(m, m));
  f.shifted = true;
  if (f.llt.info() != Eigen::Success || !(shift > 0.0))
    throw ConditioningError("correlation matrix is not positive definite even after Tikhonov shift");
  return f;
}

void check_feasible(const ReducedFamily& fam, const ConstraintData& data, const Tolerances& tol) {
  for (std::size_t a = 0; a < fam.observables.size(); ++a) {
    const RealVector w = Eigen::SelfAdjointEigenSolver<Matrix>(fam.observables[a], Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = w(0), hi = w(w.size() - 1);
    const double margin = tol.feas_margin * std::max(1.0, hi - lo);
    const double target = data.targets(static_cast<Index>(a)) / data.iota;
    if (!std::isfinite(target) || target <= lo + margin || target >= hi - margin)
      throw FeasibilityError(a, target, lo, hi);
  }
}

}  // namespace

CanonicalState canonical_state(const DensityOperator& sigma, const LevelOfDescription& level,
                               const RealVector& lambda, double iota, const Tolerances& tol) {
  check_iota(iota, tol);
  if (lambda.size() != static_cast<Index>(level.size())) {
    std::ostringstream os;
    os << "expected " << level.size() << " Lagrange parameters, got " << lambda.size();
    throw ValidationError(os.str());
  }
  if (!lambda.allFinite()) throw ValidationError("Lagrange parameters must be finite");
  const ReducedFamily fam = reduce(sigma, level, tol);
  return assemble(sigma, level, fam, evaluate(fam, lambda, iota, tol), lambda, iota, tol);
}

CanonicalState solve_minrent(const DensityOperator& sigma, const LevelOfDescription& level,
                             const ConstraintData& data, const Tolerances& tol) {
  check_iota(data.iota, tol);
  const auto m = static_cast<Index>(level.size());
  if (data.targets.size() != m) {
    std::ostringstream os;
    os << "expected " << m << " targets, got " << data.targets.size();
    throw ValidationError(os.str());
  }
  const ReducedFamily fam = reduce(sigma, level, tol);
  check_feasible(fam, data, tol);

  RealVector lambda = RealVector::Zero(m);
  Evaluation ev = evaluate(fam, lambda, data.iota, tol);
  RealVector gap = ev.expectations - data.targets;
  std::vector<double> history;
  std::vector<std::string> warnings;
  history.push_back(m > 0 ? gap.cwiseAbs().maxCoeff() : 0.0);

  int iter = 0;
  while (history.back() > tol.solver_tol) {
    if (iter >= tol.max_iter) {
      std::ostringstream os;
      os << "MinREnt solver did not converge in " << tol.max_iter << " iterations (residual " << history.back()
         << ")";
      throw DivergenceError(os.str(), history);
    }
    ++iter;
    const RealMatrix c = correlation_in_basis(fam.observables, ev.basis, ev.probs, ev.expectations, data.iota, tol);
    const Factorized f = factorize(c, tol);
    if (f.shifted && (warnings.empty() || warnings.back() != "correlation matrix near-singular; Tikhonov shift applied"))
      warnings.emplace_back("correlation matrix near-singular; Tikhonov shift applied");
    const RealVector step = f.llt.solve(gap);

    // Damping: the Euclidean residual decreases along the Newton direction for small steps.
    // Near-pure iterates make C tiny and the raw step huge, so it is first capped.
    Matrix move = Matrix::Zero(fam.support.cols(), fam.support.cols());
    for (Index a = 0; a < m; ++a) move += step(a) * fam.observables[static_cast<std::size_t>(a)];
    const double move_norm = Eigen::SelfAdjointEigenSolver<Matrix>(move, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .cwiseAbs()
                                 .maxCoeff();
    double scale = move_norm > kMaxExponentStep ? kMaxExponentStep / move_norm : 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving, scale *= 0.5) {
      const RealVector trial = lambda + scale * step;
      Evaluation next;
      try {
        next = evaluate(fam, trial, data.iota, tol);
      } catch (const DomainError&) {
        continue;
      }
      const RealVector next_gap = next.expectations - data.targets;
      if (next_gap.norm() < gap.norm()) {
        lambda = trial;
        ev = std::move(next);
        gap = next_gap;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "MinREnt solver stalled: no decrease after 20 step halvings (residual " << history.back() << ")";
      throw DivergenceError(os.str(), history);
    }
    history.push_back(gap.cwiseAbs().maxCoeff());
  }

  CanonicalState out = assemble(sigma, level, fam, ev, lambda, data.iota, tol);
  out.residual = history.back();
  out.iterations = iter;
  out.residual_history = std::move(history);
  out.warnings = std::move(warnings);
  return out;
}

ClassicalCanonical classical_maxent(const ClassicalDistribution& prior, const RealMatrix& features,
                                    const ConstraintData& data, const Tolerances& tol) {
  check_iota(data.iota, tol);
  const Index m = features.rows();
  const Index d = prior.size();
  if (m > 0 && features.cols() != d) {
    std::ostringstream os;
    os << "feature matrix has " << features.cols() << " columns, prior has " << d << " entries";
    throw ValidationError(os.str());
  }
  if (data.targets.size() != m) {
    std::ostringstream os;
    os << "expected " << m << " targets, got " << data.targets.size();
    throw ValidationError(os.str());
  }
  const double floor = support_floor(prior.weights(), tol);
  std::vector<Index> support;
  for (Index i = 0; i < d; ++i)
    if (prior[i] > floor) support.push_back(i);

  for (Index a = 0; a < m; ++a) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index i : support) {
      lo = std::min(lo, features(a, i));
      hi = std::max(hi, features(a, i));
    }
    const double margin = tol.feas_margin * std::max(1.0, hi - lo);
    const double target = data.targets(a) / data.iota;
    if (!std::isfinite(target) || target <= lo + margin || target >= hi - margin)
      throw FeasibilityError(static_cast<std::size_t>(a), target, lo, hi);
  }

  // Weights on the support: iota p_i exp(-lambda . G^i) / Z.
  auto weights_at = [&](const RealVector& lambda) {
    RealVector logw(static_cast<Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
      const Index i = support[k];
      logw(static_cast<Index>(k)) = std::log(prior[i]) - (m > 0 ? lambda.dot(features.col(i)) : 0.0);
    }
    const double top = logw.maxCoeff();
    const double log_z = top + std::log((logw.array() - top).exp().sum());
    return RealVector(data.iota * (logw.array() - log_z).exp().matrix());
  };
  auto moments = [&](const RealVector& w) {
    RealVector g = RealVector::Zero(m);
    for (std::size_t k = 0; k < support.size(); ++k) g += w(static_cast<Index>(k)) * features.col(support[k]);
    return g;
  };

  RealVector lambda = RealVector::Zero(m);
  RealVector w = weights_at(lambda);
  RealVector gap = moments(w) - data.targets;
  std::vector<double> history{m > 0 ? gap.cwiseAbs().maxCoeff() : 0.0};
  int iter = 0;
  while (history.back() > tol.solver_tol) {
    if (iter >= tol.max_iter) throw DivergenceError("classical MaxEnt solver did not converge", history);
    ++iter;
    // Covariance of the features under q (times iota): -d<G>/d lambda.
    const RealVector mean = moments(w) / data.iota;
    RealMatrix cov = RealMatrix::Zero(m, m);
    for (std::size_t k = 0; k < support.size(); ++k) {
      const RealVector dg = features.col(support[k]) - mean;
      cov += w(static_cast<Index>(k)) * dg * dg.transpose();
    }
    const RealVector step = factorize(cov, tol).llt.solve(gap);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving, scale *= 0.5) {
      const RealVector trial = lambda + scale * step;
      const RealVector tw = weights_at(trial);
      const RealVector tg = moments(tw) - data.targets;
      if (tw.allFinite() && tg.norm() < gap.norm()) {
        lambda = trial;
        w = tw;
        gap = tg;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw DivergenceError("classical MaxEnt solver stalled", history);
    history.push_back(gap.cwiseAbs().maxCoeff());
  }

  RealVector q = RealVector::Zero(d);
  for (std::size_t k = 0; k < support.size(); ++k) q(support[k]) = w(static_cast<Index>(k));
  return {ClassicalDistribution(q, tol), lambda, iter};
}

double kubo_mori_correlation(const DensityOperator& rho, const HermitianOperator& b, const HermitianOperator& a,
                             const Tolerances& tol) {
  if (a.dim() != rho.dim() || b.dim() != rho.dim()) throw ValidationError("kubo_mori_correlation: dimension mismatch");
  const SpectralDecomposition s = spectral_decompose(rho.op());
  const double floor = support_floor(s.eigenvalues, tol);
  Matrix ka = s.eigenvectors.adjoint() * a.matrix() * s.eigenvectors;
  Matrix kb = s.eigenvectors.adjoint() * b.matrix() * s.eigenvectors;
  const Index d = rho.dim();
  // Operators must not couple into the kernel of rho.
  for (Index i = 0; i < d; ++i) {
    if (s.eigenvalues(i) > floor) continue;
    const double scale = std::max({1.0, ka.cwiseAbs().maxCoeff(), kb.cwiseAbs().maxCoeff()});
    if (ka.row(i).cwiseAbs().maxCoeff() > tol.spec_tol * scale || kb.row(i).cwiseAbs().maxCoeff() > tol.spec_tol * scale)
      throw SupportError("kubo_mori_correlation: operator not supported within supp rho");
  }
  Complex sum = 0.0;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      sum += kubo_mori_kernel(s.eigenvalues(i), s.eigenvalues(j), tol) * std::conj(kb(j, i)) * ka(j, i);
  return sum.real();
}

RealMatrix correlation_matrix(const CanonicalState& state, const Tolerances& tol) {
  const ReducedFamily fam = reduce(state.reference, state.level, tol);
  const Evaluation ev = evaluate(fam, state.lambda, state.iota, tol);
  return correlation_in_basis(fam.observables, ev.basis, ev.probs, ev.expectations, state.iota, tol);
}

EntropyIdentity canonical_entropy_identity(const CanonicalState& state, const Tolerances& tol) {
  const DensityOperator normalized = state.mu.scaled(1.0 / state.iota, tol);
  const HermitianOperator log_sigma =
      operator_function(state.reference.op(), [](double x) { return std::log(x); }, true, tol);
  const RealVector s = spectral_decompose(state.reference.op()).eigenvalues;
  const double floor = support_floor(s, tol);
  double sum = 0.0;
  int count = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > floor) {
      sum += std::log(s(i));
      ++count;
    }
  }
  const double uniform_mean = sum / count;

  EntropyIdentity out{};
  out.lhs = von_neumann_entropy(normalized, tol) + expectation(normalized, log_sigma, tol) - uniform_mean;
  out.rhs = state.log_z;
  for (Index a = 0; a < state.lambda.size(); ++a) out.rhs += state.lambda(a) * state.expectations(a) / state.iota;
  return out;
}

double partition_gradient_check(const CanonicalState& state, const Tolerances& tol) {
  const ReducedFamily fam = reduce(state.reference, state.level, tol);
  const double h = tol.fd_step;
  double worst = 0.0;
  for (Index a = 0; a < state.lambda.size(); ++a) {
    RealVector up = state.lambda, down = state.lambda;
    up(a) += h;
    down(a) -= h;
    const double grad = (evaluate(fam, up, state.iota, tol).log_z - evaluate(fam, down, state.iota, tol).log_z) / (2 * h);
    worst = std::max(worst, std::abs(grad + state.expectations(a) / state.iota));
  }
  return worst;
}

double macrostate_relative_entropy(const CanonicalState& s1, const CanonicalState& s2, const Tolerances& tol) {
  const double scale = std::max(1.0, s1.reference.matrix().cwiseAbs().maxCoeff());
  if (s1.reference.dim() != s2.reference.dim() ||
      (s1.reference.matrix() - s2.reference.matrix()).cwiseAbs().maxCoeff() > tol.spec_tol * scale)
    throw ValidationError("macrostate_relative_entropy: states have different reference states");
  if (!s1.level.same_as(s2.level, tol.spec_tol))
    throw ValidationError("macrostate_relative_entropy: states live on mismatched levels of description");
  return (s2.lambda - s1.lambda).dot(s1.expectations) + s1.iota * (s2.log_z - s1.log_z) -
         s1.iota * std::log(s2.iota / s1.iota);
}

SecondOrder second_order_divergence(const CanonicalState& state, const RealVector& delta_g, const Tolerances& tol) {
  if (delta_g.size() != state.lambda.size()) {
    std::ostringstream os;
    os << "expected " << state.lambda.size() << " target shifts, got " << delta_g.size();
    throw ValidationError(os.str());
  }
  if (delta_g.size() == 0 || delta_g.cwiseAbs().maxCoeff() == 0.0) return {0.0, 0.0};
  const CanonicalState shifted =
      solve_minrent(state.reference, state.level, ConstraintData{state.iota, state.expectations + delta_g}, tol);
  const RealMatrix c = correlation_matrix(state, tol);
  const RealVector y = factorize(c, tol).llt.solve(delta_g);
  return {macrostate_relative_entropy(state, shifted, tol), 0.5 * delta_g.dot(y)};
}

}  // namespace qmei

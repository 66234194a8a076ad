#include "qmei/coarsegrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmei/entropy.hpp"
#include "qmei/errors.hpp"

namespace qmei {

Pinching::Pinching(std::vector<HermitianOperator> projectors, const Tolerances& tol)
    : projectors_(std::move(projectors)) {
  if (projectors_.empty()) throw ValidationError("pinching needs at least one projector");
  const Index d = projectors_.front().dim();
  Matrix total = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < projectors_.size(); ++i) {
    const Matrix& p = projectors_[i].matrix();
    if (p.rows() != d) throw ValidationError("pinching projectors have different dimensions");
    if ((p * p - p).cwiseAbs().maxCoeff() > tol.spec_tol) {
      std::ostringstream os;
      os << "pinching operator " << i << " is not a projector";
      throw ValidationError(os.str());
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((p * projectors_[j].matrix()).cwiseAbs().maxCoeff() > tol.spec_tol) {
        std::ostringstream os;
        os << "pinching projectors " << j << " and " << i << " are not orthogonal";
        throw ValidationError(os.str());
      }
    }
    if (p.trace().real() < 0.5) {
      std::ostringstream os;
      os << "pinching projector " << i << " is zero";
      throw ValidationError(os.str());
    }
    total += p;
  }
  if ((total - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol.spec_tol)
    throw ValidationError("pinching projectors do not sum to the identity");
}

Pinching Pinching::from_basis(const Matrix& unitary, const Tolerances& tol) {
  std::vector<HermitianOperator> ps;
  for (Index k = 0; k < unitary.cols(); ++k)
    ps.push_back(HermitianOperator::hermitian_part(unitary.col(k) * unitary.col(k).adjoint()));
  return Pinching(std::move(ps), tol);
}

DensityOperator pinch(const Pinching& p, const DensityOperator& rho, const Tolerances& tol) {
  if (p.dim() != rho.dim()) {
    std::ostringstream os;
    os << "pinch: projector dimension " << p.dim() << " does not match state dimension " << rho.dim();
    throw ValidationError(os.str());
  }
  Matrix out = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& proj : p.projectors())
    out += (trace_product(rho.matrix(), proj.matrix()) / proj.trace()) * proj.matrix();
  return DensityOperator(HermitianOperator::hermitian_part(out), tol);
}

DensityOperator decorrelate(const DensityOperator& rho_ab, Index d_a, Index d_b, const Tolerances& tol) {
  if (d_a < 1 || d_b < 1 || d_a * d_b != rho_ab.dim()) {
    std::ostringstream os;
    os << "decorrelate: dimension " << rho_ab.dim() << " does not factor as " << d_a << " x " << d_b;
    throw ValidationError(os.str());
  }
  const Matrix a = partial_trace(rho_ab.matrix(), d_a, d_b, Subsystem::a);
  const Matrix b = partial_trace(rho_ab.matrix(), d_a, d_b, Subsystem::b);
  return DensityOperator(HermitianOperator::hermitian_part(kron(a, b) / rho_ab.trace()), tol);
}

namespace {

ConstraintData read_targets(const LevelOfDescription& level, const DensityOperator& rho, const Tolerances& tol) {
  ConstraintData data;
  data.iota = rho.trace();
  data.targets.resize(static_cast<Index>(level.size()));
  for (std::size_t a = 0; a < level.size(); ++a)
    data.targets(static_cast<Index>(a)) = expectation(rho, level[a], tol);
  return data;
}

DensityOperator clip_spectrum(const DensityOperator& rho, const Tolerances& tol) {
  SpectralDecomposition s = spectral_decompose(rho.op());
  const double floor = std::max(support_floor(s.eigenvalues, tol), 10.0 * tol.feas_margin * rho.trace());
  s.eigenvalues = s.eigenvalues.cwiseMax(floor);
  const Matrix m = s.reconstruct();
  const double scale = rho.trace() / m.trace().real();
  return DensityOperator(HermitianOperator::hermitian_part(scale * m), tol);
}

}  // namespace

CanonicalState kawasaki_gunton(const DensityOperator& sigma, const LevelOfDescription& level,
                               const DensityOperator& rho, const Tolerances& tol) {
  if (rho.dim() != level.dim()) {
    std::ostringstream os;
    os << "kawasaki_gunton: state dimension " << rho.dim() << " does not match level dimension " << level.dim();
    throw ValidationError(os.str());
  }
  try {
    return solve_minrent(sigma, level, read_targets(level, rho, tol), tol);
  } catch (const FeasibilityError&) {
    return solve_minrent(sigma, level, read_targets(level, clip_spectrum(rho, tol), tol), tol);
  }
}

DensityOperator apply(const Grain& grain, const DensityOperator& rho, const Tolerances& tol) {
  return std::visit(
      [&](const auto& g) -> DensityOperator {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Pinching>)
          return pinch(g, rho, tol);
        else if constexpr (std::is_same_v<T, Decorrelator>)
          return decorrelate(rho, g.dim_a, g.dim_b, tol);
        else
          return kawasaki_gunton(g.reference, g.level, rho, tol).mu;
      },
      grain);
}

double pythagorean_residual(const DensityOperator& rho, const DensityOperator& sigma, const Grain& grain,
                            const Tolerances& tol) {
  const DensityOperator p_rho = apply(grain, rho, tol);
  const DensityOperator p_sigma = apply(grain, sigma, tol);
  const ExtendedValue total = quantum_relative_entropy(rho, p_sigma, tol);
  const ExtendedValue inner = quantum_relative_entropy(rho, p_rho, tol);
  const ExtendedValue outer = quantum_relative_entropy(p_rho, p_sigma, tol);
  if (total.is_infinite() || inner.is_infinite() || outer.is_infinite())
    throw SupportError("pythagorean_residual: a relative entropy term is infinite (support violation)");
  return std::abs(total.value() - inner.value() - outer.value());
}

namespace {

// Real coordinates of a Hermitian operator in the Hilbert-Schmidt geometry.
RealVector hs_coordinates(const Matrix& m) {
  const Index n = m.size();
  RealVector v(2 * n);
  for (Index k = 0; k < n; ++k) {
    v(k) = m.data()[k].real();
    v(n + k) = m.data()[k].imag();
  }
  return v;
}

}  // namespace

ContractionVerdict contract_level(const DensityOperator& sigma, const LevelOfDescription& level,
                                  const std::vector<HermitianOperator>& extra, const ConstraintData& data,
                                  const RealVector& f, std::int64_t n, const RealVector& delta_f,
                                  const Tolerances& tol) {
  const auto l = static_cast<Index>(extra.size());
  if (f.size() != l || delta_f.size() != l) {
    std::ostringstream os;
    os << "contract_level: " << l << " extra observables but " << f.size() << " targets and " << delta_f.size()
       << " accuracies";
    throw ValidationError(os.str());
  }
  if (n < 1) throw ValidationError("contract_level: trial count N must be >= 1");
  for (const auto& op : extra)
    if (op.dim() != level.dim()) throw ValidationError("contract_level: extra observable has wrong dimension");

  const Index d = level.dim();
  const auto m = static_cast<Index>(level.size());

  // Spanning set {I, G_a, kept F_c} and the target each member carries.
  std::vector<RealVector> span;
  std::vector<double> span_targets;
  span.push_back(hs_coordinates(Matrix::Identity(d, d)));
  span_targets.push_back(data.iota);
  for (Index a = 0; a < m; ++a) {
    span.push_back(hs_coordinates(level[static_cast<std::size_t>(a)].matrix()));
    span_targets.push_back(data.targets(a));
  }

  ContractionVerdict verdict;
  std::vector<HermitianOperator> kept;
  std::vector<double> kept_f, kept_df;
  const double dependence = 1.0 / std::sqrt(tol.gram_cond_max);
  for (Index b = 0; b < l; ++b) {
    const RealVector v = hs_coordinates(extra[static_cast<std::size_t>(b)].matrix());
    RealMatrix basis(v.size(), static_cast<Index>(span.size()));
    for (std::size_t k = 0; k < span.size(); ++k) basis.col(static_cast<Index>(k)) = span[k];
    const RealVector coeff = basis.colPivHouseholderQr().solve(v);
    const double rel = (basis * coeff - v).norm() / std::max(v.norm(), 1e-300);
    if (rel > dependence) {
      span.push_back(v);
      span_targets.push_back(f(b));
      kept.push_back(extra[static_cast<std::size_t>(b)]);
      kept_f.push_back(f(b));
      kept_df.push_back(delta_f(b));
      verdict.independent.push_back(static_cast<std::size_t>(b));
      continue;
    }
    double implied = 0.0, weight = 0.0;
    for (std::size_t k = 0; k < span_targets.size(); ++k) {
      implied += coeff(static_cast<Index>(k)) * span_targets[k];
      weight += std::abs(coeff(static_cast<Index>(k))) * std::max(1.0, std::abs(span_targets[k]));
    }
    if (std::abs(implied - f(b)) > tol.solver_tol * std::max(1.0, weight)) {
      std::ostringstream os;
      os.precision(17);
      os << "contract_level: extra observable " << b << " is a combination of the level, which implies target "
         << implied << ", but f = " << f(b);
      throw FeasibilityError(os.str());
    }
  }

  const auto li = static_cast<std::int64_t>(kept.size());
  const std::int64_t manifold = std::max<std::int64_t>(d * d - 1 - (m + li), 0);
  verdict.fluctuation_threshold = static_cast<double>(manifold) / (2.0 * static_cast<double>(n));

  if (kept.empty()) {
    verdict.entropy_differential = 0.0;
    verdict.accuracy_threshold = 0.0;
    verdict.accepted = true;
    return verdict;
  }

  const CanonicalState base = solve_minrent(sigma, level, data, tol);
  const LevelOfDescription ext = level.extended(kept, tol);
  ConstraintData ext_data{data.iota, RealVector(m + li)};
  ext_data.targets.head(m) = data.targets;
  RealVector shift = RealVector::Zero(m + li);
  for (Index b = 0; b < li; ++b) {
    ext_data.targets(m + b) = kept_f[static_cast<std::size_t>(b)];
    shift(m + b) = kept_df[static_cast<std::size_t>(b)];
  }
  const CanonicalState full = solve_minrent(sigma, ext, ext_data, tol);

  verdict.entropy_differential =
      quantum_relative_entropy(full.mu, sigma, tol).value() - quantum_relative_entropy(base.mu, sigma, tol).value();
  verdict.accuracy_threshold = second_order_divergence(full, shift, tol).exact;
  verdict.accepted =
      verdict.entropy_differential < std::max(verdict.fluctuation_threshold, verdict.accuracy_threshold);
  return verdict;
}

}  // namespace qmei

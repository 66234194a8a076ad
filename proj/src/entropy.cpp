#include "qmei/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qmei/errors.hpp"

namespace qmei {

ClassicalDistribution::ClassicalDistribution(RealVector weights, const Tolerances& tol)
    : weights_(std::move(weights)), total_(0.0) {
  if (weights_.size() < 1) throw ValidationError("distribution must have at least one weight");
  for (Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_(i)) || weights_(i) < -tol.psd_tol) {
      std::ostringstream os;
      os << "distribution weight " << i << " is invalid: " << weights_(i);
      throw ValidationError(os.str());
    }
    weights_(i) = std::max(weights_(i), 0.0);
  }
  total_ = weights_.sum();
  if (!(total_ > 0.0) || total_ > 1.0 + tol.trace_tol) {
    std::ostringstream os;
    os << "distribution total " << total_ << " outside (0, 1]";
    throw ValidationError(os.str());
  }
}

ClassicalDistribution ClassicalDistribution::uniform(Index d) {
  return ClassicalDistribution(RealVector::Constant(d, 1.0 / static_cast<double>(d)));
}

namespace {

double entropy_of_spectrum(const RealVector& w, double floor) {
  double s = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > floor) s -= w(i) * std::log(w(i));
  return s;
}

void require_unit_trace(double trace, const Tolerances& tol, const char* what) {
  if (std::abs(trace - 1.0) > tol.trace_tol) {
    std::ostringstream os;
    os << what << " requires unit trace, got " << trace;
    throw ValidationError(os.str());
  }
}

}  // namespace

double classical_entropy(const ClassicalDistribution& q, const Tolerances& tol) {
  return entropy_of_spectrum(q.weights(), support_floor(q.weights(), tol));
}

ExtendedValue classical_relative_entropy(const ClassicalDistribution& q, const ClassicalDistribution& p,
                                         const Tolerances& tol) {
  if (q.size() != p.size()) {
    std::ostringstream os;
    os << "classical relative entropy: length mismatch (" << q.size() << " vs " << p.size() << ")";
    throw ValidationError(os.str());
  }
  const double qfloor = support_floor(q.weights(), tol);
  const double pfloor = support_floor(p.weights(), tol);
  double s = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    if (q[i] <= qfloor) continue;
    if (p[i] <= pfloor) return ExtendedValue::infinity();
    s += q[i] * std::log(q[i] / p[i]);
  }
  return ExtendedValue::finite(s);
}

double von_neumann_entropy(const DensityOperator& rho, const Tolerances& tol) {
  const RealVector w = spectral_decompose(rho.op()).eigenvalues;
  return entropy_of_spectrum(w, support_floor(w, tol));
}

ExtendedValue quantum_relative_entropy(const DensityOperator& rho, const DensityOperator& sigma,
                                       const Tolerances& tol) {
  if (rho.dim() != sigma.dim()) {
    std::ostringstream os;
    os << "quantum relative entropy: dimension mismatch (" << rho.dim() << " vs " << sigma.dim() << ")";
    throw ValidationError(os.str());
  }
  const SpectralDecomposition r = spectral_decompose(rho.op());
  const SpectralDecomposition s = spectral_decompose(sigma.op());
  const double rfloor = support_floor(r.eigenvalues, tol);
  const double sfloor = support_floor(s.eigenvalues, tol);
  const RealMatrix overlap = (r.eigenvectors.adjoint() * s.eigenvectors).cwiseAbs2();

  const Index d = rho.dim();
  double leak = 0.0;
  double cross = 0.0;
  double self = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double ri = r.eigenvalues(i);
    if (ri <= rfloor) continue;
    self += ri * std::log(ri);
    for (Index j = 0; j < d; ++j) {
      const double sj = s.eigenvalues(j);
      if (sj <= sfloor)
        leak += ri * overlap(i, j);
      else
        cross += ri * overlap(i, j) * std::log(sj);
    }
  }
  if (leak > tol.support_tol) return ExtendedValue::infinity();
  return ExtendedValue::finite(self - cross);
}

double entropy_from_relative(const DensityOperator& rho, const Tolerances& tol) {
  require_unit_trace(rho.trace(), tol, "entropy_from_relative");
  const auto uniform = DensityOperator::maximally_mixed(rho.dim());
  return std::log(static_cast<double>(rho.dim())) - quantum_relative_entropy(rho, uniform, tol).value();
}

namespace {

struct RationalApproximation {
  std::int64_t denominator = 0;
  std::vector<std::int64_t> numerators;
  double error_bound = std::numeric_limits<double>::infinity();
};

// Common-denominator approximation t_i ~ D_i / D over D = k..d_max, scored by
// sum_i r_i |ln(D_i / (D t_i))|, which bounds the error the approximation
// induces in the extension value. For each D the D_i start at floor(D t_i) and
// the leftover units go to the entries whose weighted error improves most.
RationalApproximation approximate_weights(const std::vector<double>& t, const std::vector<double>& r,
                                          std::int64_t d_max) {
  const std::size_t k = t.size();
  const double inf = std::numeric_limits<double>::infinity();
  RationalApproximation best;
  std::vector<std::int64_t> num(k);
  std::vector<double> gain(k);
  std::vector<std::size_t> order(k);
  const auto cost = [&](std::size_t i, std::int64_t n, double x) {
    if (n < 1) return inf;
    return r[i] * std::abs(std::log(static_cast<double>(n) / x));
  };
  for (std::int64_t d = static_cast<std::int64_t>(k); d <= d_max; ++d) {
    const double dd = static_cast<double>(d);
    std::int64_t used = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = dd * t[i];
      num[i] = static_cast<std::int64_t>(std::floor(x));
      used += num[i];
      const double lo = num[i] < 1 ? inf : cost(i, num[i], x);
      gain[i] = lo == inf ? inf : lo - cost(i, num[i] + 1, x);
    }
    const std::int64_t spare = d - used;
    if (spare < 0 || spare > static_cast<std::int64_t>(k)) continue;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
    for (std::int64_t j = 0; j < spare; ++j) ++num[order[static_cast<std::size_t>(j)]];
    double total = 0.0;
    for (std::size_t i = 0; i < k && total < inf; ++i) total += cost(i, num[i], dd * t[i]);
    if (total < best.error_bound) {
      best.error_bound = total;
      best.denominator = d;
      best.numerators = num;
    }
  }
  return best;
}

}  // namespace

ExtensionResult relative_entropy_via_extension(const DensityOperator& rho, const DensityOperator& sigma,
                                               std::int64_t d_max, const Tolerances& tol) {
  require_unit_trace(rho.trace(), tol, "relative_entropy_via_extension (rho)");
  require_unit_trace(sigma.trace(), tol, "relative_entropy_via_extension (sigma)");
  if (quantum_relative_entropy(rho, sigma, tol).is_infinite())
    throw SupportError("relative_entropy_via_extension: supp rho is not contained in supp sigma");

  const SpectralDecomposition s = spectral_decompose(sigma.op());
  const double sfloor = support_floor(s.eigenvalues, tol);

  // Pinch rho onto the eigenspaces of sigma: each block keeps tr(rho P_i),
  // spread uniformly over the block.
  ExtensionResult out;
  Matrix pinched = Matrix::Zero(rho.dim(), rho.dim());
  std::vector<double> block_size;
  for (const Eigenspace& e : eigenspaces(s, tol)) {
    const Matrix v = s.eigenvectors.middleCols(e.begin, e.size);
    const Matrix p = v * v.adjoint();
    const double r = std::max(0.0, trace_product(rho.matrix(), p));
    const double t = s.eigenvalues.segment(e.begin, e.size).sum();
    pinched += (r / static_cast<double>(e.size)) * p;
    if (e.value <= sfloor) continue;  // kernel block; carries no weight of rho
    out.rho_weights.push_back(r);
    out.sigma_weights.push_back(t);
    block_size.push_back(static_cast<double>(e.size));
  }

  const RationalApproximation approx = approximate_weights(out.sigma_weights, out.rho_weights, d_max);
  if (approx.denominator == 0) {
    std::ostringstream os;
    os << "no rational approximation of sigma's eigenspace weights with denominator <= " << d_max;
    throw ValidationError(os.str());
  }
  out.denominator = approx.denominator;
  out.block_dims = approx.numerators;

  const double dd = static_cast<double>(out.denominator);
  const double bound = approx.error_bound;
  double s_extended = 0.0;
  for (std::size_t i = 0; i < out.rho_weights.size(); ++i) {
    const double r = out.rho_weights[i];
    const double di = static_cast<double>(out.block_dims[i]);
    // Block i of the extended state: D_i eigenvalues r_i / D_i.
    if (r > 0.0) s_extended -= r * std::log(r / di);
  }
  out.error_bound = bound;
  if (bound > tol.ratapprox_tol) {
    std::ostringstream os;
    os << "rational approximation error bound " << bound << " exceeds ratapprox_tol " << tol.ratapprox_tol
       << " for denominators <= " << d_max;
    throw ValidationError(os.str());
  }

  const DensityOperator pinched_rho(HermitianOperator::hermitian_part(pinched), tol);
  out.value = std::log(dd) - s_extended + von_neumann_entropy(pinched_rho, tol) - von_neumann_entropy(rho, tol);
  return out;
}

double meta_probability(const DensityOperator& rho, const DensityOperator& sigma, const Tolerances& tol) {
  const ExtendedValue s = quantum_relative_entropy(rho, sigma, tol);
  return s.is_infinite() ? 0.0 : std::exp(-s.value());
}

}  // namespace qmei

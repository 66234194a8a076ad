#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "qmei/config.hpp"
#include "qmei/operators.hpp"

namespace qmei {

/// Nonnegative weight vector with total in (0, 1].
class ClassicalDistribution {
 public:
  explicit ClassicalDistribution(RealVector weights, const Tolerances& tol = {});

  static ClassicalDistribution uniform(Index d);

  const RealVector& weights() const { return weights_; }
  Index size() const { return weights_.size(); }
  double total() const { return total_; }
  double operator[](Index i) const { return weights_(i); }

 private:
  RealVector weights_;
  double total_;
};

/// A nonnegative real or the distinguished value +infinity.
class ExtendedValue {
 public:
  static ExtendedValue finite(double v) { return ExtendedValue(v, false); }
  static ExtendedValue infinity() { return ExtendedValue(0.0, true); }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  /// The finite value, or +inf as a double.
  double value() const { return infinite_ ? std::numeric_limits<double>::infinity() : value_; }

 private:
  ExtendedValue(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

/// -sum q_i ln q_i with 0 ln 0 = 0.
double classical_entropy(const ClassicalDistribution& q, const Tolerances& tol = {});

/// sum q_i ln(q_i / p_i); +inf when q puts weight where p vanishes.
ExtendedValue classical_relative_entropy(const ClassicalDistribution& q, const ClassicalDistribution& p,
                                         const Tolerances& tol = {});

/// -tr(rho ln rho), evaluated on the spectrum.
double von_neumann_entropy(const DensityOperator& rho, const Tolerances& tol = {});

/// tr(rho ln rho - rho ln sigma), or +inf when tr(rho K_sigma) > support_tol with
/// K_sigma the projector onto the kernel of sigma.
///
/// Evaluated in the eigenbases of both arguments as
///   sum_i r_i ln r_i - sum_{i,j} r_i |<u_i|v_j>|^2 ln s_j
/// with j restricted to the support of sigma, so ln sigma is never formed.
ExtendedValue quantum_relative_entropy(const DensityOperator& rho, const DensityOperator& sigma,
                                       const Tolerances& tol = {});

/// ln d - S(rho || 1/d). Requires tr(rho) = 1.
double entropy_from_relative(const DensityOperator& rho, const Tolerances& tol = {});

/// Result of reducing S(rho || sigma) to ordinary entropies in an extended space.
struct ExtensionResult {
  double value = 0.0;
  /// sum_i r_i |ln(D_i / (D t_i))|, a bound on |value - S(rho || sigma)|.
  double error_bound = 0.0;
  std::int64_t denominator = 0;            // D, the extended dimension
  std::vector<std::int64_t> block_dims;    // D_i, one per eigenspace of sigma
  std::vector<double> sigma_weights;       // t_i = tr(sigma P_i)
  std::vector<double> rho_weights;         // r_i = tr(rho P_i)
};

/// S[1/D] - S[extended pinched rho] + S[pinched rho] - S[rho].
///
/// rho is pinched onto the eigenspaces P_i of sigma; the weights tr(sigma P_i)
/// are approximated by D_i / D with D <= d_max, and the pinched state is
/// extended to a D-dimensional space in which sigma becomes uniform. Both
/// arguments must have unit trace and supp rho must lie in supp sigma.
ExtensionResult relative_entropy_via_extension(const DensityOperator& rho, const DensityOperator& sigma,
                                               std::int64_t d_max, const Tolerances& tol = {});

/// exp(-S(rho || sigma)), 0 on a support violation.
double meta_probability(const DensityOperator& rho, const DensityOperator& sigma, const Tolerances& tol = {});

}  // namespace qmei

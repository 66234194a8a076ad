#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "qmei/canonical.hpp"
#include "qmei/config.hpp"
#include "qmei/operators.hpp"

namespace qmei {

/// Mutually orthogonal, collectively exhaustive family of projectors.
class Pinching {
 public:
  explicit Pinching(std::vector<HermitianOperator> projectors, const Tolerances& tol = {});

  /// Rank-1 projectors onto the columns of a unitary.
  static Pinching from_basis(const Matrix& unitary, const Tolerances& tol = {});

  Index dim() const { return projectors_.front().dim(); }
  const std::vector<HermitianOperator>& projectors() const { return projectors_; }

 private:
  std::vector<HermitianOperator> projectors_;
};

/// sum_i tr(rho P_i) / tr(P_i) P_i.
DensityOperator pinch(const Pinching& p, const DensityOperator& rho, const Tolerances& tol = {});

/// (tr_B rho) (x) (tr_A rho) / tr(rho) on a d_a x d_b bipartition.
DensityOperator decorrelate(const DensityOperator& rho_ab, Index d_a, Index d_b, const Tolerances& tol = {});

/// MinREnt state relative to sigma with tr(rho) and <G_a>_rho read off rho.
///
/// When the read-off targets are infeasible, the eigenvalues of rho are
/// clipped at max(support floor, 10 feas_margin tr rho), renormalized to
/// tr rho, and the targets read again.
CanonicalState kawasaki_gunton(const DensityOperator& sigma, const LevelOfDescription& level,
                               const DensityOperator& rho, const Tolerances& tol = {});

struct Decorrelator {
  Index dim_a;
  Index dim_b;
};

struct KawasakiGunton {
  DensityOperator reference;
  LevelOfDescription level;
};

using Grain = std::variant<Pinching, Decorrelator, KawasakiGunton>;

DensityOperator apply(const Grain& grain, const DensityOperator& rho, const Tolerances& tol = {});

/// |S(rho || P sigma) - S(rho || P rho) - S(P rho || P sigma)|.
/// Throws SupportError when any of the three terms is infinite.
double pythagorean_residual(const DensityOperator& rho, const DensityOperator& sigma, const Grain& grain,
                            const Tolerances& tol = {});

struct ContractionVerdict {
  double entropy_differential = 0.0;
  double fluctuation_threshold = 0.0;
  double accuracy_threshold = 0.0;
  bool accepted = false;
  /// Indices b of the F_b kept as independent of {I, G_a, F_c (c < b)}.
  std::vector<std::size_t> independent;
};

/// Decides whether the extra observables F_b may be dropped from the level.
///
/// entropy_differential = S(mu_{g,f} || sigma) - S(mu_g || sigma);
/// fluctuation_threshold = k / (2N) with k = d^2 - 1 - (m + l) the dimension
/// of the constraint surface, l counting independent F_b only;
/// accuracy_threshold = S(mu_{g,f} || mu_{g,f+df}) on the extended level.
/// F_b that are linear combinations of {I, G_a} and earlier F_c are dropped;
/// their targets must match the implied value or FeasibilityError is thrown.
ContractionVerdict contract_level(const DensityOperator& sigma, const LevelOfDescription& level,
                                  const std::vector<HermitianOperator>& extra, const ConstraintData& data,
                                  const RealVector& f, std::int64_t n, const RealVector& delta_f,
                                  const Tolerances& tol = {});

}  // namespace qmei

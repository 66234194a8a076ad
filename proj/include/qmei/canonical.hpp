#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qmei/config.hpp"
#include "qmei/entropy.hpp"
#include "qmei/operators.hpp"

namespace qmei {

/// Relevant observables G_1..G_m; the identity is always implicitly part of
/// the level. The normalized Hilbert-Schmidt Gram matrix of {I, G_a} must be
/// nonsingular (condition number below `gram_cond_max`) and m < d^2.
class LevelOfDescription {
 public:
  LevelOfDescription(Index dim, std::vector<HermitianOperator> observables, const Tolerances& tol = {});

  Index dim() const { return dim_; }
  std::size_t size() const { return observables_.size(); }
  const std::vector<HermitianOperator>& observables() const { return observables_; }
  const HermitianOperator& operator[](std::size_t a) const { return observables_[a]; }
  double gram_condition() const { return gram_condition_; }

  /// span{I, G_a} extended by further observables F_b.
  LevelOfDescription extended(const std::vector<HermitianOperator>& extra, const Tolerances& tol = {}) const;

  bool same_as(const LevelOfDescription& other, double tol) const;

 private:
  Index dim_;
  std::vector<HermitianOperator> observables_;
  double gram_condition_ = 1.0;
};

/// Normalization iota and targets g_a = tr(rho G_a).
struct ConstraintData {
  double iota = 1.0;
  RealVector targets;
};

/// A MinREnt state
///   mu = (iota / Z) exp[(ln sigma - <ln sigma>_{1/d}) - sum_a lambda^a G_a]
/// built on the support of sigma.
struct CanonicalState {
  DensityOperator reference;
  LevelOfDescription level;
  RealVector lambda;
  double iota;
  double log_z;
  DensityOperator mu;
  RealVector expectations;  // realized <G_a>_mu
  double residual = 0.0;    // max_a |<G_a>_mu - g_a| when solved for targets
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<std::string> warnings;

  double z() const;
};

/// mu for given Lagrange parameters. Throws DomainError when the spectral
/// radius of sum_a lambda^a G_a exceeds `lambda_max`.
CanonicalState canonical_state(const DensityOperator& sigma, const LevelOfDescription& level,
                               const RealVector& lambda, double iota, const Tolerances& tol = {});

/// Minimizes S(rho || sigma) under tr(rho) = iota and tr(rho G_a) = g_a.
///
/// Damped Newton iteration on lambda starting from lambda = 0, with step
/// C^{-1} (g(lambda) - g_target) where C is the Kubo-Mori correlation matrix.
/// Throws FeasibilityError when some g_a / iota lies outside the open spectral
/// range of G_a on supp sigma, DivergenceError after `max_iter` iterations and
/// ConditioningError when C cannot be factorized even after a Tikhonov shift.
CanonicalState solve_minrent(const DensityOperator& sigma, const LevelOfDescription& level,
                             const ConstraintData& data, const Tolerances& tol = {});

struct ClassicalCanonical {
  ClassicalDistribution distribution;
  RealVector lambda;
  int iterations = 0;
};

/// q_i proportional to p_i exp(-sum_a lambda^a G_a^i), normalized to iota, with
/// <G_a>_q = g_a. `features` is m x d (row a holds G_a^i).
ClassicalCanonical classical_maxent(const ClassicalDistribution& prior, const RealMatrix& features,
                                    const ConstraintData& data, const Tolerances& tol = {});

/// <B;A>_rho = int_0^1 dnu tr[rho^nu B^dagger rho^{1-nu} A], in closed form in
/// the eigenbasis of rho. A and B must be supported within supp rho.
double kubo_mori_correlation(const DensityOperator& rho, const HermitianOperator& b, const HermitianOperator& a,
                             const Tolerances& tol = {});

/// C_ab = <dG_a; dG_b>_mu with dG_a = G_a - (g_a / iota) I, restricted to supp mu.
RealMatrix correlation_matrix(const CanonicalState& state, const Tolerances& tol = {});

struct EntropyIdentity {
  double lhs;  // S[mu/iota] + <ln sigma>_{mu/iota} - <ln sigma>_{1/d}
  double rhs;  // ln Z + sum_a lambda^a g_a / iota
};

EntropyIdentity canonical_entropy_identity(const CanonicalState& state, const Tolerances& tol = {});

/// max_a |d ln Z / d lambda^a + g_a / iota| with central differences of step `fd_step`.
double partition_gradient_check(const CanonicalState& state, const Tolerances& tol = {});

/// S(mu_1 || mu_2) from the Lagrange parameters of two states on the same
/// reference and level.
double macrostate_relative_entropy(const CanonicalState& s1, const CanonicalState& s2, const Tolerances& tol = {});

struct SecondOrder {
  double exact;
  double quadratic;
};

/// exact = S(mu_{iota,g} || mu_{iota,g+dg}); quadratic = dg^T C^{-1} dg / 2.
SecondOrder second_order_divergence(const CanonicalState& state, const RealVector& delta_g,
                                    const Tolerances& tol = {});

}  // namespace qmei

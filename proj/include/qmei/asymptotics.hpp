#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmei/config.hpp"
#include "qmei/entropy.hpp"
#include "qmei/operators.hpp"

namespace qmei {

struct FrequencyMetaProbability {
  double exact;      // multinomial probability of the counts N f under p
  double factored;   // prob(N f | f) * exp(-N S(f || p))
  double prefactor;  // Stirling estimate of prob(N f | f)
};

/// Requires unit-trace f and p and integral counts N f_i.
FrequencyMetaProbability frequency_meta_probability(const ClassicalDistribution& f, const ClassicalDistribution& p,
                                                    std::int64_t n, const Tolerances& tol = {});

struct ConcentrationReport {
  Index d = 0;           // outcomes in supp p
  std::int64_t n = 0;    // trials per sample
  std::int64_t samples = 0;
  double mean_rel_entropy = 0.0;
  double predicted_mean = 0.0;  // (d - 1) / (2N)
  std::vector<double> thresholds;
  std::vector<double> empirical_tail;  // prob[S(f || p) > dS]
  std::vector<double> predicted_tail;  // Q((d - 1) / 2, N dS)
  /// "exact" when all outcomes were enumerated, "monte_carlo" otherwise.
  std::string method;
  /// N min_i p_i < 5: the Gaussian regime behind the predictions is not reached.
  bool pre_asymptotic = false;
};

/// Distribution of S(f || p) for the empirical frequencies f of N draws from p.
///
/// Outcomes with p_i = 0 never occur and are dropped. When the number of
/// count vectors C(N + d - 1, d - 1) is at most `enum_max` the distribution is
/// enumerated exactly and `samples` only has to pass validation; otherwise
/// `samples` multinomial vectors are drawn. Sample i uses its own generator
/// seeded from (seed, i), so the report does not depend on `threads`.
ConcentrationReport concentration_simulation(const ClassicalDistribution& p, std::int64_t n, std::int64_t samples,
                                             const std::vector<double>& thresholds, std::uint64_t seed,
                                             const Tolerances& tol = {}, int threads = 1);

struct SteinPoint {
  int n;
  double eps;
  double beta;  // min tr(sigma^N G) over 0 <= G <= I with tr(rho^N G) >= 1 - eps
  double rate;  // -ln(beta) / N
};

/// Optimal type-II error of testing rho^{(x)N} against sigma^{(x)N}.
///
/// Bisects over t for the Neyman-Pearson projector onto the positive part of
/// rho^N - t sigma^N and completes the test with a uniform fractional weight on
/// the boundary eigenspace so that tr(rho^N G) = 1 - eps. Commuting pairs are
/// handled in their joint eigenbasis without forming the tensor powers.
SteinPoint quantum_neyman_pearson(const DensityOperator& rho, const DensityOperator& sigma, int n, double eps,
                                  const Tolerances& tol = {});

/// Stein points for N = 1..n_max.
std::vector<SteinPoint> stein_rate_trace(const DensityOperator& rho, const DensityOperator& sigma, int n_max,
                                         double eps, const Tolerances& tol = {});

}  // namespace qmei

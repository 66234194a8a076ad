#include "qmei/asymptotics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "qmei/errors.hpp"

namespace qmei {

namespace {

void require_unit_total(double total, const Tolerances& tol, const char* what) {
  if (std::abs(total - 1.0) > tol.trace_tol) {
    std::ostringstream os;
    os << what << " must be normalized to 1, got " << total;
    throw ValidationError(os.str());
  }
}

// ln of the multinomial probability of `counts` under `probs`.
double log_multinomial(const std::vector<std::int64_t>& counts, const std::vector<double>& probs) {
  std::int64_t n = 0;
  double out = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    n += counts[i];
    out -= std::lgamma(static_cast<double>(counts[i]) + 1.0);
    if (counts[i] == 0) continue;
    if (probs[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    out += static_cast<double>(counts[i]) * std::log(probs[i]);
  }
  return out + std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace

FrequencyMetaProbability frequency_meta_probability(const ClassicalDistribution& f, const ClassicalDistribution& p,
                                                    std::int64_t n, const Tolerances& tol) {
  if (f.size() != p.size()) throw ValidationError("frequency_meta_probability: length mismatch");
  if (n < 1) throw ValidationError("frequency_meta_probability: N must be >= 1");
  require_unit_total(f.total(), tol, "frequency vector");
  require_unit_total(p.total(), tol, "prior");

  const auto d = static_cast<std::size_t>(f.size());
  std::vector<std::int64_t> counts(d);
  std::vector<double> fw(d), pw(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double c = static_cast<double>(n) * f[static_cast<Index>(i)];
    const double r = std::round(c);
    if (std::abs(c - r) > 1e-9 * std::max(1.0, c)) {
      std::ostringstream os;
      os << "frequency_meta_probability: N f_" << i << " = " << c << " is not an integer";
      throw ValidationError(os.str());
    }
    counts[i] = static_cast<std::int64_t>(r);
    fw[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    pw[i] = p[static_cast<Index>(i)];
  }

  FrequencyMetaProbability out{};
  out.exact = std::exp(log_multinomial(counts, pw));
  const ExtendedValue s = classical_relative_entropy(f, p, tol);
  out.factored =
      s.is_infinite() ? 0.0 : std::exp(log_multinomial(counts, fw) - static_cast<double>(n) * s.value());
  double k = 0.0, log_pref = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (counts[i] == 0) continue;
    k += 1.0;
    log_pref -= 0.5 * std::log(fw[i]);
  }
  out.prefactor = std::exp(log_pref - 0.5 * (k - 1.0) * std::log(2.0 * M_PI * static_cast<double>(n)));
  return out;
}

namespace {

double relative_entropy_of_counts(const std::vector<std::int64_t>& counts, const std::vector<double>& p,
                                  double n) {
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double fi = static_cast<double>(counts[i]) / n;
    s += fi * std::log(fi / p[i]);
  }
  return std::max(s, 0.0);
}

// Visits every composition of n into counts.size() nonnegative parts.
template <typename Visit>
void for_each_composition(std::vector<std::int64_t>& counts, std::size_t pos, std::int64_t left, Visit&& visit) {
  if (pos + 1 == counts.size()) {
    counts[pos] = left;
    visit(counts);
    return;
  }
  for (std::int64_t c = 0; c <= left; ++c) {
    counts[pos] = c;
    for_each_composition(counts, pos + 1, left - c, visit);
  }
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Multinomial draw by sequential binomial conditionals.
void draw_counts(std::mt19937_64& gen, std::int64_t n, const std::vector<double>& p,
                 std::vector<std::int64_t>& counts) {
  std::int64_t left = n;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 1.0;
    std::int64_t c = 0;
    if (left > 0 && q > 0.0) c = std::binomial_distribution<std::int64_t>(left, q)(gen);
    counts[i] = c;
    left -= c;
    mass -= p[i];
  }
  counts.back() = left;
}

}  // namespace

ConcentrationReport concentration_simulation(const ClassicalDistribution& p, std::int64_t n, std::int64_t samples,
                                             const std::vector<double>& thresholds, std::uint64_t seed,
                                             const Tolerances& tol, int threads) {
  require_unit_total(p.total(), tol, "prior");
  if (n < 1) throw ValidationError("concentration_simulation: N must be >= 1");
  if (samples < 1000) throw ValidationError("concentration_simulation: at least 1000 samples required");
  for (double t : thresholds)
    if (!std::isfinite(t)) throw ValidationError("concentration_simulation: thresholds must be finite");
  if (threads < 1) throw ValidationError("concentration_simulation: threads must be >= 1");

  std::vector<double> q;
  const double floor = support_floor(p.weights(), tol);
  for (Index i = 0; i < p.size(); ++i)
    if (p[i] > floor) q.push_back(p[i]);
  const double mass = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& x : q) x /= mass;

  ConcentrationReport rep;
  rep.d = static_cast<Index>(q.size());
  rep.n = n;
  rep.samples = samples;
  rep.thresholds = thresholds;
  rep.predicted_mean = static_cast<double>(rep.d - 1) / (2.0 * static_cast<double>(n));
  rep.pre_asymptotic = static_cast<double>(n) * *std::min_element(q.begin(), q.end()) < 5.0;
  for (double t : thresholds) {
    double pred = 0.0;
    if (t < 0.0)
      pred = 1.0;
    else if (rep.d > 1)
      pred = boost::math::gamma_q(0.5 * static_cast<double>(rep.d - 1), static_cast<double>(n) * t);
    rep.predicted_tail.push_back(pred);
  }

  const double nd = static_cast<double>(n);
  const double outcomes = std::exp(std::lgamma(nd + static_cast<double>(rep.d)) - std::lgamma(nd + 1.0) -
                                   std::lgamma(static_cast<double>(rep.d)));
  std::vector<double> tail(thresholds.size(), 0.0);
  std::vector<std::int64_t> counts(q.size());

  if (outcomes <= static_cast<double>(tol.enum_max) * (1.0 + 1e-12)) {
    rep.method = "exact";
    double mean = 0.0;
    for_each_composition(counts, 0, n, [&](const std::vector<std::int64_t>& c) {
      const double w = std::exp(log_multinomial(c, q));
      const double s = relative_entropy_of_counts(c, q, nd);
      mean += w * s;
      for (std::size_t k = 0; k < thresholds.size(); ++k)
        if (s > thresholds[k]) tail[k] += w;
    });
    rep.mean_rel_entropy = mean;
    for (double& t : tail) t = std::clamp(t, 0.0, 1.0);
    rep.empirical_tail = tail;
    return rep;
  }

  rep.method = "monte_carlo";
  std::vector<double> values(static_cast<std::size_t>(samples));
  auto work = [&](std::int64_t begin, std::int64_t end) {
    std::vector<std::int64_t> c(q.size());
    for (std::int64_t i = begin; i < end; ++i) {
      std::mt19937_64 gen = sample_stream(seed, static_cast<std::uint64_t>(i));
      draw_counts(gen, n, q, c);
      values[static_cast<std::size_t>(i)] = relative_entropy_of_counts(c, q, nd);
    }
  };
  const std::int64_t workers = std::min<std::int64_t>(threads, samples);
  if (workers == 1) {
    work(0, samples);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (samples + workers - 1) / workers;
    for (std::int64_t w = 0; w < workers; ++w) {
      const std::int64_t b = w * chunk, e = std::min(samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0;
  std::vector<std::int64_t> hits(thresholds.size(), 0);
  for (double s : values) {
    sum += s;
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      if (s > thresholds[k]) ++hits[k];
  }
  rep.mean_rel_entropy = sum / static_cast<double>(samples);
  for (std::int64_t h : hits) rep.empirical_tail.push_back(static_cast<double>(h) / static_cast<double>(samples));
  return rep;
}

namespace {

// Eigenvalues of rho^N - t sigma^N with the rho- and sigma-weight of each eigenvector.
struct TestSpectrum {
  std::vector<double> w, rho_mass, sigma_mass;
};

class NeymanPearsonProblem {
 public:
  NeymanPearsonProblem(const DensityOperator& rho, const DensityOperator& sigma, int n, const Tolerances& tol)
      : tol_(tol) {
    const Index d = rho.dim();
    const Matrix mixed = rho.matrix() + 0.6180339887498949 * sigma.matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (mixed + mixed.adjoint()));
    const Matrix u = eig.eigenvectors();
    const Matrix r = u.adjoint() * rho.matrix() * u;
    const Matrix s = u.adjoint() * sigma.matrix() * u;
    const double off_r = (r - Matrix(r.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    const double off_s = (s - Matrix(s.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    commuting_ = off_r <= tol.spec_tol && off_s <= tol.spec_tol;
    if (commuting_) {
      RealVector rn = RealVector::Ones(1), sn = RealVector::Ones(1);
      const RealVector rd = r.diagonal().real().cwiseMax(0.0), sd = s.diagonal().real().cwiseMax(0.0);
      for (int k = 0; k < n; ++k) {
        RealVector rn2(rn.size() * d), sn2(sn.size() * d);
        for (Index i = 0; i < rn.size(); ++i) {
          rn2.segment(i * d, d) = rn(i) * rd;
          sn2.segment(i * d, d) = sn(i) * sd;
        }
        rn = std::move(rn2);
        sn = std::move(sn2);
      }
      r_diag_ = std::move(rn);
      s_diag_ = std::move(sn);
      r_scale_ = r_diag_.maxCoeff();
      s_scale_ = s_diag_.maxCoeff();
    } else {
      rho_n_ = n_fold_power(rho, n, tol).matrix();
      sigma_n_ = n_fold_power(sigma, n, tol).matrix();
      r_scale_ = rho_n_.cwiseAbs().maxCoeff();
      s_scale_ = sigma_n_.cwiseAbs().maxCoeff();
    }
  }

  bool commuting() const { return commuting_; }

  double zero_band(double t) const { return tol_.spec_tol * (r_scale_ + t * s_scale_); }

  TestSpectrum spectrum(double t) const {
    TestSpectrum out;
    if (commuting_) {
      const Index m = r_diag_.size();
      out.w.resize(static_cast<std::size_t>(m));
      out.rho_mass.assign(r_diag_.data(), r_diag_.data() + m);
      out.sigma_mass.assign(s_diag_.data(), s_diag_.data() + m);
      for (Index i = 0; i < m; ++i) out.w[static_cast<std::size_t>(i)] = r_diag_(i) - t * s_diag_(i);
      return out;
    }
    const Matrix m = rho_n_ - t * sigma_n_;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.adjoint()));
    const Matrix& v = eig.eigenvectors();
    const Index k = v.cols();
    for (Index i = 0; i < k; ++i) {
      out.w.push_back(eig.eigenvalues()(i));
      out.rho_mass.push_back(std::max(0.0, (v.col(i).adjoint() * rho_n_ * v.col(i))(0, 0).real()));
      out.sigma_mass.push_back(std::max(0.0, (v.col(i).adjoint() * sigma_n_ * v.col(i))(0, 0).real()));
    }
    return out;
  }

  // tr(rho^N P) for P the projector onto eigenvalues above the zero band.
  double power(double t) const {
    const TestSpectrum s = spectrum(t);
    const double band = zero_band(t);
    double a = 0.0;
    for (std::size_t i = 0; i < s.w.size(); ++i)
      if (s.w[i] > band) a += s.rho_mass[i];
    return a;
  }

  // Fills eigen-groups in descending order of eigenvalue until the rho-weight
  // reaches `level`; the group that crosses it is taken fractionally.
  double type_two_error(double t, double level) const {
    const TestSpectrum s = spectrum(t);
    std::vector<std::size_t> order(s.w.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.w[a] > s.w[b]; });
    const double band = zero_band(t);
    double acc = 0.0, beta = 0.0;
    std::size_t i = 0;
    while (i < order.size() && acc < level) {
      std::size_t j = i;
      double gr = 0.0, gs = 0.0;
      while (j < order.size() && s.w[order[i]] - s.w[order[j]] <= band) {
        gr += s.rho_mass[order[j]];
        gs += s.sigma_mass[order[j]];
        ++j;
      }
      if (acc + gr <= level) {
        acc += gr;
        beta += gs;
      } else {
        const double frac = (level - acc) / gr;
        acc = level;
        beta += frac * gs;
      }
      i = j;
    }
    return std::clamp(beta, 0.0, 1.0);
  }

 private:
  Tolerances tol_;
  bool commuting_ = false;
  RealVector r_diag_, s_diag_;
  Matrix rho_n_, sigma_n_;
  double r_scale_ = 1.0, s_scale_ = 1.0;
};

}  // namespace

SteinPoint quantum_neyman_pearson(const DensityOperator& rho, const DensityOperator& sigma, int n, double eps,
                                  const Tolerances& tol) {
  if (rho.dim() != sigma.dim()) throw ValidationError("quantum_neyman_pearson: dimension mismatch");
  require_unit_total(rho.trace(), tol, "rho");
  require_unit_total(sigma.trace(), tol, "sigma");
  if (n < 1) throw ValidationError("quantum_neyman_pearson: N must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) {
    std::ostringstream os;
    os << "quantum_neyman_pearson: eps = " << eps << " outside (0, 1)";
    throw ValidationError(os.str());
  }
  const double full = std::pow(static_cast<double>(rho.dim()), n);
  if (full > static_cast<double>(tol.max_dim)) {
    std::ostringstream os;
    os << "quantum_neyman_pearson: dimension " << rho.dim() << "^" << n << " exceeds max_dim " << tol.max_dim;
    throw CapacityError(os.str());
  }

  const NeymanPearsonProblem problem(rho, sigma, n, tol);
  const double level = 1.0 - eps;

  // Bracket t* = sup{t : power(t) >= 1 - eps} geometrically.
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  if (problem.power(1.0) >= level) {
    while (problem.power(hi) >= level && guard++ < 2000) hi *= 2.0;
    lo = hi / 2.0;
  } else {
    while (problem.power(lo) < level && guard++ < 2000) lo /= 2.0;
    hi = lo * 2.0;
  }
  for (std::int64_t it = 0; it < tol.np_max_iter; ++it) {
    if (problem.power(lo) - level < tol.np_gap || hi / lo - 1.0 < 4.0 * DBL_EPSILON) break;
    const double mid = std::sqrt(lo * hi);
    if (problem.power(mid) >= level)
      lo = mid;
    else
      hi = mid;
  }

  SteinPoint pt{n, eps, problem.type_two_error(lo, level), 0.0};
  pt.rate = pt.beta > 0.0 ? -std::log(pt.beta) / static_cast<double>(n) : std::numeric_limits<double>::infinity();
  return pt;
}

std::vector<SteinPoint> stein_rate_trace(const DensityOperator& rho, const DensityOperator& sigma, int n_max,
                                         double eps, const Tolerances& tol) {
  if (n_max < 1) throw ValidationError("stein_rate_trace: N_max must be >= 1");
  std::vector<SteinPoint> out;
  for (int n = 1; n <= n_max; ++n) out.push_back(quantum_neyman_pearson(rho, sigma, n, eps, tol));
  return out;
}

}  // namespace qmei

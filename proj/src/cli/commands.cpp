#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "qmei/asymptotics.hpp"
#include "qmei/canonical.hpp"
#include "qmei/cli.hpp"
#include "qmei/coarsegrain.hpp"
#include "qmei/entropy.hpp"
#include "qmei/selftest.hpp"

namespace qmei::cli {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "+inf" : "-inf";
}

json ext(const ExtendedValue& v) { return v.is_infinite() ? json("+inf") : json(v.value()); }

json vec(const RealVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

json mat(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json::array({num(m(r, c).real()), num(m(r, c).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "+inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Context {
  ProblemFile problem;
  Tolerances tol;
  std::uint64_t seed = 0;
  int threads = 1;
  Index dim = 0;
};

struct CommandResult {
  json result = json::object();
  json diagnostics = json::object();
  std::string csv;  // set by tabular commands
  int exit_code = kExitOk;
};

template <typename T>
const T& need(const std::optional<T>& v, const char* field) {
  if (!v) throw ValidationError(std::string("problem file: missing required field ") + field);
  return *v;
}

DensityOperator state(const Matrix& m, const char* field, const Tolerances& tol) {
  try {
    return DensityOperator(m, tol);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("problem file: ") + field + ": " + e.what());
  }
}

DensityOperator reference_or_uniform(const Context& c) {
  return c.problem.sigma ? state(*c.problem.sigma, "$.sigma", c.tol) : DensityOperator::maximally_mixed(c.dim);
}

std::vector<HermitianOperator> operators(const std::vector<Matrix>& ms, const Tolerances& tol) {
  std::vector<HermitianOperator> out;
  for (const auto& m : ms) out.emplace_back(m, tol);
  return out;
}

ClassicalDistribution distribution(const RealVector& v, const char* field, const Tolerances& tol) {
  try {
    return ClassicalDistribution(v, tol);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("problem file: ") + field + ": " + e.what());
  }
}

json state_summary(const DensityOperator& rho, const Tolerances& tol) {
  const RealVector w = spectral_decompose(rho.op()).eigenvalues;
  const double floor = support_floor(w, tol);
  Index rank = 0;
  for (Index i = 0; i < w.size(); ++i) rank += w(i) > floor ? 1 : 0;
  return {{"trace", num(rho.trace())}, {"rank", rank}, {"von_neumann_entropy", num(von_neumann_entropy(rho, tol))}};
}

CommandResult cmd_entropy(const Context& c) {
  const ProblemFile& p = c.problem;
  if (!p.rho && !p.sigma && !p.p && !p.q)
    throw ValidationError("problem file: entropy needs at least one of rho, sigma, p, q");
  CommandResult out;
  std::optional<DensityOperator> rho, sigma;
  if (p.rho) rho = state(*p.rho, "$.rho", c.tol);
  if (p.sigma) sigma = state(*p.sigma, "$.sigma", c.tol);
  if (rho) out.result["rho"] = state_summary(*rho, c.tol);
  if (sigma) out.result["sigma"] = state_summary(*sigma, c.tol);
  if (rho && sigma) {
    const ExtendedValue rs = quantum_relative_entropy(*rho, *sigma, c.tol);
    const ExtendedValue sr = quantum_relative_entropy(*sigma, *rho, c.tol);
    out.result["relative_entropy"] = {{"rho||sigma", ext(rs)}, {"sigma||rho", ext(sr)}};
    out.result["support"] = {{"rho_within_sigma", rs.is_finite()}, {"sigma_within_rho", sr.is_finite()}};
  }
  std::optional<ClassicalDistribution> cp, cq;
  if (p.p) cp = distribution(*p.p, "$.p", c.tol);
  if (p.q) cq = distribution(*p.q, "$.q", c.tol);
  json classical = json::object();
  if (cp) classical["entropy_p"] = num(classical_entropy(*cp, c.tol));
  if (cq) classical["entropy_q"] = num(classical_entropy(*cq, c.tol));
  if (cp && cq) {
    classical["q||p"] = ext(classical_relative_entropy(*cq, *cp, c.tol));
    classical["p||q"] = ext(classical_relative_entropy(*cp, *cq, c.tol));
  }
  if (!classical.empty()) out.result["classical"] = classical;
  return out;
}

CommandResult cmd_relent(const Context& c) {
  const DensityOperator rho = state(need(c.problem.rho, "rho"), "$.rho", c.tol);
  const DensityOperator sigma = state(need(c.problem.sigma, "sigma"), "$.sigma", c.tol);
  CommandResult out;
  const ExtendedValue s = quantum_relative_entropy(rho, sigma, c.tol);
  out.result["relative_entropy"] = ext(s);
  out.result["meta_probability"] = num(meta_probability(rho, sigma, c.tol));
  if (c.problem.d_max) {
    const ExtensionResult e = relative_entropy_via_extension(rho, sigma, *c.problem.d_max, c.tol);
    out.result["extension"] = {{"value", num(e.value)},
                               {"error_bound", num(e.error_bound)},
                               {"denominator", e.denominator},
                               {"block_dims", e.block_dims},
                               {"sigma_weights", e.sigma_weights},
                               {"rho_weights", e.rho_weights}};
  }
  return out;
}

json canonical_json(const CanonicalState& s, const Tolerances& tol) {
  return {{"lambda", vec(s.lambda)},
          {"z", num(s.z())},
          {"log_z", num(s.log_z)},
          {"iota", num(s.iota)},
          {"mu", mat(s.mu.matrix())},
          {"expectations", vec(s.expectations)},
          {"relative_entropy", ext(quantum_relative_entropy(s.mu, s.reference, tol))},
          {"von_neumann_entropy", num(von_neumann_entropy(s.mu, tol))}};
}

json solver_diagnostics(const CanonicalState& s) {
  json history = json::array();
  for (double r : s.residual_history) history.push_back(num(r));
  return {{"iterations", s.iterations}, {"residual", num(s.residual)}, {"residual_history", history}, {"warnings", s.warnings}};
}

CommandResult cmd_reconstruct(const Context& c) {
  const ProblemFile& p = c.problem;
  const DensityOperator sigma = reference_or_uniform(c);
  const LevelOfDescription level(c.dim, operators(p.level, c.tol), c.tol);
  ConstraintData data{p.iota.value_or(1.0), p.g.value_or(RealVector())};
  if (!p.g && !p.level.empty()) throw ValidationError("problem file: missing required field targets.g");
  const CanonicalState s = solve_minrent(sigma, level, data, c.tol);
  CommandResult out;
  out.result = canonical_json(s, c.tol);
  out.diagnostics = solver_diagnostics(s);
  return out;
}

CommandResult cmd_coarse_grain(const Context& c) {
  const ProblemFile& p = c.problem;
  const GrainSpec& spec = need(p.grain, "grain");
  const DensityOperator rho = state(need(p.rho, "rho"), "$.rho", c.tol);
  std::optional<Grain> grain;
  if (spec.type == "pinching") {
    grain = Pinching(operators(spec.projectors, c.tol), c.tol);
  } else if (spec.type == "decorrelator") {
    grain = Decorrelator{spec.dim_a, spec.dim_b};
  } else {
    const DensityOperator omega = spec.reference ? state(*spec.reference, "$.grain.reference", c.tol)
                                                 : DensityOperator::maximally_mixed(c.dim);
    grain = KawasakiGunton{omega, LevelOfDescription(c.dim, operators(spec.level, c.tol), c.tol)};
  }
  CommandResult out;
  const DensityOperator grained = apply(*grain, rho, c.tol);
  out.result["grain"] = spec.type;
  out.result["rho"] = {{"matrix", mat(grained.matrix())}, {"trace", num(grained.trace())}};
  if (p.sigma) {
    const DensityOperator sigma = state(*p.sigma, "$.sigma", c.tol);
    const DensityOperator gs = apply(*grain, sigma, c.tol);
    out.result["sigma"] = {{"matrix", mat(gs.matrix())}, {"trace", num(gs.trace())}};
    const ExtendedValue total = quantum_relative_entropy(rho, gs, c.tol);
    const ExtendedValue inner = quantum_relative_entropy(rho, grained, c.tol);
    const ExtendedValue outer = quantum_relative_entropy(grained, gs, c.tol);
    json pyth = {{"rho||P sigma", ext(total)}, {"rho||P rho", ext(inner)}, {"P rho||P sigma", ext(outer)}};
    if (total.is_finite() && inner.is_finite() && outer.is_finite())
      pyth["residual"] = num(std::abs(total.value() - inner.value() - outer.value()));
    else
      pyth["residual"] = "support violation";
    out.result["pythagorean"] = pyth;
  }
  return out;
}

CommandResult cmd_contract(const Context& c) {
  const ProblemFile& p = c.problem;
  const DensityOperator sigma = reference_or_uniform(c);
  const LevelOfDescription level(c.dim, operators(p.level, c.tol), c.tol);
  if (!p.g && !p.level.empty()) throw ValidationError("problem file: missing required field targets.g");
  const ConstraintData data{p.iota.value_or(1.0), p.g.value_or(RealVector())};
  const RealVector f = need(p.f, "targets.f");
  const RealVector df = p.delta_f.value_or(RealVector::Zero(f.size()));
  const ContractionVerdict v =
      contract_level(sigma, level, operators(p.extra, c.tol), data, f, need(p.trials, "trials"), df, c.tol);
  CommandResult out;
  out.result = {{"entropy_differential", num(v.entropy_differential)},
                {"fluctuation_threshold", num(v.fluctuation_threshold)},
                {"accuracy_threshold", num(v.accuracy_threshold)},
                {"accepted", v.accepted},
                {"independent_extra", v.independent}};
  return out;
}

CommandResult cmd_concentrate(const Context& c) {
  const ProblemFile& p = c.problem;
  const ClassicalDistribution prior = distribution(need(p.p, "p"), "$.p", c.tol);
  const std::vector<double> thresholds = p.thresholds.value_or(std::vector<double>{});
  const ConcentrationReport r = concentration_simulation(prior, need(p.trials, "trials"), p.samples.value_or(100000),
                                                         thresholds, c.seed, c.tol, c.threads);
  CommandResult out;
  json table = json::array();
  std::ostringstream csv;
  csv << "threshold,empirical_tail,predicted_tail\n";
  for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
    table.push_back({{"threshold", num(r.thresholds[k])},
                     {"empirical_tail", num(r.empirical_tail[k])},
                     {"predicted_tail", num(r.predicted_tail[k])}});
    csv << csv_number(r.thresholds[k]) << ',' << csv_number(r.empirical_tail[k]) << ','
        << csv_number(r.predicted_tail[k]) << '\n';
  }
  out.result = {{"d", r.d},
                {"N", r.n},
                {"samples", r.samples},
                {"method", r.method},
                {"mean_rel_entropy", num(r.mean_rel_entropy)},
                {"predicted_mean", num(r.predicted_mean)},
                {"tails", table}};
  out.diagnostics["pre_asymptotic"] = r.pre_asymptotic;
  out.csv = csv.str();
  return out;
}

CommandResult cmd_stein(const Context& c) {
  const ProblemFile& p = c.problem;
  const DensityOperator rho = state(need(p.rho, "rho"), "$.rho", c.tol);
  const DensityOperator sigma = state(need(p.sigma, "sigma"), "$.sigma", c.tol);
  const ExtendedValue s = quantum_relative_entropy(rho, sigma, c.tol);
  const std::vector<SteinPoint> trace = stein_rate_trace(rho, sigma, need(p.n_max, "n_max"), need(p.eps, "eps"), c.tol);
  CommandResult out;
  json table = json::array();
  std::ostringstream csv;
  csv << "N,eps,beta,rate,relative_entropy\n";
  for (const SteinPoint& pt : trace) {
    table.push_back({{"N", pt.n},
                     {"eps", num(pt.eps)},
                     {"beta", num(pt.beta)},
                     {"rate", num(pt.rate)},
                     {"gap", num(std::abs(pt.rate - s.value()))}});
    csv << pt.n << ',' << csv_number(pt.eps) << ',' << csv_number(pt.beta) << ',' << csv_number(pt.rate) << ','
        << csv_number(s.value()) << '\n';
  }
  out.result = {{"relative_entropy", ext(s)}, {"points", table}};
  out.csv = csv.str();
  return out;
}

CommandResult cmd_selftest(const Context& c) {
  const SelftestReport r = run_selftest(c.seed, c.tol, c.threads, c.problem.instances.value_or(50));
  CommandResult out;
  json props = json::array();
  for (const PropertyResult& pr : r.properties) {
    json e = {{"name", pr.name},
              {"passed", pr.passed()},
              {"instances", pr.instances},
              {"failures", pr.failures},
              {"worst", num(pr.worst)},
              {"tolerance", num(pr.tolerance)}};
    if (!pr.first_error.empty()) e["first_error"] = pr.first_error;
    props.push_back(std::move(e));
  }
  out.result = {{"all_passed", r.all_passed()}, {"instances", r.instances}, {"properties", props}};
  if (!r.all_passed()) out.exit_code = kExitSelftestFailed;
  return out;
}

using Command = std::function<CommandResult(const Context&)>;

const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table = {
      {"entropy", cmd_entropy},         {"relent", cmd_relent},           {"reconstruct", cmd_reconstruct},
      {"coarse-grain", cmd_coarse_grain}, {"contract", cmd_contract},   {"concentrate", cmd_concentrate},
      {"stein", cmd_stein},             {"selftest", cmd_selftest}};
  return table;
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || *end != '\0' || errno != 0)
    throw ValidationError(std::string(source) + ": seed must be an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::support: return "support";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::conditioning: return "conditioning";
  }
  return "unknown";
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::infeasible: return kExitInfeasible;
    case ErrorKind::divergence:
    case ErrorKind::conditioning: return kExitDivergence;
    default: return kExitValidation;
  }
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : commands()) out.push_back(name);
  return out;
}

Outcome run(const RunOptions& options, const std::string& input_text) {
  json report;
  report["command"] = options.command;
  report["input"] = options.input_path;
  Context ctx;
  ctx.threads = options.threads;
  bool resolved = false;
  auto failure = [&](int code, const std::string& kind, const std::string& message) {
    Outcome o;
    o.exit_code = code;
    o.error = message;
    if (options.format == "json") {
      report["status"] = "error";
      report["error"] = {{"kind", kind}, {"message", message}};
      if (resolved) {
        report["config"] = ctx.tol.to_map();
        report["seed"] = ctx.seed;
      }
      o.output = report.dump(2) + "\n";
    }
    return o;
  };

  try {
    const auto& table = commands();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == options.command; });
    if (it == table.end()) throw ValidationError("unknown command '" + options.command + "'");
    if (options.format != "json" && options.format != "csv")
      throw ValidationError("unknown format '" + options.format + "' (expected json or csv)");
    if (options.format == "csv" && options.command != "concentrate" && options.command != "stein")
      throw ValidationError("--format csv is only available for the tabular commands concentrate and stein");
    if (options.threads < 1) throw ValidationError("--threads must be >= 1");

    if (!input_text.empty())
      ctx.problem = parse_problem(input_text);
    else if (options.command != "selftest")
      throw ValidationError("command '" + options.command + "' needs an --input problem file");

    ctx.tol.apply_environment();
    if (const char* env = std::getenv("QMEI_SEED")) ctx.seed = parse_seed(env, "QMEI_SEED");
    for (const auto& [key, value] : ctx.problem.config) ctx.tol.set(key, value);
    if (ctx.problem.seed) ctx.seed = *ctx.problem.seed;
    if (options.max_dim) ctx.tol.set("max_dim", static_cast<double>(*options.max_dim));
    for (const auto& [key, value] : options.overrides) ctx.tol.set(key, value);
    if (options.seed) ctx.seed = *options.seed;
    resolved = true;

    validate(ctx.problem, ctx.tol);
    const ProblemFile& p = ctx.problem;
    ctx.dim = p.dimension ? *p.dimension : p.rho ? p.rho->rows() : p.sigma ? p.sigma->rows() : !p.level.empty() ? p.level.front().rows() : 0;
    const bool needs_dim = options.command == "reconstruct" || options.command == "contract" ||
                           options.command == "coarse-grain";
    if (needs_dim && ctx.dim < 1) throw ValidationError("problem file: missing dimension");

    const CommandResult r = it->second(ctx);
    Outcome o;
    o.exit_code = r.exit_code;
    if (r.exit_code == kExitSelftestFailed) o.error = "selftest: one or more properties failed";
    if (options.format == "csv") {
      o.output = r.csv;
    } else {
      report["status"] = r.exit_code == kExitOk ? "ok" : "failed";
      report["config"] = ctx.tol.to_map();
      report["seed"] = ctx.seed;
      report["result"] = r.result;
      report["diagnostics"] = r.diagnostics;
      o.output = report.dump(2) + "\n";
    }
    return o;
  } catch (const FeasibilityError& e) {
    return failure(kExitInfeasible, "infeasible", e.what());
  } catch (const DivergenceError& e) {
    json history = json::array();
    for (double r : e.residual_history()) history.push_back(num(r));
    report["diagnostics"] = {{"residual_history", history}};
    return failure(kExitDivergence, "divergence", e.what());
  } catch (const Error& e) {
    return failure(exit_code_for(e.kind()), kind_name(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return failure(kExitValidation, "validation", std::string("problem file: ") + e.what());
  }
}

}  // namespace qmei::cli

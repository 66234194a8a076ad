#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmei/asymptotics.hpp"
#include "qmei/canonical.hpp"
#include "qmei/cli.hpp"
#include "qmei/coarsegrain.hpp"
#include "qmei/entropy.hpp"
#include "qmei/errors.hpp"
#include "qmei/selftest.hpp"

namespace py = pybind11;
using namespace qmei;

namespace {

Tolerances tolerances(const std::map<std::string, double>& config) {
  Tolerances tol;
  for (const auto& [k, v] : config) tol.set(k, v);
  return tol;
}

std::vector<HermitianOperator> hermitians(const std::vector<Matrix>& ms, const Tolerances& tol) {
  std::vector<HermitianOperator> out;
  for (const auto& m : ms) out.emplace_back(m, tol);
  return out;
}

py::dict canonical_dict(const CanonicalState& s) {
  py::dict d;
  d["lambda"] = s.lambda;
  d["log_z"] = s.log_z;
  d["z"] = s.z();
  d["iota"] = s.iota;
  d["mu"] = s.mu.matrix();
  d["expectations"] = s.expectations;
  d["iterations"] = s.iterations;
  d["residual"] = s.residual;
  d["warnings"] = s.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Minimum relative entropy reconstruction of density matrices";

  static py::exception<Error> base(m, "QmeiError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<SupportError> support(m, "SupportError", base.ptr());
  static py::exception<FeasibilityError> feasibility(m, "FeasibilityError", base.ptr());
  static py::exception<DivergenceError> divergence(m, "DivergenceError", base.ptr());
  static py::exception<CapacityError> capacity(m, "CapacityError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const SupportError& e) {
      py::set_error(support, e.what());
    } catch (const FeasibilityError& e) {
      py::set_error(feasibility, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(divergence, e.what());
    } catch (const CapacityError& e) {
      py::set_error(capacity, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  using Config = std::map<std::string, double>;

  m.def(
      "von_neumann_entropy",
      [](const Matrix& rho, const Config& config) {
        const Tolerances tol = tolerances(config);
        return von_neumann_entropy(DensityOperator(rho, tol), tol);
      },
      py::arg("rho"), py::arg("config") = Config{}, "-tr(rho ln rho)");

  m.def(
      "relative_entropy",
      [](const Matrix& rho, const Matrix& sigma, const Config& config) {
        const Tolerances tol = tolerances(config);
        return quantum_relative_entropy(DensityOperator(rho, tol), DensityOperator(sigma, tol), tol).value();
      },
      py::arg("rho"), py::arg("sigma"), py::arg("config") = Config{}, "S(rho || sigma); inf on a support violation");

  m.def(
      "relative_entropy_via_extension",
      [](const Matrix& rho, const Matrix& sigma, std::int64_t d_max, const Config& config) {
        const Tolerances tol = tolerances(config);
        const ExtensionResult r =
            relative_entropy_via_extension(DensityOperator(rho, tol), DensityOperator(sigma, tol), d_max, tol);
        py::dict d;
        d["value"] = r.value;
        d["error_bound"] = r.error_bound;
        d["denominator"] = r.denominator;
        d["block_dims"] = r.block_dims;
        return d;
      },
      py::arg("rho"), py::arg("sigma"), py::arg("d_max") = 10000, py::arg("config") = Config{});

  m.def(
      "solve_minrent",
      [](const Matrix& sigma, const std::vector<Matrix>& level, const RealVector& targets, double iota,
         const Config& config) {
        const Tolerances tol = tolerances(config);
        const DensityOperator s(sigma, tol);
        const LevelOfDescription lv(s.dim(), hermitians(level, tol), tol);
        return canonical_dict(solve_minrent(s, lv, ConstraintData{iota, targets}, tol));
      },
      py::arg("sigma"), py::arg("level"), py::arg("targets"), py::arg("iota") = 1.0, py::arg("config") = Config{},
      "MinREnt state of sigma under tr(rho) = iota and tr(rho G_a) = targets[a]");

  m.def(
      "pinch",
      [](const std::vector<Matrix>& projectors, const Matrix& rho, const Config& config) -> Matrix {
        const Tolerances tol = tolerances(config);
        return pinch(Pinching(hermitians(projectors, tol), tol), DensityOperator(rho, tol), tol).matrix();
      },
      py::arg("projectors"), py::arg("rho"), py::arg("config") = Config{});

  m.def(
      "decorrelate",
      [](const Matrix& rho, Index d_a, Index d_b, const Config& config) -> Matrix {
        const Tolerances tol = tolerances(config);
        return decorrelate(DensityOperator(rho, tol), d_a, d_b, tol).matrix();
      },
      py::arg("rho"), py::arg("d_a"), py::arg("d_b"), py::arg("config") = Config{});

  m.def(
      "kawasaki_gunton",
      [](const Matrix& sigma, const std::vector<Matrix>& level, const Matrix& rho, const Config& config) {
        const Tolerances tol = tolerances(config);
        const DensityOperator s(sigma, tol);
        const LevelOfDescription lv(s.dim(), hermitians(level, tol), tol);
        return canonical_dict(kawasaki_gunton(s, lv, DensityOperator(rho, tol), tol));
      },
      py::arg("sigma"), py::arg("level"), py::arg("rho"), py::arg("config") = Config{});

  m.def(
      "concentration_simulation",
      [](const RealVector& p, std::int64_t n, std::int64_t samples, const std::vector<double>& thresholds,
         std::uint64_t seed, int threads, const Config& config) {
        const Tolerances tol = tolerances(config);
        const ConcentrationReport r =
            concentration_simulation(ClassicalDistribution(p, tol), n, samples, thresholds, seed, tol, threads);
        py::dict d;
        d["d"] = r.d;
        d["n"] = r.n;
        d["samples"] = r.samples;
        d["method"] = r.method;
        d["mean_rel_entropy"] = r.mean_rel_entropy;
        d["predicted_mean"] = r.predicted_mean;
        d["thresholds"] = r.thresholds;
        d["empirical_tail"] = r.empirical_tail;
        d["predicted_tail"] = r.predicted_tail;
        d["pre_asymptotic"] = r.pre_asymptotic;
        return d;
      },
      py::arg("p"), py::arg("n"), py::arg("samples"), py::arg("thresholds") = std::vector<double>{},
      py::arg("seed") = 0, py::arg("threads") = 1, py::arg("config") = Config{});

  m.def(
      "quantum_neyman_pearson",
      [](const Matrix& rho, const Matrix& sigma, int n, double eps, const Config& config) {
        const Tolerances tol = tolerances(config);
        const SteinPoint pt = quantum_neyman_pearson(DensityOperator(rho, tol), DensityOperator(sigma, tol), n, eps, tol);
        return py::make_tuple(pt.beta, pt.rate);
      },
      py::arg("rho"), py::arg("sigma"), py::arg("n"), py::arg("eps"), py::arg("config") = Config{},
      "(beta, rate) of the optimal test between rho^N and sigma^N");

  m.def(
      "selftest",
      [](std::uint64_t seed, int threads, std::int64_t instances) {
        const SelftestReport r = run_selftest(seed, Tolerances{}, threads, instances);
        py::list out;
        for (const PropertyResult& pr : r.properties) {
          py::dict d;
          d["name"] = pr.name;
          d["passed"] = pr.passed();
          d["failures"] = pr.failures;
          d["worst"] = pr.worst;
          d["tolerance"] = pr.tolerance;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 0, py::arg("threads") = 1, py::arg("instances") = 50);

  m.def(
      "run_cli",
      [](const std::string& command, const std::string& problem, const std::string& format) {
        cli::RunOptions opts;
        opts.command = command;
        opts.format = format;
        const cli::Outcome o = cli::run(opts, problem);
        return py::make_tuple(o.exit_code, o.output);
      },
      py::arg("command"), py::arg("problem") = "", py::arg("format") = "json",
      "Runs a CLI subcommand on problem-file text; returns (exit_code, report)");
}

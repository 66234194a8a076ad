#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qmei/cli.hpp"
#include "qmei/errors.hpp"

using namespace qmei;
using namespace qmei::cli;
using nlohmann::json;

namespace {

const char* kQubitHalf = R"([[[0.5,0],[0,0]],[[0,0],[0.5,0]]])";
const char* kPauliZ = R"([[1,0],[0,-1]])";
const char* kPauliX = R"([[0,1],[1,0]])";
const char* kUp = R"([[1,0],[0,0]])";

std::string problem(const std::string& body) { return R"({"version": "qmei-problem/1", )" + body + "}"; }

Outcome run_cmd(const std::string& command, const std::string& text, const std::string& format = "json") {
  RunOptions o;
  o.command = command;
  o.format = format;
  return run(o, text);
}

json report(const Outcome& o) { return json::parse(o.output); }

struct Shell {
  int code;
  std::string out;
};

#ifdef QMEI_TOOL_PATH
Shell shell(const std::string& args) {
  const std::string cmd = std::string(QMEI_TOOL_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("qmei_test_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(path) << text;
  return path.string();
}
#endif

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("parse and serialize round trip") {
  const std::string text = problem(R"(
    "dimension": 2,
    "rho": [[[0.6, 0], [0.1, -0.2]], [[0.1, 0.2], [0.4, 0]]],
    "sigma": )" + std::string(kQubitHalf) + R"(,
    "level": [)" + kPauliZ + R"(],
    "targets": {"iota": 0.9, "g": [0.123456789012345678], "f": [0.1], "delta_f": [0.01]},
    "extra": [)" + kPauliX + R"(],
    "trials": 1000, "p": [0.25, 0.75], "samples": 5000, "thresholds": [0.001, 0.002],
    "n_max": 4, "eps": 0.05, "d_max": 100, "instances": 7,
    "grain": {"type": "decorrelator", "dims": [1, 2]},
    "config": {"solver_tol": 1e-11}, "seed": 18446744073709551615)");
  const ProblemFile a = parse_problem(text);
  const ProblemFile b = parse_problem(serialize_problem(a));
  CHECK((a.rho->array() - b.rho->array()).abs().maxCoeff() <= 1e-15);
  CHECK((a.sigma->array() - b.sigma->array()).abs().maxCoeff() <= 1e-15);
  CHECK((a.level[0].array() - b.level[0].array()).abs().maxCoeff() <= 1e-15);
  CHECK(a.g->isApprox(*b.g, 0.0));
  CHECK(*b.iota == 0.9);
  CHECK(*b.seed == 18446744073709551615ULL);
  CHECK(b.grain->type == "decorrelator");
  CHECK(b.grain->dim_b == 2);
  CHECK(b.config.at("solver_tol") == 1e-11);
  CHECK(*b.thresholds == *a.thresholds);
  CHECK(serialize_problem(a) == serialize_problem(b));

  ProblemFile k;
  k.grain = GrainSpec{"kawasaki_gunton", {}, 0, 0, parse_problem(problem(R"("rho": )" + std::string(kQubitHalf))).rho,
                      {parse_problem(problem(R"("rho": )" + std::string(kPauliZ))).rho.value()}};
  const ProblemFile k2 = parse_problem(serialize_problem(k));
  CHECK(k2.grain->reference.has_value());
  CHECK(k2.grain->level.size() == 1);
}

TEST_CASE("parse errors carry location") {
  try {
    parse_problem("{\n  \"version\": \"qmei-problem/1\",\n  \"rho\": [1, 2,\n}");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  try {
    parse_problem(problem(R"("rho": [[[1,0],[0,0]],[[0,0],"x"]])"));
    FAIL("expected a structural error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("$.rho[1][1]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_problem(problem(R"("bogus": 1)")), ValidationError);
  CHECK_THROWS_AS(parse_problem(R"({"version": "qmei-problem/2"})"), ValidationError);
  CHECK_THROWS_AS(parse_problem(R"({"rho": [[1]]})"), ValidationError);
}

TEST_CASE("validation names non-Hermitian entries") {
  const ProblemFile p = parse_problem(problem(R"("rho": [[0.5, 0.3], [0.1, 0.5]])"));
  try {
    validate(p, Tolerances{});
    FAIL("expected HermiticityError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("$.rho") != std::string::npos);
    CHECK((what.find("[0][1]") != std::string::npos || what.find("[1][0]") != std::string::npos));
  }
  const ProblemFile q = parse_problem(problem(R"("level": [)" + std::string(kPauliZ) + R"(], "targets": {"g": [0.1, 0.2]})"));
  CHECK_THROWS_AS(validate(q, Tolerances{}), ValidationError);
}

TEST_CASE("entropy command") {
  auto half = report(run_cmd("entropy", problem(R"("rho": )" + std::string(kQubitHalf))));
  CHECK(half["status"] == "ok");
  CHECK(half["result"]["rho"]["von_neumann_entropy"].get<double>() == doctest::Approx(std::log(2.0)));
  CHECK(half["config"].contains("solver_tol"));

  auto pure = report(run_cmd("entropy", problem(R"("rho": )" + std::string(kUp))));
  CHECK(std::abs(pure["result"]["rho"]["von_neumann_entropy"].get<double>()) < 1e-14);

  const Outcome inf = run_cmd("entropy", problem(R"("rho": )" + std::string(kQubitHalf) + R"(, "sigma": )" + kUp));
  CHECK(inf.exit_code == kExitOk);
  auto r = report(inf);
  CHECK(r["result"]["relative_entropy"]["rho||sigma"] == "+inf");
  CHECK(r["result"]["relative_entropy"]["sigma||rho"].get<double>() == doctest::Approx(std::log(2.0)));
  CHECK(r["result"]["support"]["rho_within_sigma"] == false);
}

TEST_CASE("relent command with extension") {
  auto r = report(run_cmd("relent", problem(R"("rho": [[0.75,0],[0,0.25]], "sigma": )" + std::string(kQubitHalf) +
                                            R"(, "d_max": 2)")));
  const double direct = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  CHECK(r["result"]["relative_entropy"].get<double>() == doctest::Approx(direct));
  CHECK(r["result"]["meta_probability"].get<double>() == doctest::Approx(std::exp(-direct)));
  CHECK(r["result"]["extension"]["value"].get<double>() == doctest::Approx(direct));
}

TEST_CASE("reconstruct command") {
  SUBCASE("sigma_z target") {
    std::ostringstream body;
    body << R"("dimension": 2, "level": [)" << kPauliZ << R"(], "targets": {"g": [)" << std::setprecision(17)
         << -std::tanh(1.0) << "]}";
    auto r = report(run_cmd("reconstruct", problem(body.str())));
    CHECK(r["status"] == "ok");
    CHECK(std::abs(r["result"]["lambda"][0].get<double>() - 1.0) < 1e-8);
    CHECK(r["result"]["z"].get<double>() == doctest::Approx(2 * std::cosh(1.0)));
    CHECK(r["diagnostics"]["iterations"].get<int>() >= 1);
    CHECK(r["diagnostics"]["residual"].get<double>() <= 1e-9);
  }
  SUBCASE("empty level returns the reference") {
    auto r = report(run_cmd("reconstruct", problem(R"("sigma": [[0.7,0],[0,0.3]], "targets": {"iota": 1})")));
    CHECK(r["result"]["mu"][0][0][0].get<double>() == doctest::Approx(0.7));
  }
  SUBCASE("infeasible target exits with code 2 and names the bound") {
    const Outcome o = run_cmd("reconstruct", problem(R"("dimension": 2, "level": [)" + std::string(kPauliZ) +
                                                     R"(], "targets": {"g": [1.5]})"));
    CHECK(o.exit_code == kExitInfeasible);
    auto r = report(o);
    CHECK(r["status"] == "error");
    CHECK(r["error"]["kind"] == "infeasible");
    CHECK(r["error"]["message"].get<std::string>().find("1.5") != std::string::npos);
  }
  SUBCASE("non-convergence exits with code 3 and carries history") {
    const Outcome o = run_cmd("reconstruct", problem(R"("dimension": 2, "level": [)" + std::string(kPauliZ) +
                                                     R"(], "targets": {"g": [0.99]}, "config": {"max_iter": 1})"));
    CHECK(o.exit_code == kExitDivergence);
    CHECK(report(o)["diagnostics"]["residual_history"].size() >= 1);
  }
}

TEST_CASE("coarse-grain command") {
  auto r = report(run_cmd("coarse-grain", problem(R"("rho": [[0.9,[0.3,0]],[[0.3,0],0.1]], "sigma": [[0.5,0.1],[0.1,0.5]],
      "grain": {"type": "pinching", "projectors": [[[1,0],[0,0]], [[0,0],[0,1]]]})")));
  CHECK(r["status"] == "ok");
  CHECK(r["result"]["rho"]["matrix"][0][1][0].get<double>() == 0.0);
  CHECK(r["result"]["pythagorean"]["residual"].get<double>() < 1e-10);

  auto kg = report(run_cmd("coarse-grain", problem(R"("rho": [[0.65,0.25],[0.25,0.35]],
      "grain": {"type": "kawasaki_gunton", "level": [)" + std::string(kPauliZ) + "]}")));
  CHECK(kg["result"]["rho"]["matrix"][0][0][0].get<double>() == doctest::Approx(0.65));
  CHECK(std::abs(kg["result"]["rho"]["matrix"][0][1][0].get<double>()) < 1e-9);
}

TEST_CASE("contract command") {
  const std::string base = R"("dimension": 2, "level": [)" + std::string(kPauliZ) + R"(], "extra": [)" + kPauliX +
                           R"(], "trials": 1000000, )";
  auto accept = report(run_cmd("contract", problem(base + R"("targets": {"g": [0.3], "f": [0.0], "delta_f": [0.01]})")));
  CHECK(accept["result"]["accepted"] == true);
  auto reject = report(run_cmd("contract", problem(base + R"("targets": {"g": [0.3], "f": [0.5], "delta_f": [0.01]})")));
  CHECK(reject["result"]["accepted"] == false);
  CHECK(reject["result"]["entropy_differential"].get<double>() > 0.1);
  auto dep = report(run_cmd("contract", problem(R"("dimension": 2, "level": [)" + std::string(kPauliZ) +
                                                R"(], "extra": [[[3,0],[0,-1]]], "trials": 10,
      "targets": {"g": [0.3], "f": [1.6]})")));
  CHECK(dep["result"]["accepted"] == true);
  CHECK(dep["result"]["independent_extra"].empty());
}

TEST_CASE("concentrate command and csv") {
  const std::string text = problem(R"("p": [0.5, 0.5], "trials": 1, "samples": 1000, "thresholds": [0.1])");
  auto r = report(run_cmd("concentrate", text));
  CHECK(r["result"]["method"] == "exact");
  CHECK(r["result"]["mean_rel_entropy"].get<double>() == doctest::Approx(std::log(2.0)));
  CHECK(r["diagnostics"]["pre_asymptotic"] == true);
  const Outcome csv = run_cmd("concentrate", text, "csv");
  CHECK(csv.output.rfind("threshold,empirical_tail,predicted_tail\n", 0) == 0);
  CHECK(csv.output.find("\n0.10000000000000001,1,") != std::string::npos);

  const Outcome bad = run_cmd("entropy", problem(R"("rho": )" + std::string(kUp)), "csv");
  CHECK(bad.exit_code == kExitValidation);
}

TEST_CASE("stein command") {
  const std::string text =
      problem(R"("rho": [[0.75,0],[0,0.25]], "sigma": [[0.25,0],[0,0.75]], "n_max": 3, "eps": 0.05)");
  auto r = report(run_cmd("stein", text));
  CHECK(r["result"]["points"].size() == 3);
  CHECK(r["result"]["relative_entropy"].get<double>() == doctest::Approx(0.5 * std::log(3.0)));
  const Outcome csv = run_cmd("stein", text, "csv");
  std::istringstream lines(csv.output);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 4);
  CHECK(csv.output.rfind("N,eps,beta,rate,relative_entropy\n", 0) == 0);

  const Outcome cap = run_cmd("stein", problem(R"("rho": [[0.75,0.1],[0.1,0.25]], "sigma": [[0.25,0],[0,0.75]],
      "n_max": 6, "eps": 0.05, "config": {"max_dim": 16})"));
  CHECK(cap.exit_code == kExitValidation);
  CHECK(report(cap)["error"]["kind"] == "capacity");
}

TEST_CASE("selftest command") {
  RunOptions o;
  o.command = "selftest";
  o.seed = 7;
  const Outcome first = run(o, problem(R"("instances": 5)"));
  CHECK(first.exit_code == kExitOk);
  auto r = report(first);
  CHECK(r["result"]["all_passed"] == true);
  CHECK(r["seed"] == 7);
  CHECK(first.output == run(o, problem(R"("instances": 5)")).output);
  o.threads = 3;
  CHECK(first.output == run(o, problem(R"("instances": 5)")).output);

  o.overrides = {{"pyth_tol", "1e-30"}};
  const Outcome tripped = run(o, problem(R"("instances": 5)"));
  CHECK(tripped.exit_code == kExitSelftestFailed);
  bool named = false;
  const json tripped_report = report(tripped);
  for (const auto& prop : tripped_report["result"]["properties"])
    if (prop["name"].get<std::string>().rfind("pythagorean", 0) == 0 && prop["passed"] == false) named = true;
  CHECK(named);
}

TEST_CASE("configuration precedence") {
  const std::string text = problem(R"("rho": )" + std::string(kUp) + R"(, "config": {"solver_tol": 1e-7}, "seed": 5)");
  ::setenv("QMEI_SOLVER_TOL", "1e-5", 1);
  ::setenv("QMEI_CANON_TOL", "1e-6", 1);
  ::setenv("QMEI_SEED", "3", 1);
  RunOptions o;
  o.command = "entropy";
  auto r = report(run(o, text));
  CHECK(r["config"]["solver_tol"].get<double>() == 1e-7);
  CHECK(r["config"]["canon_tol"].get<double>() == 1e-6);
  CHECK(r["seed"] == 5);
  o.overrides = {{"solver_tol", "1e-8"}};
  o.seed = 11;
  r = report(run(o, text));
  CHECK(r["config"]["solver_tol"].get<double>() == 1e-8);
  CHECK(r["seed"] == 11);
  auto env_only = report(run_cmd("entropy", problem(R"("rho": )" + std::string(kUp))));
  CHECK(env_only["seed"] == 3);
  ::setenv("QMEI_SOLVER_TOL", "banana", 1);
  CHECK(run_cmd("entropy", text).exit_code == kExitValidation);
  ::unsetenv("QMEI_SOLVER_TOL");
  ::unsetenv("QMEI_CANON_TOL");
  ::unsetenv("QMEI_SEED");

  o.overrides = {{"no_such_key", "1"}};
  CHECK(run(o, text).exit_code == kExitValidation);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ErrorKind::validation) == 1);
  CHECK(exit_code_for(ErrorKind::infeasible) == 2);
  CHECK(exit_code_for(ErrorKind::divergence) == 3);
  CHECK(exit_code_for(ErrorKind::conditioning) == 3);
  CHECK(run_cmd("entropy", "{ not json").exit_code == kExitValidation);
  CHECK(run_cmd("nope", problem(R"("rho": )" + std::string(kUp))).exit_code == kExitValidation);
  CHECK(run_cmd("entropy", "").exit_code == kExitValidation);
}

#ifdef QMEI_TOOL_PATH
TEST_CASE("tool binary") {
  const std::string half = write_temp("half.json", problem(R"("rho": )" + std::string(kQubitHalf)));
  const Shell ok = shell("entropy --input " + half);
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["result"]["rho"]["von_neumann_entropy"].get<double>() == doctest::Approx(std::log(2.0)));

  const std::string out_path = write_temp("out.json", "");
  CHECK(shell("entropy -i " + half + " -o " + out_path).code == 0);
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == ok.out);

  const std::string infeasible = write_temp(
      "inf.json", problem(R"("dimension": 2, "level": [)" + std::string(kPauliZ) + R"(], "targets": {"g": [1.5]})"));
  CHECK(shell("reconstruct --input " + infeasible).code == 2);
  const std::string diverge = write_temp("div.json", problem(R"("dimension": 2, "level": [)" + std::string(kPauliZ) +
                                                             R"(], "targets": {"g": [0.99]})"));
  CHECK(shell("reconstruct --input " + diverge + " --tol-override max_iter=1").code == 3);
  const std::string broken = write_temp("broken.json", "{\"version\": ");
  CHECK(shell("entropy --input " + broken).code == 1);
  CHECK(shell("entropy --input /nonexistent/file.json").code == 1);
  CHECK(shell("entropy --input " + half + " --format csv").code == 1);
  CHECK(shell("bogus").code == 1);

  const Shell a = shell("selftest --seed 3 --threads 1");
  const Shell b = shell("selftest --seed 3 --threads 4");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(shell("selftest --seed 3 --tol-override identity_tol=1e-40").code == 4);

  for (const auto& p : {half, out_path, infeasible, diverge, broken}) std::filesystem::remove(p);
}
#endif

}  // TEST_SUITE

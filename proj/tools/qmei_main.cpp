#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qmei/cli.hpp"

namespace {

const char* describe(const std::string& name) {
  if (name == "entropy") return "von Neumann, classical and relative entropies of the supplied states";
  if (name == "relent") return "S(rho || sigma), its meta-probability and optional extension-space evaluation";
  if (name == "reconstruct") return "MinREnt state for a reference state, level of description and targets";
  if (name == "coarse-grain") return "apply a pinching, decorrelator or Kawasaki-Gunton grain";
  if (name == "contract") return "decide whether extra observables can be dropped from the level";
  if (name == "concentrate") return "entropy concentration of empirical frequencies";
  if (name == "stein") return "optimal type-II errors and Stein rates for N = 1..n_max";
  return "run the seeded invariant suite";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmei: minimum relative entropy toolkit for density matrices"};
  app.require_subcommand(1);

  qmei::cli::RunOptions opts;
  std::string output;
  std::uint64_t seed = 0;
  std::int64_t max_dim = 0;
  std::vector<std::string> overrides;

  for (const std::string& name : qmei::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--input,-i", opts.input_path, "problem file (JSON, version qmei-problem/1)");
    sub->add_option("--output,-o", output, "report destination (default stdout)");
    sub->add_option("--format", opts.format, "json or csv (csv for concentrate and stein)")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed, "RNG seed (overrides QMEI_SEED and the file)");
    sub->add_option("--max-dim", max_dim, "dimension budget for tensor powers")->check(CLI::PositiveNumber);
    sub->add_option("--tol-override", overrides, "KEY=VAL tolerance override (repeatable)");
    sub->add_option("--threads", opts.threads, "worker threads; results do not depend on it")
        ->envname("QMEI_THREADS")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qmei::cli::kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  opts.command = sub->get_name();
  if (sub->count("--seed") > 0) opts.seed = seed;
  if (sub->count("--max-dim") > 0) opts.max_dim = max_dim;
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --tol-override expects KEY=VAL, got '" << kv << "'\n";
      return qmei::cli::kExitValidation;
    }
    opts.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }

  std::string text;
  if (!opts.input_path.empty()) {
    std::ifstream in(opts.input_path);
    if (!in) {
      std::cerr << "error: cannot read input file '" << opts.input_path << "'\n";
      return qmei::cli::kExitValidation;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  const qmei::cli::Outcome outcome = qmei::cli::run(opts, text);
  if (!outcome.error.empty()) std::cerr << "error: " << outcome.error << "\n";
  if (output.empty()) {
    std::cout << outcome.output;
  } else {
    std::ofstream out(output);
    if (!out) {
      std::cerr << "error: cannot write output file '" << output << "'\n";
      return qmei::cli::kExitValidation;
    }
    out << outcome.output;
  }
  return outcome.exit_code;
}

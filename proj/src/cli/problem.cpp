#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "qmei/cli.hpp"

namespace qmei::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("problem file: " + path + ": " + what);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "number must be finite");
  return v;
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !(j.is_number() && j.get<double>() == std::floor(j.get<double>())))
    fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

Complex as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {as_number(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) fail(path, "expected a complex number [re, im]");
  return {as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
}

Matrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array()) fail(path + "[0]", "expected an array of entries");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      fail(rp, "expected a row of " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = as_complex(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

std::vector<Matrix> as_matrices(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_matrix(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

RealVector as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  RealVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const RealVector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

// "line L, column C" for a byte offset into the text.
std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const std::vector<std::string> kKeys = {"version", "dimension", "rho",     "sigma", "level",  "targets",   "extra",
                                        "trials",  "p",         "q",       "samples", "thresholds", "n_max", "eps",
                                        "d_max",   "instances", "grain",   "config", "seed"};

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("problem file: syntax error at " + location(text, e.byte) + ": " + e.what());
  }
  if (!j.is_object()) fail("$", "top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(kKeys.begin(), kKeys.end(), it.key()) == kKeys.end()) fail("$." + it.key(), "unknown field");

  ProblemFile p;
  if (!j.contains("version") || !j["version"].is_string()) fail("$.version", "missing version string");
  p.version = j["version"].get<std::string>();
  if (p.version != kProblemVersion) fail("$.version", "unsupported version '" + p.version + "'");

  if (j.contains("dimension")) {
    p.dimension = as_integer(j["dimension"], "$.dimension");
    if (*p.dimension < 1) fail("$.dimension", "must be >= 1");
  }
  if (j.contains("rho")) p.rho = as_matrix(j["rho"], "$.rho");
  if (j.contains("sigma")) p.sigma = as_matrix(j["sigma"], "$.sigma");
  if (j.contains("level")) p.level = as_matrices(j["level"], "$.level");
  if (j.contains("extra")) p.extra = as_matrices(j["extra"], "$.extra");
  if (j.contains("targets")) {
    const json& t = j["targets"];
    if (!t.is_object()) fail("$.targets", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      const std::string path = "$.targets." + it.key();
      if (it.key() == "iota")
        p.iota = as_number(it.value(), path);
      else if (it.key() == "g")
        p.g = as_vector(it.value(), path);
      else if (it.key() == "f")
        p.f = as_vector(it.value(), path);
      else if (it.key() == "delta_f")
        p.delta_f = as_vector(it.value(), path);
      else
        fail(path, "unknown field");
    }
  }
  if (j.contains("trials")) p.trials = as_integer(j["trials"], "$.trials");
  if (j.contains("p")) p.p = as_vector(j["p"], "$.p");
  if (j.contains("q")) p.q = as_vector(j["q"], "$.q");
  if (j.contains("samples")) p.samples = as_integer(j["samples"], "$.samples");
  if (j.contains("thresholds")) {
    const RealVector v = as_vector(j["thresholds"], "$.thresholds");
    p.thresholds = std::vector<double>(v.data(), v.data() + v.size());
  }
  if (j.contains("n_max")) p.n_max = static_cast<int>(as_integer(j["n_max"], "$.n_max"));
  if (j.contains("eps")) p.eps = as_number(j["eps"], "$.eps");
  if (j.contains("d_max")) p.d_max = as_integer(j["d_max"], "$.d_max");
  if (j.contains("instances")) p.instances = as_integer(j["instances"], "$.instances");
  if (j.contains("grain")) {
    const json& g = j["grain"];
    if (!g.is_object() || !g.contains("type") || !g["type"].is_string()) fail("$.grain", "expected an object with a type");
    GrainSpec spec;
    spec.type = g["type"].get<std::string>();
    if (spec.type == "pinching") {
      if (!g.contains("projectors")) fail("$.grain", "pinching needs projectors");
      spec.projectors = as_matrices(g["projectors"], "$.grain.projectors");
    } else if (spec.type == "decorrelator") {
      if (!g.contains("dims") || !g["dims"].is_array() || g["dims"].size() != 2) fail("$.grain.dims", "expected [d_a, d_b]");
      spec.dim_a = as_integer(g["dims"][0], "$.grain.dims[0]");
      spec.dim_b = as_integer(g["dims"][1], "$.grain.dims[1]");
    } else if (spec.type == "kawasaki_gunton") {
      if (g.contains("reference")) spec.reference = as_matrix(g["reference"], "$.grain.reference");
      if (!g.contains("level")) fail("$.grain", "kawasaki_gunton needs a level");
      spec.level = as_matrices(g["level"], "$.grain.level");
    } else {
      fail("$.grain.type", "unknown grain '" + spec.type + "'");
    }
    p.grain = std::move(spec);
  }
  if (j.contains("config")) {
    const json& c = j["config"];
    if (!c.is_object()) fail("$.config", "expected an object");
    for (auto it = c.begin(); it != c.end(); ++it) p.config[it.key()] = as_number(it.value(), "$.config." + it.key());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("$.seed", "expected a non-negative integer");
    p.seed = j["seed"].get<std::uint64_t>();
  }
  return p;
}

std::string serialize_problem(const ProblemFile& p) {
  json j;
  j["version"] = p.version;
  if (p.dimension) j["dimension"] = *p.dimension;
  if (p.rho) j["rho"] = matrix_json(*p.rho);
  if (p.sigma) j["sigma"] = matrix_json(*p.sigma);
  if (!p.level.empty()) {
    j["level"] = json::array();
    for (const auto& m : p.level) j["level"].push_back(matrix_json(m));
  }
  if (!p.extra.empty()) {
    j["extra"] = json::array();
    for (const auto& m : p.extra) j["extra"].push_back(matrix_json(m));
  }
  json targets = json::object();
  if (p.iota) targets["iota"] = *p.iota;
  if (p.g) targets["g"] = vector_json(*p.g);
  if (p.f) targets["f"] = vector_json(*p.f);
  if (p.delta_f) targets["delta_f"] = vector_json(*p.delta_f);
  if (!targets.empty()) j["targets"] = targets;
  if (p.trials) j["trials"] = *p.trials;
  if (p.p) j["p"] = vector_json(*p.p);
  if (p.q) j["q"] = vector_json(*p.q);
  if (p.samples) j["samples"] = *p.samples;
  if (p.thresholds) j["thresholds"] = *p.thresholds;
  if (p.n_max) j["n_max"] = *p.n_max;
  if (p.eps) j["eps"] = *p.eps;
  if (p.d_max) j["d_max"] = *p.d_max;
  if (p.instances) j["instances"] = *p.instances;
  if (p.grain) {
    json g;
    g["type"] = p.grain->type;
    if (p.grain->type == "pinching") {
      g["projectors"] = json::array();
      for (const auto& m : p.grain->projectors) g["projectors"].push_back(matrix_json(m));
    } else if (p.grain->type == "decorrelator") {
      g["dims"] = {p.grain->dim_a, p.grain->dim_b};
    } else {
      if (p.grain->reference) g["reference"] = matrix_json(*p.grain->reference);
      g["level"] = json::array();
      for (const auto& m : p.grain->level) g["level"].push_back(matrix_json(m));
    }
    j["grain"] = g;
  }
  if (!p.config.empty()) j["config"] = p.config;
  if (p.seed) j["seed"] = *p.seed;
  return j.dump(2);
}

namespace {

void check_operator(const Matrix& m, Index d, const std::string& path, const Tolerances& tol) {
  if (m.rows() != d || m.cols() != d)
    fail(path, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix, got " + std::to_string(m.rows()) +
                   "x" + std::to_string(m.cols()));
  try {
    HermitianOperator h(m, tol);
  } catch (const HermiticityError& e) {
    std::ostringstream os;
    os << "not Hermitian: |H(" << e.row() << "," << e.col() << ") - conj(H(" << e.col() << "," << e.row()
       << "))| = " << e.max_asymmetry() << " exceeds hermit_tol " << tol.hermit_tol;
    fail(path + "[" + std::to_string(e.row()) + "][" + std::to_string(e.col()) + "]", os.str());
  }
}

}  // namespace

void validate(const ProblemFile& p, const Tolerances& tol) {
  Index d = 0;
  if (p.dimension) {
    d = *p.dimension;
  } else if (p.rho) {
    d = p.rho->rows();
  } else if (p.sigma) {
    d = p.sigma->rows();
  } else if (!p.level.empty()) {
    d = p.level.front().rows();
  }
  if (p.rho) check_operator(*p.rho, d, "$.rho", tol);
  if (p.sigma) check_operator(*p.sigma, d, "$.sigma", tol);
  for (std::size_t i = 0; i < p.level.size(); ++i) check_operator(p.level[i], d, "$.level[" + std::to_string(i) + "]", tol);
  for (std::size_t i = 0; i < p.extra.size(); ++i) check_operator(p.extra[i], d, "$.extra[" + std::to_string(i) + "]", tol);
  if (p.g && static_cast<std::size_t>(p.g->size()) != p.level.size())
    fail("$.targets.g", std::to_string(p.g->size()) + " targets for " + std::to_string(p.level.size()) + " observables");
  if (p.f && static_cast<std::size_t>(p.f->size()) != p.extra.size())
    fail("$.targets.f", std::to_string(p.f->size()) + " targets for " + std::to_string(p.extra.size()) + " extra observables");
  if (p.delta_f && static_cast<std::size_t>(p.delta_f->size()) != p.extra.size())
    fail("$.targets.delta_f",
         std::to_string(p.delta_f->size()) + " accuracies for " + std::to_string(p.extra.size()) + " extra observables");
  if (p.grain) {
    for (std::size_t i = 0; i < p.grain->projectors.size(); ++i)
      check_operator(p.grain->projectors[i], d, "$.grain.projectors[" + std::to_string(i) + "]", tol);
    for (std::size_t i = 0; i < p.grain->level.size(); ++i)
      check_operator(p.grain->level[i], d, "$.grain.level[" + std::to_string(i) + "]", tol);
    if (p.grain->reference) check_operator(*p.grain->reference, d, "$.grain.reference", tol);
  }
}

}  // namespace qmei::cli

#include "qmei/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qmei/errors.hpp"

namespace qmei {

namespace {

struct Field {
  const char* key;
  double Tolerances::*real;
  std::int64_t Tolerances::*integer;
};

constexpr Field kFields[] = {
    {"hermit_tol", &Tolerances::hermit_tol, nullptr},
    {"psd_tol", &Tolerances::psd_tol, nullptr},
    {"trace_tol", &Tolerances::trace_tol, nullptr},
    {"eig_floor", &Tolerances::eig_floor, nullptr},
    {"degeneracy_gap", &Tolerances::degeneracy_gap, nullptr},
    {"spec_tol", &Tolerances::spec_tol, nullptr},
    {"herm_residue_tol", &Tolerances::herm_residue_tol, nullptr},
    {"max_dim", nullptr, &Tolerances::max_dim},
    {"support_tol", &Tolerances::support_tol, nullptr},
    {"ratapprox_tol", &Tolerances::ratapprox_tol, nullptr},
    {"gram_cond_max", &Tolerances::gram_cond_max, nullptr},
    {"canon_tol", &Tolerances::canon_tol, nullptr},
    {"solver_tol", &Tolerances::solver_tol, nullptr},
    {"max_iter", nullptr, &Tolerances::max_iter},
    {"lambda_max", &Tolerances::lambda_max, nullptr},
    {"feas_margin", &Tolerances::feas_margin, nullptr},
    {"tikh", &Tolerances::tikh, nullptr},
    {"kubo_degenerate", &Tolerances::kubo_degenerate, nullptr},
    {"identity_tol", &Tolerances::identity_tol, nullptr},
    {"fd_tol", &Tolerances::fd_tol, nullptr},
    {"fd_step", &Tolerances::fd_step, nullptr},
    {"pyth_tol", &Tolerances::pyth_tol, nullptr},
    {"np_gap", &Tolerances::np_gap, nullptr},
    {"np_max_iter", nullptr, &Tolerances::np_max_iter},
    {"enum_max", nullptr, &Tolerances::enum_max},
};

const Field& find_field(const std::string& key) {
  for (const auto& f : kFields)
    if (key == f.key) return f;
  throw ValidationError("unknown configuration key '" + key + "'");
}

}  // namespace

void Tolerances::set(const std::string& key, double value) {
  const Field& f = find_field(key);
  if (!std::isfinite(value) || value < 0.0)
    throw ValidationError("configuration value for '" + key + "' must be finite and non-negative");
  if (f.real != nullptr) {
    this->*f.real = value;
    return;
  }
  if (value != std::floor(value)) throw ValidationError("configuration value for '" + key + "' must be an integer");
  this->*f.integer = static_cast<std::int64_t>(value);
}

void Tolerances::set(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end == nullptr || *end != '\0')
    throw ValidationError("configuration value for '" + key + "' is not a number: '" + value + "'");
  set(key, v);
}

std::map<std::string, double> Tolerances::to_map() const {
  std::map<std::string, double> out;
  for (const auto& f : kFields)
    out[f.key] = f.real != nullptr ? this->*f.real : static_cast<double>(this->*f.integer);
  return out;
}

void Tolerances::apply_environment() {
  for (const auto& f : kFields) {
    std::string name = "QMEI_";
    for (const char* c = f.key; *c != '\0'; ++c) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
    if (const char* v = std::getenv(name.c_str())) set(f.key, std::string(v));
  }
}

HermiticityError::HermiticityError(double asymmetry, std::size_t row, std::size_t col)
    : ValidationError([&] {
        std::ostringstream os;
        os << "operator is not Hermitian: max asymmetry " << asymmetry << " at (" << row << ", " << col << ")";
        return os.str();
      }()),
      asymmetry_(asymmetry),
      row_(row),
      col_(col) {}

FeasibilityError::FeasibilityError(std::size_t observable, double target, double lower, double upper)
    : Error(ErrorKind::infeasible,
            [&] {
              std::ostringstream os;
              os.precision(17);
              os << "infeasible target for observable " << observable << ": g/iota = " << target
                 << " outside the open spectral interval (" << lower << ", " << upper << ")";
              return os.str();
            }()),
      observable_(observable),
      target_(target),
      lower_(lower),
      upper_(upper) {}

}  // namespace qmei

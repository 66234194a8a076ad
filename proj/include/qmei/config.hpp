#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace qmei {

/// Numerical thresholds shared by every module.
///
/// All members are plain values so a configuration can be copied into worker
/// threads and echoed verbatim into reports. Names match the keys accepted by
/// the CLI `config` block and `--tol-override`.
struct Tolerances {
  // operators
  double hermit_tol = 1e-10;        // max |H - H^dagger| accepted (then symmetrized)
  double psd_tol = 1e-10;           // most negative eigenvalue tolerated in a density
  double trace_tol = 1e-10;         // slack on tr(rho) in (0, 1]
  double eig_floor = 1e-12;         // relative to the largest |eigenvalue|
  double degeneracy_gap = 1e-10;    // relative to the spectral range
  double spec_tol = 1e-10;
  double herm_residue_tol = 1e-10;  // discarded imaginary part of tr(rho A)
  std::int64_t max_dim = 4096;

  // entropy
  double support_tol = 1e-10;
  double ratapprox_tol = 1e-3;      // bound on the extension approximation error

  // canonical
  double gram_cond_max = 1e12;
  double canon_tol = 1e-10;
  double solver_tol = 1e-9;
  std::int64_t max_iter = 200;
  double lambda_max = 700.0;        // bound on the spectral radius of sum_a lambda^a G_a
  double feas_margin = 1e-9;
  double tikh = 1e-12;
  double kubo_degenerate = 1e-8;
  double identity_tol = 1e-9;
  double fd_tol = 1e-6;
  double fd_step = 1e-5;

  // coarsegrain
  double pyth_tol = 1e-8;

  // asymptotics
  double np_gap = 1e-12;
  std::int64_t np_max_iter = 200;
  std::int64_t enum_max = 100000;

  /// Sets a member by key. Throws ValidationError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);

  /// Every key with its current value, in a stable order.
  std::map<std::string, double> to_map() const;

  /// Applies QMEI_<KEY> environment variables (upper-cased keys).
  void apply_environment();
};

}  // namespace qmei

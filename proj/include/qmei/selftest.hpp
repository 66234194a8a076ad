#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmei/config.hpp"

namespace qmei {

struct PropertyResult {
  std::string name;
  std::int64_t instances = 0;
  std::int64_t failures = 0;
  double worst = 0.0;      // largest violation seen (+inf after an exception)
  double tolerance = 0.0;  // violations above this count as failures
  std::string first_error;

  bool passed() const { return failures == 0; }
};

struct SelftestReport {
  std::uint64_t seed = 0;
  std::int64_t instances = 0;
  std::vector<PropertyResult> properties;

  bool all_passed() const;
};

/// Runs every invariant on `instances` seeded random inputs.
///
/// Each property draws from its own generator seeded by (seed, property
/// index), and properties are distributed over `threads` workers, so the
/// report is identical for any thread count.
SelftestReport run_selftest(std::uint64_t seed, const Tolerances& tol = {}, int threads = 1,
                            std::int64_t instances = 50);

/// Names of the properties in report order.
std::vector<std::string> selftest_property_names();

}  // namespace qmei

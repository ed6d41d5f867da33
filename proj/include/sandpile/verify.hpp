#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Property suites that check the solver against independent oracles: dense
// factorizations, the ADMM solver of the constrained problem, finite
// differences and closed forms.

namespace sandpile {

struct Check {
  std::string suite;
  std::string name;
  /// Recorded-only checks never fail a run.
  bool asserted = true;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation = "<=";
  std::string detail;
  /// Acceptance criterion this check decides, 0 if none.
  int criterion = 0;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
};

/// penalty, state, sensitivity, control, oracle
const std::vector<std::string>& suite_names();

/// selector is "all" or one suite name; throws std::invalid_argument otherwise.
std::vector<Check> run_suite(const std::string& selector, const VerifyOptions& options = {});

std::vector<Check> penalty_suite(const VerifyOptions& options);
std::vector<Check> state_suite(const VerifyOptions& options);
std::vector<Check> sensitivity_suite(const VerifyOptions& options);
std::vector<Check> control_suite(const VerifyOptions& options);
std::vector<Check> oracle_suite(const VerifyOptions& options);

bool all_asserted_pass(const std::vector<Check>& checks);

/// Regression baseline for the tracking benchmark: j(f*) / j(0).
inline constexpr double kTrackingRatioBaseline = 1.2543469696973e-05;

}  // namespace sandpile

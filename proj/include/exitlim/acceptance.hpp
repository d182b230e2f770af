#pragma once

// Verification suite: eight numbered criteria covering the scaling-limit
// statistics, the conditioned 1-d program, the deterministic oracles, and
// the property checks. Every tolerance is pinned here; `quick` shrinks
// sample sizes for CI-speed runs and widens only the sampling-noise-limited
// thresholds accordingly (see README).

#include <string>
#include <vector>

namespace exitlim::acceptance {

struct Check {
  std::string label;
  double measured = 0.0;
  double lo = 0.0;  // inclusive window; one-sided checks use +-inf
  double hi = 0.0;
  bool pass = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<Check> checks;
  double seconds = 0.0;
};

struct Options {
  bool quick = false;
  int jobs = 1;
};

inline constexpr int kNumCriteria = 8;

CriterionResult run_criterion(int id, const Options& opt);
std::vector<CriterionResult> run_all(const Options& opt);

// "[PASS] criterion 3: ... | key=value in [lo, hi]; ..." one-liner.
std::string format_line(const CriterionResult& r);

}  // namespace exitlim::acceptance

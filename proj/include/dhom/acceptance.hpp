#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dhom {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;  // measured values and the pinned tolerances
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_pass = true;
};

struct AcceptanceOptions {
  double tau_null = 1e-8;           // kernel cut, relative to sigma_max
  std::uint64_t seed = 20260815;    // Monte Carlo seed
  std::string scratch_dir = "acceptance_scratch";
  std::vector<int> only;            // criterion ids to run (empty = all)
};

// Runs the acceptance suite (17 criteria, tolerances pinned in the
// implementation). Heavy intermediates are cached across criteria.
AcceptanceReport run_acceptance(const AcceptanceOptions& opts);

// One PASS/FAIL line per criterion plus a summary line.
std::string format_acceptance(const AcceptanceReport& rep);

}  // namespace dhom

#pragma once

#include <string>
#include <vector>

#include "dhom/scenario.hpp"

namespace dhom {

struct StageResult {
  std::string name;
  bool ran = false;
  bool ok = false;
  double seconds = 0.0;
  std::vector<std::string> artifacts;  // basenames written to the output dir
  std::vector<std::string> failures;   // failed checks / error messages
};

struct RunReport {
  ScenarioConfig cfg;
  std::uint64_t config_hash = 0;
  std::vector<StageResult> stages;
  bool all_ok = true;
  std::string report_path;
};

// Pipeline stages in dependency order.
const std::vector<std::string>& stage_names();

// Runs the requested stages (empty = all) into cfg.output_dir.  Every
// requested stage must have its dependencies requested too.  The run report
// is written last; all other artifacts are timing-free and byte-reproducible.
RunReport run_experiment(const ScenarioConfig& cfg, const std::vector<std::string>& stages);

Json report_to_json(const RunReport& rep, bool include_timings);

}  // namespace dhom

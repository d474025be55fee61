#pragma once

#include <string>
#include <vector>

#include "dhom/drift.hpp"
#include "dhom/flow.hpp"
#include "dhom/io.hpp"
#include "dhom/quotient.hpp"
#include "dhom/sde.hpp"

namespace dhom {

struct QuotientParams {
  int n_samples = 64;
  double T = 20.0;
  double h = 0.01;
  double delta = 0.05;
  double dtau = 10.0;
  int label_res = 0;  // 0 = pick by dimension (512 for d<=2, 128 for d=3)
  double prune_cap = 0.0;
  std::uint64_t eval_budget = 20'000'000'000ULL;
};

struct McParams {
  long n = 20000;
  std::uint64_t seed = 20260815;
  std::vector<double> c_list;  // drift strengths simulated
  double density_a = 0.8;      // initial law (1 + a cos x1) dpi
  double xi = 0.5;             // characteristic-function frequency
};

struct ScenarioConfig {
  std::string scenario;
  int d = 2;
  int K = 4;
  double alpha = 1.4142135623730951;  // irrational drift slope
  std::vector<TrigVectorField::ModeList> custom_drift;  // scenario "custom"
  std::vector<double> lambda_list{0.5, 1.0, 2.0};
  std::vector<double> c_list{0.0, 1.0, 10.0, 100.0, 1000.0};
  std::vector<double> time_grid{0.0, 0.25, 0.5, 1.0};
  QuotientParams quotient;
  McParams mc;
  double tau_null = 1e-8;
  std::string output_dir = "out";
};

std::vector<std::string> scenario_names();
ScenarioConfig default_config(const std::string& scenario);
ScenarioConfig config_from_json(const Json& j);
Json config_to_json(const ScenarioConfig& cfg);
std::string list_scenarios_text();

// Everything derived from a config that the pipeline stages consume.
struct Scenario {
  ScenarioConfig cfg;
  ModeLattice lat;
  TrigVectorField drift;

  bool has_exact_flow = false;
  FlowFn flow;  // empty when only RK4 integration is available
  std::string flow_note;

  std::function<double(const double*)> hint;  // flow invariant for edge pruning
  double hint_lip = 1.0;

  SpectralField resolvent_probe;   // generic non-invariant probe
  SpectralField semigroup_probe;   // lies in the drift kernel
  SpectralField projection_probe;  // compared against the kernel projection
  SpectralField algebra_f;         // invariant pair for the algebra checks
  SpectralField algebra_h;
  SpectralField mc_observable;     // invariant observable tracked along paths

  Trajectory trajectory_from(const std::array<double, 3>& x0, double T) const;
  const FlowFn* drift_flow() const { return has_exact_flow ? &flow : nullptr; }
};

Scenario make_scenario(const ScenarioConfig& cfg);

}  // namespace dhom

#include "dhom/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dhom {

namespace {

SpectralField make_cos(const ModeLattice& lat, int axis) {
  Mode p{0, 0, 0}, m{0, 0, 0};
  p[static_cast<std::size_t>(axis)] = 1;
  m[static_cast<std::size_t>(axis)] = -1;
  return SpectralField::from_modes(lat, {{p, {0.5, 0.0}}, {m, {0.5, 0.0}}});
}

SpectralField make_sin(const ModeLattice& lat, int axis) {
  Mode p{0, 0, 0}, m{0, 0, 0};
  p[static_cast<std::size_t>(axis)] = 1;
  m[static_cast<std::size_t>(axis)] = -1;
  return SpectralField::from_modes(lat, {{p, {0.0, -0.5}}, {m, {0.0, 0.5}}});
}

SpectralField make_one(const ModeLattice& lat) {
  return SpectralField::from_modes(lat, {{Mode{0, 0, 0}, {1.0, 0.0}}});
}

SpectralField make_h(const ModeLattice& lat) { return make_cos(lat, 0) + make_cos(lat, 1); }

// (cos x1 + cos x2)^2 = 1 + cos(2x1)/2 + cos(2x2)/2 + cos(x1+x2) + cos(x1-x2).
SpectralField make_h_squared(const ModeLattice& lat) {
  return SpectralField::from_modes(
      lat, {{Mode{0, 0, 0}, {1.0, 0.0}},
            {Mode{2, 0, 0}, {0.25, 0.0}},
            {Mode{-2, 0, 0}, {0.25, 0.0}},
            {Mode{0, 2, 0}, {0.25, 0.0}},
            {Mode{0, -2, 0}, {0.25, 0.0}},
            {Mode{1, 1, 0}, {0.5, 0.0}},
            {Mode{-1, -1, 0}, {0.5, 0.0}},
            {Mode{1, -1, 0}, {0.5, 0.0}},
            {Mode{-1, 1, 0}, {0.5, 0.0}}});
}

std::vector<double> json_doubles(const Json& j, const char* what) {
  DHOM_REQUIRE(j.is_array() && !j.empty(), std::string(what) + " must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : j) {
    DHOM_REQUIRE(v.is_number(), std::string(what) + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* block) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    DHOM_REQUIRE(ok, "unknown key '" + key + "' in " + block);
  }
}

TrigVectorField::ModeList mode_list_from_json(const Json& j, int d) {
  TrigVectorField::ModeList out;
  DHOM_REQUIRE(j.is_array(), "drift component must be an array of mode entries");
  for (const auto& e : j) {
    check_keys(e, {"k", "re", "im"}, "drift mode entry");
    Mode k{0, 0, 0};
    const auto& kv = e.at("k");
    DHOM_REQUIRE(kv.is_array() && static_cast<int>(kv.size()) == d,
                 "drift mode arity must match the dimension");
    for (int a = 0; a < d; ++a) k[static_cast<std::size_t>(a)] = kv[a].get<int>();
    out.emplace_back(k, Complex(e.value("re", 0.0), e.value("im", 0.0)));
  }
  return out;
}

Json mode_list_to_json(const TrigVectorField::ModeList& ml, int d) {
  Json arr = Json::array();
  for (const auto& [k, amp] : ml) {
    Json e;
    Json kv = Json::array();
    for (int a = 0; a < d; ++a) kv.push_back(k[static_cast<std::size_t>(a)]);
    e["k"] = kv;
    e["re"] = amp.real();
    e["im"] = amp.imag();
    arr.push_back(e);
  }
  return arr;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"zero", "irrational", "example3", "cellular2d", "custom"};
}

ScenarioConfig default_config(const std::string& scenario) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  if (scenario == "zero") {
    cfg.d = 2;
    cfg.K = 4;
    cfg.quotient = {64, 20.0, 0.01, 0.05, 10.0, 0, 0.0, 20'000'000'000ULL};
    cfg.mc.c_list = {0.0, 50.0};
  } else if (scenario == "irrational") {
    cfg.d = 2;
    cfg.K = 4;
    cfg.quotient = {48, 2000.0, 0.01, 0.1, 10.0, 0, 0.0, 20'000'000'000ULL};
    cfg.mc.c_list = {0.0, 50.0};
  } else if (scenario == "example3") {
    cfg.d = 3;
    cfg.K = 4;
    cfg.quotient = {400, 500.0, 0.01, 0.1, 10.0, 0, 0.0, 20'000'000'000ULL};
    cfg.mc.c_list = {0.0, 50.0};
  } else if (scenario == "cellular2d") {
    cfg.d = 2;
    cfg.K = 8;
    cfg.quotient = {400, 30.0, 0.005, 0.03, 0.25, 0, 0.25, 20'000'000'000ULL};
    cfg.mc.c_list = {1.0, 10.0, 100.0};
  } else if (scenario == "custom") {
    cfg.d = 2;
    cfg.K = 4;
    cfg.quotient = {64, 20.0, 0.01, 0.05, 10.0, 0, 0.0, 20'000'000'000ULL};
    cfg.mc.c_list = {0.0, 50.0};
  } else {
    DHOM_REQUIRE(false, "unknown scenario '" + scenario + "'");
  }
  return cfg;
}

ScenarioConfig config_from_json(const Json& j) {
  DHOM_REQUIRE(j.is_object(), "config must be a JSON object");
  DHOM_REQUIRE(j.contains("scenario"), "config needs a 'scenario' field");
  check_keys(j,
             {"scenario", "lattice", "drift", "lambda_list", "c_list", "time_grid", "quotient",
              "mc", "tau_null", "output_dir"},
             "config");
  ScenarioConfig cfg = default_config(j.at("scenario").get<std::string>());

  if (j.contains("lattice")) {
    const Json& l = j.at("lattice");
    check_keys(l, {"d", "K"}, "lattice");
    if (l.contains("d")) cfg.d = l.at("d").get<int>();
    if (l.contains("K")) cfg.K = l.at("K").get<int>();
  }
  if (j.contains("drift")) {
    const Json& dr = j.at("drift");
    check_keys(dr, {"alpha", "components"}, "drift");
    if (dr.contains("alpha")) cfg.alpha = dr.at("alpha").get<double>();
    if (dr.contains("components")) {
      DHOM_REQUIRE(cfg.scenario == "custom", "drift components are only valid for 'custom'");
      const Json& comps = dr.at("components");
      DHOM_REQUIRE(comps.is_array() && static_cast<int>(comps.size()) == cfg.d,
                   "need one drift component per axis");
      cfg.custom_drift.clear();
      for (const auto& c : comps) cfg.custom_drift.push_back(mode_list_from_json(c, cfg.d));
    }
  }
  if (j.contains("lambda_list")) cfg.lambda_list = json_doubles(j.at("lambda_list"), "lambda_list");
  if (j.contains("c_list")) cfg.c_list = json_doubles(j.at("c_list"), "c_list");
  if (j.contains("time_grid")) cfg.time_grid = json_doubles(j.at("time_grid"), "time_grid");
  if (j.contains("quotient")) {
    const Json& q = j.at("quotient");
    check_keys(q, {"n_samples", "T", "h", "delta", "dtau", "label_res", "prune_cap", "eval_budget"},
               "quotient");
    if (q.contains("n_samples")) cfg.quotient.n_samples = q.at("n_samples").get<int>();
    if (q.contains("T")) cfg.quotient.T = q.at("T").get<double>();
    if (q.contains("h")) cfg.quotient.h = q.at("h").get<double>();
    if (q.contains("delta")) cfg.quotient.delta = q.at("delta").get<double>();
    if (q.contains("dtau")) cfg.quotient.dtau = q.at("dtau").get<double>();
    if (q.contains("label_res")) cfg.quotient.label_res = q.at("label_res").get<int>();
    if (q.contains("prune_cap")) cfg.quotient.prune_cap = q.at("prune_cap").get<double>();
    if (q.contains("eval_budget")) cfg.quotient.eval_budget = q.at("eval_budget").get<std::uint64_t>();
  }
  if (j.contains("mc")) {
    const Json& m = j.at("mc");
    check_keys(m, {"n", "seed", "c_list", "density_a", "xi"}, "mc");
    if (m.contains("n")) cfg.mc.n = m.at("n").get<long>();
    if (m.contains("seed")) cfg.mc.seed = m.at("seed").get<std::uint64_t>();
    if (m.contains("c_list")) cfg.mc.c_list = json_doubles(m.at("c_list"), "mc.c_list");
    if (m.contains("density_a")) cfg.mc.density_a = m.at("density_a").get<double>();
    if (m.contains("xi")) cfg.mc.xi = m.at("xi").get<double>();
  }
  if (j.contains("tau_null")) cfg.tau_null = j.at("tau_null").get<double>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  DHOM_REQUIRE(cfg.d >= 1 && cfg.d <= 3, "dimension must be 1..3");
  DHOM_REQUIRE(cfg.K >= 1, "K must be positive");
  for (double l : cfg.lambda_list) DHOM_REQUIRE(l > 0.0, "lambda values must be positive");
  DHOM_REQUIRE(cfg.tau_null > 0.0, "tau_null must be positive");
  DHOM_REQUIRE(cfg.quotient.n_samples >= 1, "n_samples must be positive");
  DHOM_REQUIRE(cfg.quotient.T > 0.0 && cfg.quotient.h > 0.0, "quotient T and h must be positive");
  DHOM_REQUIRE(cfg.quotient.delta > 0.0 && cfg.quotient.dtau > 0.0,
               "quotient delta and dtau must be positive");
  DHOM_REQUIRE(cfg.mc.n >= 1, "mc.n must be positive");
  return cfg;
}

Json config_to_json(const ScenarioConfig& cfg) {
  Json j;
  j["scenario"] = cfg.scenario;
  j["lattice"] = Json{{"d", cfg.d}, {"K", cfg.K}};
  Json dr;
  if (cfg.scenario == "irrational") dr["alpha"] = cfg.alpha;
  if (cfg.scenario == "custom") {
    Json comps = Json::array();
    for (const auto& ml : cfg.custom_drift) comps.push_back(mode_list_to_json(ml, cfg.d));
    dr["components"] = comps;
  }
  j["drift"] = dr;
  j["lambda_list"] = cfg.lambda_list;
  j["c_list"] = cfg.c_list;
  j["time_grid"] = cfg.time_grid;
  j["quotient"] = Json{{"n_samples", cfg.quotient.n_samples}, {"T", cfg.quotient.T},
                       {"h", cfg.quotient.h},                 {"delta", cfg.quotient.delta},
                       {"dtau", cfg.quotient.dtau},           {"label_res", cfg.quotient.label_res},
                       {"prune_cap", cfg.quotient.prune_cap}, {"eval_budget", cfg.quotient.eval_budget}};
  j["mc"] = Json{{"n", cfg.mc.n},
                 {"seed", cfg.mc.seed},
                 {"c_list", cfg.mc.c_list},
                 {"density_a", cfg.mc.density_a},
                 {"xi", cfg.mc.xi}};
  j["tau_null"] = cfg.tau_null;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string list_scenarios_text() {
  std::ostringstream os;
  os << "zero        d=2 K=4   b = 0; flow = identity; quotient = M itself (torus metric)\n"
     << "irrational  d=2 K=4   b = (1, alpha); orbits dense; quotient = single point\n"
     << "example3    d=3 K=4   b = (0, sin x1, cos x1); flow (x1, x2 + t sin x1, x3 + t cos x1);"
        " quotient = circle in x1\n"
     << "cellular2d  d=2 K=8   b = (sin x2, -sin x1); invariants are functions of"
        " H = cos x1 + cos x2\n"
     << "custom      user-supplied divergence-free trigonometric drift components\n";
  return os.str();
}

Trajectory Scenario::trajectory_from(const std::array<double, 3>& x0, double T) const {
  if (has_exact_flow) return Trajectory::closed_form(cfg.d, x0, flow, T);
  return Trajectory::sampled(drift, x0, T, cfg.quotient.h);
}

Scenario make_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.cfg = cfg;
  sc.lat = ModeLattice(cfg.d, cfg.K);

  if (cfg.scenario == "zero") {
    sc.drift = drift_zero(cfg.d);
    sc.has_exact_flow = true;
    sc.flow = [](const double* x0, double, double* out) {
      for (int j = 0; j < 3; ++j) out[j] = x0[j];
    };
    sc.flow_note = "identity flow";
  } else if (cfg.scenario == "irrational") {
    DHOM_REQUIRE(cfg.d == 2, "irrational drift lives on the 2-torus");
    const double alpha = cfg.alpha;
    DHOM_REQUIRE(std::isfinite(alpha), "alpha must be finite");
    sc.drift = drift_irrational(alpha);
    sc.has_exact_flow = true;
    sc.flow = [alpha](const double* x0, double t, double* out) {
      out[0] = x0[0] + t;
      out[1] = x0[1] + alpha * t;
      out[2] = x0[2];
    };
    sc.flow_note = "translation flow x + t (1, alpha)";
  } else if (cfg.scenario == "example3") {
    DHOM_REQUIRE(cfg.d == 3, "this drift lives on the 3-torus");
    sc.drift = drift_example3();
    sc.has_exact_flow = true;
    sc.flow = [](const double* x0, double t, double* out) {
      out[0] = x0[0];
      out[1] = x0[1] + t * std::sin(x0[0]);
      out[2] = x0[2] + t * std::cos(x0[0]);
    };
    sc.flow_note = "shear flow (x1, x2 + t sin x1, x3 + t cos x1)";
  } else if (cfg.scenario == "cellular2d") {
    DHOM_REQUIRE(cfg.d == 2, "cellular drift lives on the 2-torus");
    DHOM_REQUIRE(cfg.K >= 2, "cellular probes need K >= 2");
    sc.drift = drift_cellular2d();
    sc.has_exact_flow = false;
    sc.flow_note = "no closed form; RK4 orbits";
    sc.hint = [](const double* x) { return std::cos(x[0]) + std::cos(x[1]); };
    sc.hint_lip = 1.4142135623730951;
  } else if (cfg.scenario == "custom") {
    DHOM_REQUIRE(!cfg.custom_drift.empty(), "custom scenario needs drift components");
    sc.drift = TrigVectorField(cfg.d, cfg.custom_drift);
    sc.has_exact_flow = false;
    sc.flow_note = "no closed form; RK4 orbits";
  } else {
    DHOM_REQUIRE(false, "unknown scenario '" + cfg.scenario + "'");
  }

  const bool d2 = cfg.d >= 2;
  if (cfg.scenario == "example3") {
    sc.resolvent_probe = make_cos(sc.lat, 1);
    sc.semigroup_probe = make_cos(sc.lat, 0);
    sc.projection_probe = make_cos(sc.lat, 0) + make_cos(sc.lat, 1);
    sc.algebra_f = make_cos(sc.lat, 0);
    sc.algebra_h = make_sin(sc.lat, 0);
    sc.mc_observable = make_cos(sc.lat, 0);
  } else if (cfg.scenario == "cellular2d") {
    sc.resolvent_probe = make_cos(sc.lat, 0);
    sc.semigroup_probe = make_h_squared(sc.lat);
    sc.projection_probe = make_h_squared(sc.lat);
    sc.algebra_f = make_h(sc.lat);
    sc.algebra_h = make_h_squared(sc.lat);
    sc.mc_observable = make_h_squared(sc.lat);
  } else if (cfg.scenario == "zero") {
    sc.resolvent_probe = make_cos(sc.lat, 0);
    sc.semigroup_probe = make_cos(sc.lat, 0);
    sc.projection_probe = make_cos(sc.lat, 0);
    sc.algebra_f = make_cos(sc.lat, 0);
    sc.algebra_h = d2 ? make_sin(sc.lat, 0) : make_cos(sc.lat, 0);
    sc.mc_observable = make_cos(sc.lat, 0);
  } else {
    // irrational and custom: only the constants are certain to be invariant.
    sc.resolvent_probe = make_cos(sc.lat, 0);
    sc.semigroup_probe = make_one(sc.lat);
    sc.projection_probe = make_one(sc.lat);
    sc.algebra_f = make_one(sc.lat);
    sc.algebra_h = make_one(sc.lat);
    sc.mc_observable = make_one(sc.lat);
  }
  return sc;
}

}  // namespace dhom

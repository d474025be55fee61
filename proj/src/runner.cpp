#include "dhom/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>

#include "dhom/io.hpp"
#include "dhom/limit_process.hpp"
#include "dhom/quotient.hpp"
#include "dhom/resolvent.hpp"
#include "dhom/version.hpp"

namespace dhom {

namespace {

struct RunState {
  ScenarioConfig cfg;
  Scenario scen;
  std::uint64_t hash = 0;
  std::optional<AssembledOperators> ops;
  std::optional<KernelBasis> basis;
  std::optional<ModeDecomposition> md;
  std::optional<LimitGenerator> gen;

  double lambda_star() const {
    for (double v : cfg.lambda_list)
      if (v == 1.0) return 1.0;
    return cfg.lambda_list.empty() ? 1.0 : cfg.lambda_list.front();
  }

  void ensure_basis() {
    if (!basis) basis.emplace(kernel_basis(*ops, lambda_star(), cfg.tau_null));
  }
  void ensure_md() {
    ensure_basis();
    if (!md) md.emplace(mode_decomposition(*ops, *basis, lambda_star()));
  }

  std::string path_of(const std::string& base) const { return cfg.output_dir + "/" + base; }

  void emit_json(StageResult& st, const std::string& base, const Json& j) {
    const std::string p = path_of(base);
    write_json(p, j);
    write_sidecar(p, hash);
    st.artifacts.push_back(base);
  }
  void emit_csv(StageResult& st, const std::string& base, const CsvTable& table) {
    const std::string p = path_of(base);
    write_csv(p, table);
    write_sidecar(p, hash);
    st.artifacts.push_back(base);
  }
};

void check(StageResult& st, bool cond, const std::string& msg) {
  if (!cond) st.failures.push_back(msg);
}

// t = 0.5 when the grid offers it, otherwise the middle positive grid time.
double pick_time(const std::vector<double>& grid) {
  std::vector<double> pos;
  for (double t : grid)
    if (t > 0.0) pos.push_back(t);
  if (pos.empty()) return 0.5;
  for (double t : pos)
    if (t == 0.5) return t;
  std::sort(pos.begin(), pos.end());
  return pos[pos.size() / 2];
}

SpectralField markov_probe(const ModeLattice& lat) {
  // (1 + cos x1)/2: range [0,1] with both endpoints attained.
  return SpectralField::from_modes(
      lat, {{Mode{0, 0, 0}, Complex(0.5, 0.0)},
            {Mode{1, 0, 0}, Complex(0.25, 0.0)},
            {Mode{-1, 0, 0}, Complex(0.25, 0.0)}});
}

void stage_assemble(RunState& s, StageResult& st) {
  s.ops.emplace(assemble_operators(s.scen.drift, s.scen.lat));
  const AssembledOperators& ops = *s.ops;

  Json j;
  j["scenario"] = s.cfg.scenario;
  j["d"] = ops.lat.d();
  j["K"] = ops.lat.K();
  j["modes"] = ops.lat.size();
  j["modes_extended"] = ops.lat_ext.size();
  j["drift_terms"] = s.scen.drift.Kb();
  j["drift_sup"] = ops.drift_sup;
  j["drift_is_zero"] = s.scen.drift.is_zero();
  j["divergence_defect"] = ops.divergence_defect;
  j["antisymmetry_defect"] = ops.antisym_defect;
  j["flow"] = s.scen.flow_note;
  s.emit_json(st, s.cfg.scenario + "_assemble_report.json", j);

  check(st, ops.antisym_defect <= 1e-10, "drift operator is not antisymmetric");
  check(st, ops.divergence_defect <= 1e-10, "drift field is not divergence free");
}

void stage_resolvent(RunState& s, StageResult& st) {
  const AssembledOperators& ops = *s.ops;
  s.ensure_md();
  const KernelBasis& basis = *s.basis;
  const ModeDecomposition& md = *s.md;
  const double ls = s.lambda_star();

  Json j;
  j["scenario"] = s.cfg.scenario;
  j["lambda"] = ls;
  j["tau_null"] = s.cfg.tau_null;
  j["kernel"] = Json{{"dim", basis.dim()},
                     {"sigma_max", basis.sigma_max},
                     {"sigma_min_kept", basis.sigma_min_kept},
                     {"sigma_max_dropped", basis.sigma_max_dropped},
                     {"ambiguous", basis.ambiguous}};
  check(st, !basis.ambiguous, "kernel cut is ambiguous: tau_null sits near a singular value");

  // Projection and spectral constructions must agree on generic data.
  double route_defect = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SpectralField g = random_field(ops.lat, 4242, i);
    const SpectralField a = limit_resolvent(ops, basis, ls, g, LimitRoute::projection);
    const SpectralField b = limit_resolvent(ops, basis, ls, g, LimitRoute::spectral, &md);
    const SpectralField diff = a - b;
    route_defect = std::max(route_defect, std::sqrt(inner_h1_lambda(diff, diff, ls)));
  }
  j["route_agreement"] = Json{{"fields", 10}, {"max_defect", route_defect}, {"tol", 1e-6}};
  check(st, route_defect <= 1e-6, "limit resolvent routes disagree");

  const std::vector<double> mode_cs{0.0, 1.0, 10.0, 100.0};
  double formula_defect = 0.0;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const SpectralField g = random_field(ops.lat, 515, i);
    for (double c : mode_cs) {
      const SpectralField diff =
          finite_c_mode_formula(ops, md, c, g) - solve_resolvent(ops, c, ls, g);
      formula_defect = std::max(formula_defect, norm_l2(diff));
    }
  }
  j["mode_formula"] = Json{
      {"fields", 5}, {"c_list", mode_cs}, {"max_defect", formula_defect}, {"tol", 1e-8}};
  check(st, formula_defect <= 1e-8, "mode expansion disagrees with the direct solve");

  double l1 = ls, l2 = 2.0 * ls;
  for (double v : s.cfg.lambda_list)
    if (v != ls) {
      l2 = v;
      break;
    }
  const SpectralField g01 = markov_probe(ops.lat);
  std::vector<SpectralField> probes{s.scen.resolvent_probe, s.scen.semigroup_probe,
                                    random_field(ops.lat, 99, 0), random_field(ops.lat, 99, 1)};
  Json props = Json::array();
  for (auto [la, mu] : {std::pair{l1, l2}, std::pair{l2, l1}}) {
    const LimitPropertyReport r = verify_limit_properties(ops, basis, la, mu, g01, probes, 32);
    props.push_back(Json{{"lambda", la},
                         {"mu", mu},
                         {"pseudo_resolvent_defect", r.pseudo_resolvent_defect},
                         {"selfadjoint_defect", r.selfadjoint_defect},
                         {"contraction_margin", r.contraction_margin},
                         {"markov_min", r.markov_min},
                         {"markov_max", r.markov_max},
                         {"kernel_orth_norm", r.kernel_orth_norm}});
    check(st, r.pseudo_resolvent_defect <= 1e-8, "resolvent identity fails");
    check(st, r.selfadjoint_defect <= 1e-10, "limit resolvent is not self adjoint");
    check(st, r.contraction_margin <= 1e-10, "limit resolvent is not a contraction");
    check(st, r.markov_min >= -1e-8 && r.markov_max <= 1.0 + 1e-8,
          "limit resolvent breaks the [0,1] range");
    check(st, r.kernel_orth_norm <= 1e-10, "limit resolvent does not vanish off the kernel");
  }
  j["properties"] = props;

  const double mindef = minimizer_check(ops, basis, ls, s.scen.resolvent_probe);
  j["minimizer_defect"] = mindef;
  check(st, mindef <= 1e-10, "weighted projection is not the variational minimizer");

  const std::vector<double> cont_lambdas{1.0, 10.0, 100.0, 1000.0};
  Json cont = Json::array();
  for (const ContinuityRow& r :
       strong_continuity_curve(ops, basis, s.scen.semigroup_probe, cont_lambdas))
    cont.push_back(
        Json{{"lambda", r.lambda}, {"dist_H", r.dist_H}, {"dist_H1lambda", r.dist_H1lambda}});
  j["continuity"] = cont;

  Json slopes = Json::array();
  for (double lambda : s.cfg.lambda_list) {
    const ConvergenceCurve curve =
        convergence_curve(ops, basis, lambda, s.scen.resolvent_probe, s.cfg.c_list);
    CsvTable table;
    table.header = {"c", "dist_H", "dist_H1"};
    for (const ConvergenceRow& r : curve.rows) table.rows.push_back({r.c, r.dist_H, r.dist_H1});
    std::string base = s.cfg.scenario + "_resolvent_convergence";
    if (lambda != ls) base += "_lambda" + format_double(lambda);
    s.emit_csv(st, base + ".csv", table);
    slopes.push_back(Json{{"lambda", lambda}, {"fit_slope", curve.fit_slope}});
  }
  j["convergence_slopes"] = slopes;

  s.emit_json(st, s.cfg.scenario + "_resolvent_limit.json", j);
}

void stage_limit(RunState& s, StageResult& st) {
  s.ensure_basis();
  s.gen.emplace(limit_generator(*s.ops, *s.basis));
  const LimitGenerator& gen = *s.gen;

  const SpectralField one =
      SpectralField::from_modes(s.scen.lat, {{Mode{0, 0, 0}, Complex(1.0, 0.0)}});
  const SpectralField evolved = apply_limit_semigroup(gen, s.ops->rep, 1.0, one);
  const double const_defect = norm_l2(evolved - one);

  Json j;
  j["scenario"] = s.cfg.scenario;
  j["dim"] = gen.dim();
  j["sym_defect"] = gen.sym_defect;
  Json evals = Json::array();
  for (Eigen::Index i = 0; i < gen.evals.size(); ++i) evals.push_back(gen.evals[i]);
  j["eigenvalues"] = evals;
  j["constant_defect"] = const_defect;
  s.emit_json(st, s.cfg.scenario + "_limit_generator.json", j);

  check(st, std::abs(gen.evals[0]) <= 1e-8, "constants are not harmonic for the limit generator");
  check(st, const_defect <= 1e-8, "limit semigroup does not fix constants");
}

void stage_semigroup(RunState& s, StageResult& st) {
  const AssembledOperators& ops = *s.ops;
  const LimitGenerator& gen = *s.gen;
  const double t = pick_time(s.cfg.time_grid);

  const std::vector<SemigroupRow> rows =
      semigroup_convergence_curve(ops, gen, s.scen.semigroup_probe, t, s.cfg.c_list);
  CsvTable dist;
  dist.header = {"c", "t", "dist"};
  for (const SemigroupRow& r : rows) dist.rows.push_back({r.c, r.t, r.dist});
  s.emit_csv(st, s.cfg.scenario + "_semigroup_distance.csv", dist);

  if (rows.size() >= 2) {
    std::size_t imin = 0, imax = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].c < rows[imin].c) imin = i;
      if (rows[i].c > rows[imax].c) imax = i;
    }
    check(st, rows[imax].dist <= rows[imin].dist + 1e-9,
          "semigroup distance grows with the drift strength");
  }

  std::set<double> ls(s.cfg.lambda_list.begin(), s.cfg.lambda_list.end());
  ls.insert(1000.0);
  const std::vector<double> lambdas(ls.begin(), ls.end());
  const std::vector<DformRow> drows =
      dform_limit_curve(ops, *s.basis, gen, s.scen.semigroup_probe, s.scen.semigroup_probe,
                        lambdas);
  CsvTable dform;
  dform.header = {"lambda", "value", "target"};
  for (const DformRow& r : drows) dform.rows.push_back({r.lambda, r.value, r.target});
  s.emit_csv(st, s.cfg.scenario + "_semigroup_dform.csv", dform);

  const DformRow& last = drows.back();
  check(st, std::abs(last.value - last.target) <= 0.002 * (1.0 + std::abs(last.target)),
        "energy form approximation misses its target at large lambda");
}

void stage_quotient(RunState& s, StageResult& st) {
  const QuotientParams& q = s.cfg.quotient;
  const int d = s.cfg.d;

  GapSearchParams p;
  p.T = q.T;
  p.dtau = q.dtau;
  p.prune_cap = q.prune_cap;
  p.hint = s.scen.hint;
  p.hint_lip = s.scen.hint_lip;
  p.eval_budget = q.eval_budget;

  std::vector<Trajectory> nodes;
  nodes.reserve(static_cast<std::size_t>(q.n_samples));
  for (const auto& x0 : halton_points(d, q.n_samples))
    nodes.push_back(s.scen.trajectory_from(x0, q.T));
  const ChainGraph graph = build_chain_graph(std::move(nodes), p);

  const QuotientAtlas atlas = equivalence_classes(graph, q.delta);
  Json aj;
  aj["scenario"] = s.cfg.scenario;
  aj["delta"] = atlas.delta;
  aj["n_samples"] = q.n_samples;
  aj["T"] = q.T;
  aj["dtau"] = q.dtau;
  aj["n_classes"] = atlas.n_classes;
  aj["representatives"] = atlas.representative;
  aj["weights"] = atlas.weights;
  aj["class_of"] = atlas.class_of;
  s.emit_json(st, s.cfg.scenario + "_quotient_atlas.json", aj);

  const std::size_t m = std::min<std::size_t>(40, graph.nodes.size());
  CsvTable dists;
  dists.header = {"i", "j", "dist"};
  for (std::size_t i = 0; i < m; ++i) {
    const std::vector<double> row = chain_distances_from(graph, i);
    for (std::size_t jn = i + 1; jn < m; ++jn)
      dists.rows.push_back({static_cast<double>(i), static_cast<double>(jn), row[jn]});
  }
  s.emit_csv(st, s.cfg.scenario + "_quotient_distances.csv", dists);

  const int res = q.label_res > 0 ? q.label_res : (d <= 2 ? 512 : 128);
  const LabelGrid grid = build_label_grid(graph, atlas, res);

  s.ensure_basis();
  const InvariantProjection proj = project_invariant(s.scen.projection_probe, grid, atlas);
  const SpectralField pe = project_plain(s.scen.projection_probe, *s.basis, s.ops->rep);
  const double pi_pe = norm_l2(proj.field - pe);
  const AlgebraReport alg = isometry_and_algebra_check(s.scen.algebra_f, s.scen.algebra_h,
                                                       grid, atlas);

  Json pj;
  pj["scenario"] = s.cfg.scenario;
  pj["label_res"] = res;
  pj["fill_fraction"] = grid.fill_fraction;
  pj["n_classes"] = grid.n_classes;
  pj["pi_pe_defect"] = pi_pe;
  pj["class_values"] = proj.class_values;
  pj["isometry_defect"] = alg.isometry_defect;
  pj["product_defect"] = alg.product_defect;
  pj["lift_defect"] = alg.lift_defect;
  pj["max_class_variance"] = alg.max_class_variance;
  s.emit_json(st, s.cfg.scenario + "_quotient_projection.json", pj);

  check(st, grid.fill_fraction > 0.0, "no grid cell was labeled by the orbits");
}

void stage_simulate(RunState& s, StageResult& st) {
  const AssembledOperators& ops = *s.ops;
  const McParams& mc = s.cfg.mc;
  const double t = pick_time(s.cfg.time_grid);
  const SpectralField& f = s.scen.mc_observable;
  const double xi = mc.xi;
  const int grid_res = std::max(s.cfg.d == 3 ? 32 : 64, 4 * s.cfg.K + 4);

  SpectralField g_init = SpectralField::from_modes(
      ops.lat, {{Mode{0, 0, 0}, Complex(1.0, 0.0)},
                {Mode{1, 0, 0}, Complex(0.5 * mc.density_a, 0.0)},
                {Mode{-1, 0, 0}, Complex(0.5 * mc.density_a, 0.0)}});

  const SpectralCharFn lim = spectral_char_fn_limit(ops, *s.gen, t, f, xi, g_init, grid_res);

  Json j;
  j["scenario"] = s.cfg.scenario;
  j["t"] = t;
  j["xi"] = xi;
  j["n_paths"] = mc.n;
  j["seed"] = mc.seed;
  j["density_a"] = mc.density_a;
  j["limit"] = Json{{"re", lim.value.real()},
                    {"im", lim.value.imag()},
                    {"truncation_loss", lim.truncation_loss},
                    {"projection_defect", lim.projection_defect}};

  const std::vector<double> deltas{0.4, 0.2, 0.1, 0.05, 0.025};
  const double eps = 0.75;  // small enough to trigger, large enough to separate the windows
  CsvTable mod;
  mod.header = {"delta"};
  std::vector<std::vector<ModulusRow>> mod_rows;

  Json per_c = Json::array();
  for (double c : mc.c_list) {
    McConfig cfg;
    cfg.c = c;
    cfg.n_paths = mc.n;
    cfg.t_grid = s.cfg.time_grid;
    std::sort(cfg.t_grid.begin(), cfg.t_grid.end());
    if (!cfg.t_grid.empty() && cfg.t_grid.front() == 0.0)
      cfg.t_grid.erase(cfg.t_grid.begin());
    cfg.seed = mc.seed;
    cfg.init = InitKind::cosine_density;
    cfg.density_a = mc.density_a;
    cfg.dense_observable = &f;
    const PathEnsemble ens = simulate(s.scen.drift, s.scen.drift_flow(), cfg);

    const CharFnEstimate est = char_fn(ens, f, xi, t);
    const CharFnEstimate mean = mean_observable(ens, f, t);
    const Eigen::MatrixXd Tt = semigroup_matrix(ops, c, t);
    const SpectralCharFn spec = spectral_char_fn_finite(ops, Tt, f, xi, g_init, grid_res);

    const double gap = std::abs(est.value - spec.value);
    const double se = std::hypot(est.se_re, est.se_im);
    per_c.push_back(Json{{"c", c},
                         {"dt", ens.dt},
                         {"mc_re", est.value.real()},
                         {"mc_im", est.value.imag()},
                         {"se_re", est.se_re},
                         {"se_im", est.se_im},
                         {"spectral_re", spec.value.real()},
                         {"spectral_im", spec.value.imag()},
                         {"truncation_loss", spec.truncation_loss},
                         {"mean_obs", mean.value.real()},
                         {"mean_se", mean.se_re},
                         {"gap", gap}});
    check(st, gap <= 4.0 * se + 1e-6,
          "sample characteristic function disagrees with the spectral value at c=" +
              format_double(c));

    mod_rows.push_back(path_modulus_report(ens, eps, deltas));
    mod.header.push_back("prob_c" + format_double(c));
    mod.header.push_back("se_c" + format_double(c));
  }
  j["per_c"] = per_c;
  s.emit_json(st, s.cfg.scenario + "_simulate_charfn.json", j);

  for (std::size_t r = 0; r < deltas.size(); ++r) {
    std::vector<double> row{deltas[r]};
    for (const auto& col : mod_rows) {
      row.push_back(col[r].prob);
      row.push_back(col[r].se);
    }
    mod.rows.push_back(row);
  }
  s.emit_csv(st, s.cfg.scenario + "_simulate_modulus.csv", mod);

  for (const auto& col : mod_rows)
    for (std::size_t r = 1; r < col.size(); ++r)
      check(st, col[r].prob <= col[r - 1].prob + 1e-12,
            "oscillation probability must shrink with the window");
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"assemble", "resolvent", "limit",
                                              "semigroup", "quotient", "simulate"};
  return names;
}

Json report_to_json(const RunReport& rep, bool include_timings) {
  Json j;
  j["version"] = kVersion;
  j["config"] = config_to_json(rep.cfg);
  j["config_hash"] = rep.config_hash;
  Json stages = Json::array();
  for (const StageResult& st : rep.stages) {
    Json sj;
    sj["name"] = st.name;
    sj["ran"] = st.ran;
    sj["ok"] = st.ok;
    if (include_timings) sj["seconds"] = st.seconds;
    sj["artifacts"] = st.artifacts;
    sj["failures"] = st.failures;
    stages.push_back(sj);
  }
  j["stages"] = stages;
  j["all_ok"] = rep.all_ok;
  return j;
}

RunReport run_experiment(const ScenarioConfig& cfg, const std::vector<std::string>& stages) {
  const std::vector<std::string>& names = stage_names();
  std::set<std::string> want(stages.begin(), stages.end());
  for (const std::string& s : want)
    DHOM_REQUIRE(std::find(names.begin(), names.end(), s) != names.end(),
                 "unknown stage: " + s);
  if (want.empty()) want.insert(names.begin(), names.end());

  const std::vector<std::pair<std::string, std::vector<std::string>>> deps{
      {"assemble", {}},
      {"resolvent", {"assemble"}},
      {"limit", {"assemble"}},
      {"semigroup", {"assemble", "limit"}},
      {"quotient", {"assemble"}},
      {"simulate", {"assemble", "limit"}}};
  for (const auto& [name, reqs] : deps)
    if (want.count(name))
      for (const std::string& r : reqs)
        DHOM_REQUIRE(want.count(r), "stage " + name + " needs stage " + r + " in the same run");

  RunState state;
  state.cfg = cfg;
  state.scen = make_scenario(cfg);
  // The hash identifies the numeric experiment; where the artifacts land is
  // not part of it.
  Json hashed = config_to_json(cfg);
  hashed.erase("output_dir");
  state.hash = fnv1a(hashed.dump());
  std::filesystem::create_directories(cfg.output_dir);

  RunReport rep;
  rep.cfg = cfg;
  rep.config_hash = state.hash;

  std::set<std::string> failed;
  for (const std::string& name : names) {
    if (!want.count(name)) continue;
    StageResult st;
    st.name = name;

    bool blocked = false;
    for (const auto& [dn, reqs] : deps)
      if (dn == name)
        for (const std::string& r : reqs)
          if (failed.count(r)) blocked = true;
    if (blocked) {
      st.failures.push_back("skipped: dependency failed");
      failed.insert(name);
      rep.stages.push_back(st);
      continue;
    }

    const auto start = std::chrono::steady_clock::now();
    st.ran = true;
    try {
      if (name == "assemble") stage_assemble(state, st);
      else if (name == "resolvent") stage_resolvent(state, st);
      else if (name == "limit") stage_limit(state, st);
      else if (name == "semigroup") stage_semigroup(state, st);
      else if (name == "quotient") stage_quotient(state, st);
      else if (name == "simulate") stage_simulate(state, st);
    } catch (const std::exception& e) {
      st.failures.push_back(e.what());
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    st.ok = st.failures.empty();
    if (!st.ok) failed.insert(name);
    rep.stages.push_back(st);
  }

  rep.all_ok = true;
  for (const StageResult& st : rep.stages) rep.all_ok = rep.all_ok && st.ok;

  rep.report_path = state.path_of(cfg.scenario + "_run_report.json");
  write_json(rep.report_path, report_to_json(rep, true));
  write_sidecar(rep.report_path, state.hash);
  return rep;
}

}  // namespace dhom

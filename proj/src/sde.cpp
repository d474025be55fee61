#include "dhom/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>

#include "dhom/parallel.hpp"
#include "dhom/rng.hpp"

namespace dhom {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Sparse direct evaluator; value_at scans the whole lattice, which is too
// slow for the per-step dense track.
struct SparseEval {
  struct Term {
    std::array<int, 3> k;
    double re, im;
  };
  double center = 0.0;
  std::vector<Term> half;  // positive half only; field is real
  int d = 0;

  explicit SparseEval(const SpectralField& f) {
    const ModeLattice& lat = f.lattice();
    d = lat.d();
    center = f.coeffs()[static_cast<Eigen::Index>(lat.center_index())].real();
    for (std::size_t idx = lat.center_index() + 1; idx < lat.size(); ++idx) {
      const Complex c = f.coeffs()[static_cast<Eigen::Index>(idx)];
      if (c == Complex(0.0, 0.0)) continue;
      const Mode k = lat.mode(idx);
      half.push_back({{k[0], k[1], k[2]}, c.real(), c.imag()});
    }
  }

  double operator()(const double* x) const {
    double acc = center;
    for (const Term& t : half) {
      double phase = 0.0;
      for (int j = 0; j < d; ++j) phase += t.k[static_cast<std::size_t>(j)] * x[j];
      acc += 2.0 * (t.re * std::cos(phase) - t.im * std::sin(phase));
    }
    return acc;
  }
};

// One RK4 step of xdot = b(x) over a signed duration.
void rk4_drift(const TrigVectorField& b, double h, double* x) {
  std::array<double, 3> k1{}, k2{}, k3{}, k4{}, tmp{};
  b.eval(x, k1.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
  b.eval(tmp.data(), k2.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
  b.eval(tmp.data(), k3.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + h * k3[j];
  b.eval(tmp.data(), k4.data());
  for (int j = 0; j < 3; ++j) x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

// Inverse CDF of (1 + a cos x)/(2 pi) on [0, 2 pi) by bisection (monotone for
// every |a| <= 1, including the degenerate endpoints).
double invert_cosine_cdf(double a, double u) {
  double lo = 0.0, hi = kTwoPi;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = (mid + a * std::sin(mid)) / kTwoPi;
    if (cdf < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::size_t locate_time(const PathEnsemble& ens, double t) {
  for (std::size_t i = 0; i < ens.t_grid.size(); ++i) {
    if (std::abs(ens.t_grid[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  }
  DHOM_REQUIRE(false, "requested time is not on the ensemble grid");
  return 0;
}

CharFnEstimate reduce_complex(const std::vector<double>& re, const std::vector<double>& im) {
  const std::size_t n = re.size();
  CharFnEstimate est;
  est.n = static_cast<long>(n);
  const double mr = pairwise_sum(re.data(), n) / static_cast<double>(n);
  const double mi = pairwise_sum(im.data(), n) / static_cast<double>(n);
  est.value = {mr, mi};
  if (n > 1) {
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = (re[i] - mr) * (re[i] - mr);
    est.se_re = std::sqrt(pairwise_sum(dev.data(), n) / (static_cast<double>(n) * (n - 1.0)));
    for (std::size_t i = 0; i < n; ++i) dev[i] = (im[i] - mi) * (im[i] - mi);
    est.se_im = std::sqrt(pairwise_sum(dev.data(), n) / (static_cast<double>(n) * (n - 1.0)));
  }
  return est;
}

// Splits exp(i xi f) into lattice-truncated cos/sin parts and checks that the
// unit pointwise modulus survives the truncation.
void char_fn_fields(const SpectralField& f, double xi, int grid_res, const ModeLattice& lat,
                    SpectralField& c_part, SpectralField& s_part, double& loss) {
  DHOM_REQUIRE(grid_res >= lat.side(), "grid resolution must be at least 2K+1");
  const GridField fg = eval_on_grid(f, grid_res);
  GridField cg, sg;
  cg.d = sg.d = fg.d;
  cg.res = sg.res = fg.res;
  cg.values.resize(fg.values.size());
  sg.values.resize(fg.values.size());
  for (Eigen::Index i = 0; i < fg.values.size(); ++i) {
    cg.values[i] = std::cos(xi * fg.values[i]);
    sg.values[i] = std::sin(xi * fg.values[i]);
  }
  c_part = field_from_grid(cg, lat);
  s_part = field_from_grid(sg, lat);
  loss = 1.0 - c_part.coeffs().squaredNorm() - s_part.coeffs().squaredNorm();
  DHOM_CHECK(std::abs(loss) <= 1e-6,
             "characteristic-function split loses too much energy on the lattice");
}

}  // namespace

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

PathEnsemble simulate(const TrigVectorField& b, const FlowFn* drift_flow, const McConfig& cfg) {
  DHOM_REQUIRE(cfg.n_paths >= 1, "need at least one path");
  DHOM_REQUIRE(!cfg.t_grid.empty(), "empty time grid");
  DHOM_REQUIRE(cfg.t_grid.front() >= 0.0, "negative time");
  for (std::size_t i = 1; i < cfg.t_grid.size(); ++i) {
    DHOM_REQUIRE(cfg.t_grid[i] > cfg.t_grid[i - 1], "time grid must be strictly increasing");
  }
  DHOM_REQUIRE(cfg.dt0 > 0.0 && cfg.theta > 0.0, "step parameters must be positive");
  DHOM_REQUIRE(std::abs(cfg.density_a) <= 1.0, "density amplitude must satisfy |a| <= 1");

  const int d = b.d();
  const double bmax = b.sup_bound();
  double dt = cfg.dt0;
  if (cfg.c != 0.0 && bmax > 0.0) dt = std::min(dt, cfg.theta / (std::abs(cfg.c) * bmax));

  PathEnsemble ens;
  ens.d = d;
  ens.c = cfg.c;
  ens.seed = cfg.seed;
  ens.dt = dt;
  ens.n_paths = cfg.n_paths;
  ens.t_grid = cfg.t_grid;
  ens.step_of.resize(cfg.t_grid.size());

  // Substep schedule: equal steps <= dt inside each grid interval, landing on
  // the grid times exactly.
  std::vector<double> step_h;
  double prev = 0.0;
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    const double t = cfg.t_grid[i];
    if (t == 0.0) {
      ens.step_of[i] = 0;
      continue;
    }
    const long steps = std::max<long>(1, static_cast<long>(std::ceil((t - prev) / dt - 1e-9)));
    const double h = (t - prev) / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) step_h.push_back(h);
    ens.step_of[i] = static_cast<long>(step_h.size());
    prev = t;
  }
  const long total_steps = static_cast<long>(step_h.size());

  const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
  ens.states.assign(cfg.t_grid.size(), Eigen::MatrixXd(cfg.n_paths, d));
  ens.unwrapped.assign(cfg.t_grid.size(), Eigen::MatrixXd(cfg.n_paths, d));
  std::optional<SparseEval> dense_eval;
  if (cfg.dense_observable != nullptr) {
    dense_eval.emplace(*cfg.dense_observable);
    ens.dense_len = total_steps + 1;
    ens.dense.assign(n * static_cast<std::size_t>(ens.dense_len), 0.0f);
  }

  const CounterRng rng{cfg.seed};
  parallel_for(n, [&](std::size_t p) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    switch (cfg.init) {
      case InitKind::uniform:
        for (int j = 0; j < d; ++j) {
          x[static_cast<std::size_t>(j)] =
              kTwoPi * rng.uniform01(p, 0, static_cast<std::uint32_t>(j), 2);
        }
        break;
      case InitKind::cosine_density:
        x[0] = invert_cosine_cdf(cfg.density_a, rng.uniform01(p, 0, 0, 2));
        for (int j = 1; j < d; ++j) {
          x[static_cast<std::size_t>(j)] =
              kTwoPi * rng.uniform01(p, 0, static_cast<std::uint32_t>(j), 2);
        }
        break;
      case InitKind::point:
        x = cfg.x0;
        break;
    }

    float* dense_row =
        dense_eval ? &ens.dense[p * static_cast<std::size_t>(ens.dense_len)] : nullptr;
    if (dense_row != nullptr) dense_row[0] = static_cast<float>((*dense_eval)(x.data()));

    std::size_t gi = 0;
    auto record = [&](long step) {
      while (gi < ens.step_of.size() && ens.step_of[gi] == step) {
        for (int j = 0; j < d; ++j) {
          const double v = x[static_cast<std::size_t>(j)];
          ens.unwrapped[gi](static_cast<Eigen::Index>(p), j) = v;
          ens.states[gi](static_cast<Eigen::Index>(p), j) = wrap_2pi(v);
        }
        ++gi;
      }
    };
    record(0);

    for (long s = 0; s < total_steps; ++s) {
      const double h = step_h[static_cast<std::size_t>(s)];
      const double half_time = 0.5 * cfg.c * h;
      if (drift_flow != nullptr && *drift_flow) {
        std::array<double, 3> out{};
        (*drift_flow)(x.data(), half_time, out.data());
        x = out;
      } else {
        rk4_drift(b, half_time, x.data());
      }
      const double kick = std::sqrt(2.0 * h);
      for (int j = 0; j < d; ++j) {
        x[static_cast<std::size_t>(j)] +=
            kick * rng.gaussian(p, static_cast<std::uint64_t>(s), static_cast<std::uint32_t>(j));
      }
      if (drift_flow != nullptr && *drift_flow) {
        std::array<double, 3> out{};
        (*drift_flow)(x.data(), half_time, out.data());
        x = out;
      } else {
        rk4_drift(b, half_time, x.data());
      }
      if (dense_row != nullptr) {
        dense_row[s + 1] = static_cast<float>((*dense_eval)(x.data()));
      }
      record(s + 1);
    }
  });
  return ens;
}

void write_ensemble_binary(const PathEnsemble& ens, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  DHOM_CHECK(os.good(), "cannot open ensemble output file");
  const char magic[8] = {'D', 'H', 'O', 'M', 'E', 'N', 'S', '1'};
  os.write(magic, 8);
  auto put = [&os](const void* p, std::size_t len) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
  };
  const std::int32_t d = ens.d;
  const std::int64_t n = ens.n_paths;
  const std::int32_t nt = static_cast<std::int32_t>(ens.t_grid.size());
  put(&d, 4);
  put(&n, 8);
  put(&nt, 4);
  put(&ens.c, 8);
  put(&ens.seed, 8);
  put(&ens.dt, 8);
  for (std::size_t i = 0; i < ens.t_grid.size(); ++i) {
    put(&ens.t_grid[i], 8);
    for (Eigen::Index p = 0; p < ens.states[i].rows(); ++p) {
      for (int j = 0; j < ens.d; ++j) {
        const double v = ens.states[i](p, j);
        put(&v, 8);
      }
    }
  }
  DHOM_CHECK(os.good(), "ensemble write failed");
}

CharFnEstimate char_fn(const PathEnsemble& ens, const SpectralField& f, double xi, double t) {
  const std::size_t ti = locate_time(ens, t);
  const std::size_t n = static_cast<std::size_t>(ens.n_paths);
  const SparseEval ev(f);
  std::vector<double> re(n), im(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int j = 0; j < ens.d; ++j) x[static_cast<std::size_t>(j)] = ens.states[ti](static_cast<Eigen::Index>(p), j);
    const double v = xi * ev(x.data());
    re[p] = std::cos(v);
    im[p] = std::sin(v);
  }
  return reduce_complex(re, im);
}

CharFnEstimate two_time_char_fn(const PathEnsemble& ens, const SpectralField& f, double xi1,
                                double t1, double xi2, double t2) {
  const std::size_t i1 = locate_time(ens, t1);
  const std::size_t i2 = locate_time(ens, t2);
  const std::size_t n = static_cast<std::size_t>(ens.n_paths);
  const SparseEval ev(f);
  std::vector<double> re(n), im(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::array<double, 3> x1{0.0, 0.0, 0.0}, x2{0.0, 0.0, 0.0};
    for (int j = 0; j < ens.d; ++j) {
      x1[static_cast<std::size_t>(j)] = ens.states[i1](static_cast<Eigen::Index>(p), j);
      x2[static_cast<std::size_t>(j)] = ens.states[i2](static_cast<Eigen::Index>(p), j);
    }
    const double v = xi1 * ev(x1.data()) + xi2 * ev(x2.data());
    re[p] = std::cos(v);
    im[p] = std::sin(v);
  }
  return reduce_complex(re, im);
}

CharFnEstimate mean_observable(const PathEnsemble& ens, const SpectralField& f, double t) {
  const std::size_t ti = locate_time(ens, t);
  const std::size_t n = static_cast<std::size_t>(ens.n_paths);
  const SparseEval ev(f);
  std::vector<double> vals(n), zer(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int j = 0; j < ens.d; ++j) x[static_cast<std::size_t>(j)] = ens.states[ti](static_cast<Eigen::Index>(p), j);
    vals[p] = ev(x.data());
  }
  return reduce_complex(vals, zer);
}

SpectralCharFn spectral_char_fn_finite(const AssembledOperators& ops, const Eigen::MatrixXd& Tt,
                                       const SpectralField& f, double xi,
                                       const SpectralField& g_init, int grid_res) {
  DHOM_REQUIRE(g_init.lattice() == ops.lat, "initial density lattice mismatch");
  SpectralField c_part, s_part;
  SpectralCharFn out;
  char_fn_fields(f, xi, grid_res, ops.lat, c_part, s_part, out.truncation_loss);
  const SpectralField ec = apply_semigroup_matrix(ops, Tt, c_part);
  const SpectralField es = apply_semigroup_matrix(ops, Tt, s_part);
  out.value = {inner(ec, g_init), inner(es, g_init)};
  return out;
}

SpectralCharFn spectral_char_fn_limit(const AssembledOperators& ops, const LimitGenerator& gen,
                                      double t, const SpectralField& f, double xi,
                                      const SpectralField& g_init, int grid_res) {
  DHOM_REQUIRE(g_init.lattice() == ops.lat, "initial density lattice mismatch");
  SpectralField c_part, s_part;
  SpectralCharFn out;
  char_fn_fields(f, xi, grid_res, ops.lat, c_part, s_part, out.truncation_loss);
  double dc = 0.0, ds = 0.0;
  const SpectralField ec = project_then_evolve(gen, ops.rep, t, c_part, &dc);
  const SpectralField es = project_then_evolve(gen, ops.rep, t, s_part, &ds);
  out.projection_defect = std::max(dc, ds);
  out.value = {inner(ec, g_init), inner(es, g_init)};
  return out;
}

std::vector<ModulusRow> path_modulus_report(const PathEnsemble& ens, double eps,
                                            const std::vector<double>& deltas) {
  DHOM_REQUIRE(ens.dense_len > 1, "ensemble has no dense observable track");
  DHOM_REQUIRE(eps > 0.0, "threshold must be positive");
  const std::size_t n = static_cast<std::size_t>(ens.n_paths);
  const std::size_t len = static_cast<std::size_t>(ens.dense_len);

  std::vector<ModulusRow> rows;
  rows.reserve(deltas.size());
  std::vector<std::size_t> bmax(len), bmin(len);  // monotone deques, reused per path
  for (double delta : deltas) {
    DHOM_REQUIRE(delta > 0.0, "delta must be positive");
    const std::size_t w =
        static_cast<std::size_t>(std::max<long>(1, std::lround(delta / ens.dt)));
    std::size_t hits = 0;
    for (std::size_t p = 0; p < n; ++p) {
      const float* v = &ens.dense[p * len];
      bool hit = false;
      std::size_t head_max = 0, tail_max = 0, head_min = 0, tail_min = 0;
      for (std::size_t i = 0; i < len && !hit; ++i) {
        while (tail_max > head_max && v[bmax[tail_max - 1]] <= v[i]) --tail_max;
        bmax[tail_max++] = i;
        while (tail_min > head_min && v[bmin[tail_min - 1]] >= v[i]) --tail_min;
        bmin[tail_min++] = i;
        const std::size_t lo = i >= w ? i - w : 0;
        while (bmax[head_max] < lo) ++head_max;
        while (bmin[head_min] < lo) ++head_min;
        if (static_cast<double>(v[bmax[head_max]]) - static_cast<double>(v[bmin[head_min]]) >=
            eps) {
          hit = true;
        }
      }
      if (hit) ++hits;
    }
    const double prob = static_cast<double>(hits) / static_cast<double>(n);
    rows.push_back(
        {delta, prob, std::sqrt(std::max(prob * (1.0 - prob), 0.0) / static_cast<double>(n))});
  }
  return rows;
}

}  // namespace dhom

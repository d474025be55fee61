#include "dhom/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "dhom/parallel.hpp"

namespace dhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;

double halton_scalar(long i, int base) {
  double f = 1.0, r = 0.0;
  for (long n = i; n > 0; n /= base) {
    f /= base;
    r += f * static_cast<double>(n % base);
  }
  return r;
}

double point_gap(const std::array<double, 3>& a, const std::array<double, 3>& b, int d) {
  return torus_distance(a.data(), b.data(), d);
}

struct Candidate {
  double dist;
  double t;
  double s;
};

// Best coarse pairs kept for refinement, with non-maximum suppression so the
// starts cover distinct valleys instead of one deep one.
class StartSet {
 public:
  StartSet(int cap, double sep) : cap_(cap), sep_(sep) {}

  void offer(double dist, double t, double s) {
    if (static_cast<int>(items_.size()) == cap_ && dist >= items_.back().dist) return;
    for (const Candidate& c : items_) {
      if (c.dist <= dist && std::abs(c.t - t) < sep_ && std::abs(c.s - s) < sep_) return;
    }
    items_.erase(std::remove_if(items_.begin(), items_.end(),
                                [&](const Candidate& c) {
                                  return c.dist > dist && std::abs(c.t - t) < sep_ &&
                                         std::abs(c.s - s) < sep_;
                                }),
                 items_.end());
    auto pos = std::lower_bound(items_.begin(), items_.end(), dist,
                                [](const Candidate& c, double v) { return c.dist < v; });
    items_.insert(pos, Candidate{dist, t, s});
    if (static_cast<int>(items_.size()) > cap_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  int cap_;
  double sep_;
  std::vector<Candidate> items_;
};

// Compass search on (t,s) in [-T,T]^2 starting from a coarse minimum.
double refine_gap(const Trajectory& x, const Trajectory& y, int d, double T, double step0,
                  int iters, double t, double s, double best) {
  double st = step0;
  std::array<double, 3> ax = x.at(t);
  std::array<double, 3> by = y.at(s);
  for (int it = 0; it < iters && st > 1e-9; ++it) {
    const double tp = std::min(t + st, T), tm = std::max(t - st, -T);
    const double sp = std::min(s + st, T), sm = std::max(s - st, -T);
    const std::array<double, 3> xp = x.at(tp), xm = x.at(tm);
    const std::array<double, 3> yp = y.at(sp), ym = y.at(sm);
    const double d0 = point_gap(xp, by, d);
    const double d1 = point_gap(xm, by, d);
    const double d2 = point_gap(ax, yp, d);
    const double d3 = point_gap(ax, ym, d);
    double md = d0;
    int mi = 0;
    if (d1 < md) { md = d1; mi = 1; }
    if (d2 < md) { md = d2; mi = 2; }
    if (d3 < md) { md = d3; mi = 3; }
    if (md < best) {
      best = md;
      switch (mi) {
        case 0: t = tp; ax = xp; break;
        case 1: t = tm; ax = xm; break;
        case 2: s = sp; by = yp; break;
        default: s = sm; by = ym; break;
      }
    } else {
      st *= 0.5;
    }
  }
  return best;
}

double edge_gap(const Trajectory& x, const Trajectory& y,
                const std::vector<std::array<double, 3>>& px,
                const std::vector<std::array<double, 3>>& py,
                const std::vector<double>& times, const GapSearchParams& p, int d) {
  double best = kInf;
  StartSet starts(p.refine_starts, 1.5 * p.dtau);
  const std::size_t m = times.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double dd = point_gap(px[i], py[j], d);
      if (dd < best) best = dd;
      starts.offer(dd, times[i], times[j]);
    }
  }
  const double T = std::min({p.T, x.horizon(), y.horizon()});
  for (const Candidate& c : starts.items()) {
    best = std::min(best, refine_gap(x, y, d, T, 0.5 * p.dtau, p.refine_iters, c.t, c.s, c.dist));
  }
  return best;
}

bool hint_prunes(const GapSearchParams& p, const Trajectory& a, const Trajectory& b) {
  if (p.prune_cap <= 0.0 || !p.hint) return false;
  DHOM_REQUIRE(p.hint_lip > 0.0, "hint Lipschitz bound must be positive");
  const double gap = std::abs(p.hint(a.origin().data()) - p.hint(b.origin().data()));
  return gap / p.hint_lip > p.prune_cap;
}

std::vector<std::array<double, 3>> sample_positions(const Trajectory& tr,
                                                    const std::vector<double>& times) {
  std::vector<std::array<double, 3>> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(tr.at(t));
  return out;
}

std::vector<double> dijkstra_dense(const Eigen::MatrixXd& w, std::size_t src) {
  const std::size_t n = static_cast<std::size_t>(w.rows());
  std::vector<double> dist(n, kInf);
  std::vector<char> done(n, 0);
  dist[src] = 0.0;
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t u = n;
    double du = kInf;
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v] && dist[v] < du) {
        du = dist[v];
        u = v;
      }
    }
    if (u == n) break;
    done[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v]) continue;
      const double nd = du + w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
      if (nd < dist[v]) dist[v] = nd;
    }
  }
  return dist;
}

std::size_t cell_of_point(const std::array<double, 3>& x, int d, int res) {
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) {
    int i = static_cast<int>(std::floor(x[static_cast<std::size_t>(j)] / kTwoPi * res));
    if (i < 0) i = 0;
    if (i >= res) i = res - 1;
    idx = idx * static_cast<std::size_t>(res) + static_cast<std::size_t>(i);
  }
  return idx;
}

}  // namespace

std::vector<std::array<double, 3>> halton_points(int d, int n) {
  DHOM_REQUIRE(d >= 1 && d <= 3, "dimension must be 1..3");
  DHOM_REQUIRE(n >= 1, "need at least one sample");
  static const int bases[3] = {2, 3, 5};
  std::vector<std::array<double, 3>> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = kTwoPi * halton_scalar(i + 1, bases[j]);
    pts[static_cast<std::size_t>(i)] = x;
  }
  return pts;
}

ChainGraph build_chain_graph(std::vector<Trajectory> nodes, const GapSearchParams& p) {
  const std::size_t n = nodes.size();
  DHOM_REQUIRE(n >= 1, "chain graph needs at least one node");
  DHOM_REQUIRE(p.T > 0.0 && p.dtau > 0.0, "window and grid spacing must be positive");
  const int d = nodes[0].d();
  for (const Trajectory& tr : nodes) {
    DHOM_REQUIRE(tr.d() == d, "mixed trajectory dimensions");
    DHOM_REQUIRE(tr.horizon() >= p.T - 1e-9, "trajectory horizon below the search window");
  }

  const long m = static_cast<long>(std::floor(p.T / p.dtau + 1e-9));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long k = -m; k <= m; ++k) times.push_back(static_cast<double>(k) * p.dtau);

  const long double projected = static_cast<long double>(n) * static_cast<long double>(n) *
                                static_cast<long double>(times.size()) *
                                static_cast<long double>(times.size());
  DHOM_REQUIRE(projected <= static_cast<long double>(p.eval_budget),
               "gap search budget exceeded: shrink n_samples or raise dtau");

  ChainGraph g;
  g.d = d;
  g.nodes = std::move(nodes);
  g.grid_times = times;
  g.params = p;
  g.positions.resize(n);
  parallel_for(n, [&](std::size_t i) { g.positions[i] = sample_positions(g.nodes[i], times); });

  g.w = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kInf);
  g.w.diagonal().setZero();

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) edges.emplace_back(u, v);

  parallel_for(edges.size(), [&](std::size_t e) {
    const auto [u, v] = edges[e];
    if (hint_prunes(p, g.nodes[u], g.nodes[v])) return;
    const double gap = edge_gap(g.nodes[u], g.nodes[v], g.positions[u], g.positions[v],
                                g.grid_times, p, d);
    g.w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = gap;
    g.w(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = gap;
  });
  return g;
}

std::vector<double> chain_distances_from(const ChainGraph& g, std::size_t src) {
  DHOM_REQUIRE(src < g.nodes.size(), "source index out of range");
  return dijkstra_dense(g.w, src);
}

double chain_distance(const ChainGraph& g, std::size_t i, std::size_t j) {
  DHOM_REQUIRE(j < g.nodes.size(), "target index out of range");
  return chain_distances_from(g, i)[j];
}

double quotient_distance(const ChainGraph& g, const Trajectory& a, const Trajectory& b) {
  const std::size_t n = g.nodes.size();
  DHOM_REQUIRE(a.d() == g.d && b.d() == g.d, "trajectory dimension mismatch");
  DHOM_REQUIRE(a.horizon() >= g.params.T - 1e-9 && b.horizon() >= g.params.T - 1e-9,
               "query trajectory horizon below the search window");
  const auto pa = sample_positions(a, g.grid_times);
  const auto pb = sample_positions(b, g.grid_times);

  Eigen::MatrixXd w2 = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n + 2),
                                                 static_cast<Eigen::Index>(n + 2), kInf);
  w2.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = g.w;
  w2.diagonal().setZero();

  std::vector<double> ga(n, kInf), gb(n, kInf);
  parallel_for(n, [&](std::size_t v) {
    if (!hint_prunes(g.params, a, g.nodes[v])) {
      ga[v] = edge_gap(a, g.nodes[v], pa, g.positions[v], g.grid_times, g.params, g.d);
    }
    if (!hint_prunes(g.params, b, g.nodes[v])) {
      gb[v] = edge_gap(b, g.nodes[v], pb, g.positions[v], g.grid_times, g.params, g.d);
    }
  });
  for (std::size_t v = 0; v < n; ++v) {
    w2(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v)) = ga[v];
    w2(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(n)) = ga[v];
    w2(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(v)) = gb[v];
    w2(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(n + 1)) = gb[v];
  }
  double direct = kInf;
  if (!hint_prunes(g.params, a, b)) {
    direct = edge_gap(a, b, pa, pb, g.grid_times, g.params, g.d);
  }
  w2(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n + 1)) = direct;
  w2(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n)) = direct;

  return dijkstra_dense(w2, n)[n + 1];
}

QuotientAtlas equivalence_classes(const ChainGraph& g, double delta) {
  DHOM_REQUIRE(delta > 0.0, "delta must be positive");
  const std::size_t n = g.nodes.size();
  QuotientAtlas atlas;
  atlas.delta = delta;
  atlas.class_of.assign(n, -1);
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (atlas.class_of[seed] >= 0) continue;
    const int cid = atlas.n_classes++;
    atlas.representative.push_back(seed);
    const std::vector<double> dist = chain_distances_from(g, seed);
    std::size_t count = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (atlas.class_of[v] < 0 && dist[v] <= delta) {
        atlas.class_of[v] = cid;
        ++count;
      }
    }
    atlas.weights.push_back(static_cast<double>(count) / static_cast<double>(n));
  }
  return atlas;
}

LabelGrid build_label_grid(const ChainGraph& g, const QuotientAtlas& atlas, int res) {
  const std::size_t n = g.nodes.size();
  DHOM_REQUIRE(atlas.class_of.size() == n, "atlas does not match graph");
  DHOM_REQUIRE(res >= 8, "label grid resolution too small");
  const int d = g.d;
  std::size_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= static_cast<std::size_t>(res);

  LabelGrid grid;
  grid.d = d;
  grid.res = res;
  grid.n_classes = atlas.n_classes;
  grid.labels.assign(cells, -1);

  // Rasterize each orbit with adaptive arc-length marching.  A cell keeps the
  // label of the orbit point nearest its center, so a thin class cannot be
  // shadowed by a neighbor that happens to march first.
  const double cell = kTwoPi / res;
  const double half = 0.5 * cell, quarter = 0.25 * cell;
  const double T = g.params.T;
  std::size_t labeled = 0;
  std::vector<float> best(cells, std::numeric_limits<float>::infinity());
  for (std::size_t idx = 0; idx < n; ++idx) {
    const int cid = atlas.class_of[idx];
    const Trajectory& tr = g.nodes[idx];
    auto mark = [&](const std::array<double, 3>& x) {
      const std::size_t ci = cell_of_point(x, d, res);
      std::array<double, 3> ctr{0.0, 0.0, 0.0};
      std::size_t rem = ci;
      for (int j = d - 1; j >= 0; --j) {
        ctr[static_cast<std::size_t>(j)] =
            (static_cast<double>(rem % static_cast<std::size_t>(res)) + 0.5) * cell;
        rem /= static_cast<std::size_t>(res);
      }
      const double dist = point_gap(x, ctr, d);
      if (static_cast<float>(dist) < best[ci]) {
        if (grid.labels[ci] < 0) ++labeled;
        best[ci] = static_cast<float>(dist);
        grid.labels[ci] = cid;
      }
    };
    const double dt_max = g.params.dtau;
    const double dt_min = 1e-9 * T;
    double t = -T;
    std::array<double, 3> prev = tr.at(t);
    mark(prev);
    double dt = dt_max;
    while (t < T) {
      const double step = std::min(dt, T - t);
      const std::array<double, 3> cand = tr.at(t + step);
      const double move = point_gap(prev, cand, d);
      if (move > half && step > dt_min) {
        dt = 0.5 * step;
        continue;
      }
      t += step;
      prev = cand;
      mark(prev);
      if (move < quarter) dt = std::min(2.0 * step, dt_max);
    }
  }
  grid.fill_fraction = static_cast<double>(labeled) / static_cast<double>(cells);

  std::vector<std::size_t> class_cells(static_cast<std::size_t>(atlas.n_classes), 0);
  for (int L : grid.labels) {
    if (L >= 0) ++class_cells[static_cast<std::size_t>(L)];
  }
  for (int c = 0; c < atlas.n_classes; ++c) {
    DHOM_CHECK(class_cells[static_cast<std::size_t>(c)] > 0,
               "empty class: no grid cell was reached by its orbits");
  }

  // Multi-source BFS fill over the wrapped grid.
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < cells; ++i) {
    if (grid.labels[i] >= 0) q.push(i);
  }
  DHOM_CHECK(!q.empty(), "label grid has no seeds");
  std::vector<std::size_t> strides(static_cast<std::size_t>(d));
  {
    std::size_t s = 1;
    for (int j = d - 1; j >= 0; --j) {
      strides[static_cast<std::size_t>(j)] = s;
      s *= static_cast<std::size_t>(res);
    }
  }
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    const int L = grid.labels[i];
    for (int j = 0; j < d; ++j) {
      const std::size_t st = strides[static_cast<std::size_t>(j)];
      const std::size_t digit = (i / st) % static_cast<std::size_t>(res);
      for (int dir = -1; dir <= 1; dir += 2) {
        const std::size_t nd =
            (digit + static_cast<std::size_t>(res + dir)) % static_cast<std::size_t>(res);
        const std::size_t ni = i - digit * st + nd * st;
        if (grid.labels[ni] < 0) {
          grid.labels[ni] = L;
          q.push(ni);
        }
      }
    }
  }
  return grid;
}

namespace {

struct ClassStats {
  std::vector<double> sum_f, sum_h, sum_fh, sum_f2;
  std::vector<std::size_t> count;
};

ClassStats accumulate_class_stats(const Eigen::VectorXd& fv, const Eigen::VectorXd* hv,
                                  const LabelGrid& grid) {
  const std::size_t nc = static_cast<std::size_t>(grid.n_classes);
  ClassStats st;
  st.sum_f.assign(nc, 0.0);
  st.sum_h.assign(nc, 0.0);
  st.sum_fh.assign(nc, 0.0);
  st.sum_f2.assign(nc, 0.0);
  st.count.assign(nc, 0);
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    const std::size_t c = static_cast<std::size_t>(grid.labels[i]);
    const double f = fv[static_cast<Eigen::Index>(i)];
    st.sum_f[c] += f;
    st.sum_f2[c] += f * f;
    if (hv != nullptr) {
      const double h = (*hv)[static_cast<Eigen::Index>(i)];
      st.sum_h[c] += h;
      st.sum_fh[c] += f * h;
    }
    ++st.count[c];
  }
  for (std::size_t c = 0; c < nc; ++c) DHOM_CHECK(st.count[c] > 0, "empty class on the label grid");
  return st;
}

}  // namespace

InvariantProjection project_invariant(const SpectralField& f, const LabelGrid& grid,
                                      const QuotientAtlas& atlas) {
  DHOM_REQUIRE(f.lattice().d() == grid.d, "field dimension does not match label grid");
  DHOM_REQUIRE(atlas.n_classes == grid.n_classes, "atlas does not match label grid");
  const GridField fg = eval_on_grid(f, grid.res);
  const ClassStats st = accumulate_class_stats(fg.values, nullptr, grid);

  InvariantProjection out;
  out.class_values.resize(static_cast<std::size_t>(grid.n_classes));
  for (int c = 0; c < grid.n_classes; ++c) {
    out.class_values[static_cast<std::size_t>(c)] =
        st.sum_f[static_cast<std::size_t>(c)] / static_cast<double>(st.count[static_cast<std::size_t>(c)]);
  }

  GridField pg;
  pg.d = grid.d;
  pg.res = grid.res;
  pg.values.resize(static_cast<Eigen::Index>(grid.labels.size()));
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    pg.values[static_cast<Eigen::Index>(i)] =
        out.class_values[static_cast<std::size_t>(grid.labels[i])];
  }
  out.field = field_from_grid(pg, f.lattice());
  return out;
}

AlgebraReport isometry_and_algebra_check(const SpectralField& f, const SpectralField& h,
                                         const LabelGrid& grid, const QuotientAtlas& atlas) {
  DHOM_REQUIRE(f.lattice() == h.lattice(), "lattice mismatch");
  DHOM_REQUIRE(f.lattice().d() == grid.d, "field dimension does not match label grid");
  DHOM_REQUIRE(atlas.n_classes == grid.n_classes, "atlas does not match label grid");
  const GridField fg = eval_on_grid(f, grid.res);
  const GridField hg = eval_on_grid(h, grid.res);
  const ClassStats st = accumulate_class_stats(fg.values, &hg.values, grid);

  const std::size_t nc = static_cast<std::size_t>(grid.n_classes);
  std::vector<double> vf(nc), vh(nc), vfh(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const double cnt = static_cast<double>(st.count[c]);
    vf[c] = st.sum_f[c] / cnt;
    vh[c] = st.sum_h[c] / cnt;
    vfh[c] = st.sum_fh[c] / cnt;
  }

  AlgebraReport rep{};
  double quad = 0.0;
  for (std::size_t c = 0; c < nc; ++c) quad += atlas.weights[c] * vf[c] * vf[c];
  rep.isometry_defect = std::abs(quad - inner(f, f));

  rep.product_defect = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    rep.product_defect = std::max(rep.product_defect, std::abs(vfh[c] - vf[c] * vh[c]));
  }

  double gap2 = 0.0;
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    const double e = fg.values[static_cast<Eigen::Index>(i)] -
                     vf[static_cast<std::size_t>(grid.labels[i])];
    gap2 += e * e;
  }
  rep.lift_defect = std::sqrt(gap2 / static_cast<double>(grid.labels.size()));

  rep.max_class_variance = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    const double var = st.sum_f2[c] / static_cast<double>(st.count[c]) - vf[c] * vf[c];
    rep.max_class_variance = std::max(rep.max_class_variance, std::max(var, 0.0));
  }
  return rep;
}

}  // namespace dhom

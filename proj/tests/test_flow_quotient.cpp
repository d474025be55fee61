// Orbit integration, chained gap distances, class partitions and label grids.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dhom/quotient.hpp"

using namespace dhom;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

FlowFn shear_flow() {
  return [](const double* x0, double t, double* out) {
    out[0] = x0[0];
    out[1] = x0[1] + t * std::sin(x0[0]);
    out[2] = x0[2] + t * std::cos(x0[0]);
  };
}

}  // namespace

TEST_CASE("wrap and torus distance handle the seam") {
  CHECK(wrap_2pi(-0.1) == doctest::Approx(kTwoPi - 0.1).epsilon(1e-15));
  CHECK(wrap_2pi(kTwoPi + 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(wrap_2pi(0.0) == 0.0);
  const double a[2] = {0.1, 6.2};
  const double b[2] = {6.2, 0.1};
  // Per-axis wrapped gaps are both 2pi - 6.1 ~ 0.183.
  const double gap = kTwoPi - 6.1;
  CHECK(torus_distance(a, b, 2) == doctest::Approx(std::sqrt(2.0) * gap).epsilon(1e-12));
  CHECK(torus_distance(a, a, 2) == 0.0);
}

TEST_CASE("RK4 orbits track the closed-form shear flow") {
  const std::array<double, 3> x0{1.2, 0.4, 5.0};
  const Trajectory num = integrate_flow(drift_example3(), x0, 10.0, 0.01);
  const Trajectory exact = Trajectory::closed_form(3, x0, shear_flow(), 10.0);
  CHECK(num.d() == 3);
  CHECK(num.horizon() == 10.0);
  CHECK(num.origin() == x0);
  for (double t : {-10.0, -4.3, -0.7, 0.0, 0.9, 3.14, 10.0}) {
    const auto p = num.at(t), q = exact.at(t);
    CHECK(torus_distance(p.data(), q.data(), 3) < 1e-6);
  }
  CHECK_THROWS(num.at(10.5));
}

TEST_CASE("cellular orbits preserve the Hamiltonian") {
  const TrigVectorField b = drift_cellular2d();
  const std::array<double, 3> x0{2.0, 0.9, 0.0};
  const Trajectory tr = Trajectory::sampled(b, x0, 30.0, 0.005);
  const double H0 = std::cos(x0[0]) + std::cos(x0[1]);
  for (double t = -30.0; t <= 30.0; t += 1.7) {
    const auto p = tr.at(t);
    CHECK(std::cos(p[0]) + std::cos(p[1]) == doctest::Approx(H0).epsilon(1e-6));
  }
}

TEST_CASE("halton points are deterministic and cover the box") {
  const auto pts = halton_points(3, 200);
  REQUIRE(pts.size() == 200);
  const auto again = halton_points(3, 200);
  CHECK(pts == again);
  double lo = 100.0, hi = -100.0;
  for (const auto& p : pts) {
    for (int j = 0; j < 3; ++j) {
      CHECK(p[static_cast<std::size_t>(j)] >= 0.0);
      CHECK(p[static_cast<std::size_t>(j)] < kTwoPi);
      lo = std::min(lo, p[static_cast<std::size_t>(j)]);
      hi = std::max(hi, p[static_cast<std::size_t>(j)]);
    }
  }
  CHECK(lo < 0.5);
  CHECK(hi > kTwoPi - 0.5);
}

TEST_CASE("driftless chain graph reproduces torus geometry") {
  // Stationary orbits: the one-link gap is the point distance and chaining
  // cannot shortcut it (triangle inequality on the torus).
  GapSearchParams p;
  p.T = 1.0;
  p.dtau = 0.5;
  const auto pts = halton_points(2, 16);
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 1.0, 0.05));
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto di = chain_distances_from(g, i);
    for (std::size_t j = 0; j < 16; ++j) {
      const double want = torus_distance(pts[i].data(), pts[j].data(), 2);
      CHECK(di[j] == doctest::Approx(want).epsilon(1e-9));
      CHECK(chain_distance(g, i, j) == doctest::Approx(want).epsilon(1e-9));
    }
  }
  // Triangle inequality of the chained metric.
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      for (std::size_t k = 0; k < 16; ++k)
        CHECK(chain_distance(g, i, j) <=
              chain_distance(g, i, k) + chain_distance(g, k, j) + 1e-12);
}

TEST_CASE("quotient distance of external orbits uses the graph as waypoints") {
  GapSearchParams p;
  p.T = 1.0;
  p.dtau = 0.5;
  const auto pts = halton_points(2, 12);
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 1.0, 0.05));
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const std::array<double, 3> a{0.5, 0.5, 0.0}, b{0.6, 0.4, 0.0};
  const Trajectory ta = integrate_flow(drift_zero(2), a, 1.0, 0.05);
  const Trajectory tb = integrate_flow(drift_zero(2), b, 1.0, 0.05);
  const double want = torus_distance(a.data(), b.data(), 2);
  CHECK(quotient_distance(g, ta, tb) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("eval budget guard rejects oversized searches") {
  GapSearchParams p;
  p.T = 1.0;
  p.dtau = 0.5;
  p.eval_budget = 10;
  const auto pts = halton_points(2, 8);
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 1.0, 0.1));
  CHECK_THROWS(build_chain_graph(std::move(nodes), p));
}

TEST_CASE("hint pruning keeps pruned gaps as upper bounds") {
  // Shear drift: x1 is invariant along orbits, Lipschitz constant 1.
  GapSearchParams base;
  base.T = 5.0;
  base.dtau = 1.0;
  const auto pts = halton_points(3, 12);
  std::vector<Trajectory> mk;
  for (const auto& x : pts) mk.push_back(integrate_flow(drift_example3(), x, 5.0, 0.02));
  const ChainGraph full = build_chain_graph(mk, base);

  GapSearchParams pruned = base;
  pruned.hint = [](const double* x) { return x[0]; };
  pruned.hint_lip = 1.0;
  pruned.prune_cap = 0.5;
  const ChainGraph cut = build_chain_graph(std::move(mk), pruned);

  int inf_edges = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = i + 1; j < 12; ++j) {
      const Eigen::Index ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (std::isinf(cut.w(ii, jj))) {
        ++inf_edges;
        // Pruning may only remove edges whose true gap exceeds the cap.
        CHECK(full.w(ii, jj) >= 0.5 - 1e-9);
      } else {
        CHECK(cut.w(ii, jj) == doctest::Approx(full.w(ii, jj)).epsilon(1e-12));
      }
    }
  }
  CHECK(inf_edges > 0);
}

TEST_CASE("irrational line collapses to a single class") {
  GapSearchParams p;
  p.T = 300.0;
  p.dtau = 5.0;
  const auto pts = halton_points(2, 24);
  std::vector<Trajectory> nodes;
  const TrigVectorField b = drift_irrational(std::sqrt(2.0));
  for (const auto& x : pts) {
    const std::array<double, 3> x0 = x;
    nodes.push_back(Trajectory::closed_form(
        2, x0,
        [](const double* y, double t, double* out) {
          out[0] = y[0] + t;
          out[1] = y[1] + std::sqrt(2.0) * t;
        },
        300.0));
  }
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const QuotientAtlas atlas = equivalence_classes(g, 0.25);
  CHECK(atlas.n_classes == 1);
  CHECK(atlas.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("greedy partition seeds classes at the lowest unassigned node") {
  GapSearchParams p;
  p.T = 1.0;
  p.dtau = 0.5;
  // Two tight clusters far apart on the 2-torus.
  std::vector<std::array<double, 3>> pts = {{0.5, 0.5, 0.0}, {0.55, 0.5, 0.0},
                                            {3.5, 3.5, 0.0}, {3.55, 3.52, 0.0}};
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 1.0, 0.05));
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const QuotientAtlas atlas = equivalence_classes(g, 0.3);
  REQUIRE(atlas.n_classes == 2);
  CHECK(atlas.class_of[0] == 0);
  CHECK(atlas.class_of[1] == 0);
  CHECK(atlas.class_of[2] == 1);
  CHECK(atlas.class_of[3] == 1);
  CHECK(atlas.representative[0] == 0);
  CHECK(atlas.representative[1] == 2);
  CHECK(atlas.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("label grid covers every cell and respects class geometry") {
  // Stationary nodes on a coarse grid: after BFS fill every cell belongs to
  // the nearest cluster.
  GapSearchParams p;
  p.T = 1.0;
  p.dtau = 0.5;
  std::vector<std::array<double, 3>> pts = {{1.0, 1.0, 0.0}, {4.0, 4.0, 0.0}};
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 1.0, 0.05));
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const QuotientAtlas atlas = equivalence_classes(g, 0.1);
  REQUIRE(atlas.n_classes == 2);
  const LabelGrid grid = build_label_grid(g, atlas, 32);
  CHECK(grid.res == 32);
  CHECK(grid.n_classes == 2);
  CHECK(grid.fill_fraction > 0.0);
  CHECK(grid.fill_fraction <= 1.0);
  int counts[2] = {0, 0};
  for (int v : grid.labels) {
    REQUIRE(v >= 0);
    REQUIRE(v < 2);
    ++counts[v];
  }
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  // The cell containing each seed carries that seed's label.
  const int cell0 = static_cast<int>(1.0 / kTwoPi * 32);
  const int cell1 = static_cast<int>(4.0 / kTwoPi * 32);
  CHECK(grid.labels[static_cast<std::size_t>(cell0 * 32 + cell0)] == 0);
  CHECK(grid.labels[static_cast<std::size_t>(cell1 * 32 + cell1)] == 1);
}

TEST_CASE("projection averages within classes and lifts back as a step field") {
  // Zero drift, fine partition: projecting any smooth field returns nearly
  // itself. Coarse two-class partition: class values equal in-class means.
  GapSearchParams p;
  p.T = 0.5;
  p.dtau = 0.25;
  std::vector<std::array<double, 3>> pts = {{1.0, 1.0, 0.0}, {4.0, 4.0, 0.0}};
  std::vector<Trajectory> nodes;
  for (const auto& x : pts) nodes.push_back(integrate_flow(drift_zero(2), x, 0.5, 0.05));
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const QuotientAtlas atlas = equivalence_classes(g, 0.1);
  const LabelGrid grid = build_label_grid(g, atlas, 16);
  ModeLattice lat(2, 3);
  const SpectralField f = SpectralField::from_modes(
      lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)}, {Mode{-1, 0, 0}, Complex(0.5, 0.0)}});
  const InvariantProjection pr = project_invariant(f, grid, atlas);
  REQUIRE(pr.class_values.size() == 2);
  // Direct recomputation of the class means from the grid.
  const GridField vals = eval_on_grid(f, 16);
  double sum[2] = {0.0, 0.0};
  int cnt[2] = {0, 0};
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const int c = grid.labels[i];
    sum[c] += vals.values[static_cast<Eigen::Index>(i)];
    ++cnt[c];
  }
  for (int c = 0; c < 2; ++c)
    CHECK(pr.class_values[static_cast<std::size_t>(c)] ==
          doctest::Approx(sum[c] / cnt[c]).epsilon(1e-12));
}

TEST_CASE("algebra report vanishes when classes are single cells") {
  // A grid whose classes refine the field's level sets: variance, product and
  // isometry defects all collapse to quadrature error.
  GapSearchParams p;
  p.T = 0.5;
  p.dtau = 0.25;
  std::vector<Trajectory> nodes;
  for (int i = 0; i < 64; ++i) {
    const std::array<double, 3> x{(i + 0.5) * kTwoPi / 64.0, 0.0, 0.0};
    nodes.push_back(integrate_flow(drift_zero(1), x, 0.5, 0.05));
  }
  const ChainGraph g = build_chain_graph(std::move(nodes), p);
  const QuotientAtlas atlas = equivalence_classes(g, 0.02);
  const LabelGrid grid = build_label_grid(g, atlas, 256);
  ModeLattice lat(1, 2);
  const SpectralField f = SpectralField::from_modes(
      lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)}, {Mode{-1, 0, 0}, Complex(0.5, 0.0)}});
  const SpectralField h = SpectralField::from_modes(
      lat, {{Mode{0, 0, 0}, Complex(0.3, 0.0)},
            {Mode{1, 0, 0}, Complex(0.0, -0.25)},
            {Mode{-1, 0, 0}, Complex(0.0, 0.25)}});
  const AlgebraReport rep = isometry_and_algebra_check(f, h, grid, atlas);
  CHECK(rep.isometry_defect < 0.01);
  CHECK(rep.product_defect < 0.01);
  CHECK(rep.lift_defect < 0.1);
  CHECK(rep.max_class_variance < 0.005);
}

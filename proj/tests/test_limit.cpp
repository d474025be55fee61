// Compressed limit generator, limit semigroup, Dirichlet form and the
// finite-c to limit semigroup comparison.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dhom/limit_process.hpp"

using namespace dhom;

namespace {

struct Fixture {
  ModeLattice lat;
  AssembledOperators ops;
  KernelBasis kb;
  LimitGenerator gen;

  Fixture(const TrigVectorField& b, int d, int K)
      : lat(d, K),
        ops(assemble_operators(b, lat)),
        kb(kernel_basis(ops, 1.0)),
        gen(limit_generator(ops, kb)) {}
};

SpectralField make_cos1(const ModeLattice& lat) {
  return SpectralField::from_modes(
      lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)}, {Mode{-1, 0, 0}, Complex(0.5, 0.0)}});
}

SpectralField make_H(const ModeLattice& lat) {
  return SpectralField::from_modes(lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)},
                                         {Mode{-1, 0, 0}, Complex(0.5, 0.0)},
                                         {Mode{0, 1, 0}, Complex(0.5, 0.0)},
                                         {Mode{0, -1, 0}, Complex(0.5, 0.0)}});
}

}  // namespace

TEST_CASE("shear-drift limit generator has circle-Laplacian spectrum") {
  Fixture fx(drift_example3(), 3, 2);
  REQUIRE(fx.gen.dim() == 5);
  CHECK(fx.gen.sym_defect < 1e-12);
  const double want[5] = {0.0, -1.0, -1.0, -4.0, -4.0};
  for (int i = 0; i < 5; ++i) CHECK(fx.gen.evals[i] == doctest::Approx(want[i]).epsilon(1e-12));
  // Basis columns stay plain-orthonormal.
  const Eigen::MatrixXd gram = fx.gen.basis.transpose() * fx.gen.basis;
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("limit semigroup on invariants is the circle heat semigroup") {
  Fixture fx(drift_example3(), 3, 3);
  const SpectralField g = make_cos1(fx.lat);
  for (double t : {0.1, 0.7}) {
    const SpectralField evolved = apply_limit_semigroup(fx.gen, fx.ops.rep, t, g);
    SpectralField want = g;
    want *= std::exp(-t);
    CHECK((evolved.coeffs() - want.coeffs()).norm() < 1e-10);
  }
}

TEST_CASE("apply_limit_semigroup rejects fields off the span") {
  Fixture fx(drift_example3(), 3, 2);
  const SpectralField off = SpectralField::from_modes(
      fx.lat, {{Mode{0, 1, 0}, Complex(0.5, 0.0)}, {Mode{0, -1, 0}, Complex(0.5, 0.0)}});
  CHECK_THROWS(apply_limit_semigroup(fx.gen, fx.ops.rep, 0.5, off));
  // project_then_evolve reports the out-of-kernel share instead; cos x2 is
  // entirely outside the span, so the share is 1.
  double defect = 0.0;
  const SpectralField r = project_then_evolve(fx.gen, fx.ops.rep, 0.5, off, &defect);
  CHECK(defect == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm_l2(r) < 1e-12);
}

TEST_CASE("finite-c semigroup matrix: driftless diagonal and flow property") {
  Fixture fx(drift_example3(), 3, 2);
  const double t = 0.3;
  // c = 0: pure heat damping e^{-|k|^2 t} mode by mode.
  const SpectralField g = random_field(fx.lat, 71, 1);
  const SpectralField h0 = apply_semigroup(fx.ops, 0.0, t, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < fx.lat.size(); ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    worst = std::max(worst, std::abs(h0.coeffs()[ii] -
                                     std::exp(-fx.lat.sq_norm(i) * t) * g.coeffs()[ii]));
  }
  CHECK(worst < 1e-12);
  // Semigroup property at c = 5: T(2t) = T(t)^2.
  const Eigen::MatrixXd Tt = semigroup_matrix(fx.ops, 5.0, t);
  const Eigen::MatrixXd T2t = semigroup_matrix(fx.ops, 5.0, 2.0 * t);
  CHECK((T2t - Tt * Tt).norm() < 1e-10 * T2t.norm());
  // L2 contraction on a random field.
  const SpectralField hc = apply_semigroup_matrix(fx.ops, Tt, g);
  CHECK(norm_l2(hc) <= norm_l2(g) + 1e-12);
}

TEST_CASE("dirichlet form matches the H1 pairing on invariants") {
  Fixture e3(drift_example3(), 3, 2);
  const SpectralField c1 = make_cos1(e3.lat);
  CHECK(dirichlet_form(e3.gen, e3.ops.rep, c1, c1) == doctest::Approx(0.5).epsilon(1e-12));

  Fixture cell(drift_cellular2d(), 2, 4);
  const SpectralField H = make_H(cell.lat);
  CHECK(dirichlet_form(cell.gen, cell.ops.rep, H, H) == doctest::Approx(1.0).epsilon(1e-12));
  // H^2 = 1 + (cos 2x1 + cos 2x2)/2 + 2 cos x1 cos x2: |grad|^2 integrates to 3.
  SpectralField H2 = SpectralField::from_modes(
      cell.lat, {{Mode{0, 0, 0}, Complex(1.0, 0.0)},
                 {Mode{2, 0, 0}, Complex(0.25, 0.0)},
                 {Mode{-2, 0, 0}, Complex(0.25, 0.0)},
                 {Mode{0, 2, 0}, Complex(0.25, 0.0)},
                 {Mode{0, -2, 0}, Complex(0.25, 0.0)},
                 {Mode{1, 1, 0}, Complex(0.5, 0.0)},
                 {Mode{-1, -1, 0}, Complex(0.5, 0.0)},
                 {Mode{1, -1, 0}, Complex(0.5, 0.0)},
                 {Mode{-1, 1, 0}, Complex(0.5, 0.0)}});
  CHECK(dirichlet_form(cell.gen, cell.ops.rep, H2, H2) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS(dirichlet_form(cell.gen, cell.ops.rep, make_cos1(cell.lat), H));
}

TEST_CASE("resolvent-based form approximation converges at large lambda") {
  Fixture fx(drift_example3(), 3, 2);
  const SpectralField c1 = make_cos1(fx.lat);
  const auto rows = dform_limit_curve(fx.ops, fx.kb, fx.gen, c1, c1, {10.0, 1000.0});
  REQUIRE(rows.size() == 2);
  // lambda <u - lambda R*_l u, u> = lambda (1 - lambda/(1+lambda))/2 = lambda/(2(1+lambda)).
  CHECK(rows[0].value == doctest::Approx(10.0 / 22.0).epsilon(1e-12));
  CHECK(rows[1].value == doctest::Approx(500.0 / 1001.0).epsilon(1e-12));
  CHECK(rows[0].target == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(rows[1].value - rows[1].target) < std::abs(rows[0].value - rows[0].target));
}

TEST_CASE("semigroup distance curve is flat for driftless data") {
  Fixture fx(drift_zero(2), 2, 3);
  // With b = 0 the kernel is everything and T* = T^(c) for every c.
  const SpectralField psi = random_field(fx.lat, 11, 4);
  const auto rows = semigroup_convergence_curve(fx.ops, fx.gen, psi, 0.5, {0.0, 3.0});
  REQUIRE(rows.size() == 2);
  for (const SemigroupRow& r : rows) {
    CHECK(r.t == 0.5);
    CHECK(r.dist < 1e-10);
  }
}

TEST_CASE("semigroup distance decays with c for the cellular drift") {
  Fixture fx(drift_cellular2d(), 2, 4);
  const SpectralField H = make_H(fx.lat);
  // psi = H^2 expressed through grid projection (coefficients above).
  const GridField grid = eval_on_grid(H, 32);
  GridField sq = grid;
  sq.values = grid.values.array().square();
  const SpectralField psi = field_from_grid(sq, fx.lat, nullptr);
  const auto rows = semigroup_convergence_curve(fx.ops, fx.gen, psi, 0.5, {1.0, 10.0, 100.0});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].dist > rows[1].dist);
  CHECK(rows[1].dist > rows[2].dist);
  CHECK(rows[2].dist < 0.2 * rows[0].dist);
}

TEST_CASE("limit resolvent integrates the limit semigroup") {
  // R*_1 g = int_0^inf e^{-t} T*_t g dt, checked by Simpson quadrature on
  // [0, 40] with the span-restricted semigroup.
  Fixture fx(drift_example3(), 3, 2);
  const SpectralField g = SpectralField::from_modes(
      fx.lat, {{Mode{1, 0, 0}, Complex(0.3, 0.0)},
               {Mode{-1, 0, 0}, Complex(0.3, 0.0)},
               {Mode{2, 0, 0}, Complex(0.2, 0.0)},
               {Mode{-2, 0, 0}, Complex(0.2, 0.0)}});
  const double h = 0.01, T = 40.0;
  const int n = static_cast<int>(T / h);  // even
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(fx.lat.size()));
  for (int i = 0; i <= n; ++i) {
    const double t = h * i;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const SpectralField Tg = apply_limit_semigroup(fx.gen, fx.ops.rep, t, g);
    acc += (w * std::exp(-t)) * Tg.coeffs();
  }
  acc *= h / 3.0;
  const SpectralField direct =
      limit_resolvent(fx.ops, fx.kb, 1.0, g, LimitRoute::projection);
  CHECK((acc - direct.coeffs()).norm() < 1e-6);
}

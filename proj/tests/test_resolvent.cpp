// Kernel extraction, finite-c resolvents, the mode-frequency decomposition
// and both limit-resolvent routes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "dhom/resolvent.hpp"

using namespace dhom;

namespace {

struct Fixture {
  ModeLattice lat;
  AssembledOperators ops;
  KernelBasis kb;

  Fixture(const TrigVectorField& b, int d, int K, double lambda = 1.0)
      : lat(d, K), ops(assemble_operators(b, lat)), kb(kernel_basis(ops, lambda)) {}
};

SpectralField make_cos1(const ModeLattice& lat) {
  return SpectralField::from_modes(
      lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)}, {Mode{-1, 0, 0}, Complex(0.5, 0.0)}});
}

}  // namespace

TEST_CASE("kernel dimensions count the invariant trig polynomials") {
  // Shear drift: invariants are functions of x1, so dim = 2K+1.
  CHECK(Fixture(drift_example3(), 3, 2).kb.dim() == 5);
  CHECK(Fixture(drift_example3(), 3, 3).kb.dim() == 7);
  // Cellular drift at K=4: 1, H, H^2 - c2 P, ... five independent invariant
  // polynomials fit the lattice.
  CHECK(Fixture(drift_cellular2d(), 2, 4).kb.dim() == 5);
  // Zero drift: everything is invariant.
  CHECK(Fixture(drift_zero(2), 2, 2).kb.dim() == 25);
  // Dense irrational line: only constants.
  CHECK(Fixture(drift_irrational(std::sqrt(2.0)), 2, 2).kb.dim() == 1);
}

TEST_CASE("kernel cut is unambiguous and the basis is orthonormal both ways") {
  Fixture fx(drift_example3(), 3, 2, 2.0);
  const KernelBasis& kb = fx.kb;
  CHECK(!kb.ambiguous);
  CHECK(kb.sigma_min_kept > 10.0 * kb.sigma_max_dropped);
  const Eigen::MatrixXd gram_plain = kb.plain.transpose() * kb.plain;
  CHECK((gram_plain - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  const Eigen::VectorXd w =
      fx.ops.rep.mode_weights([&](double s) { return s + kb.lambda; });
  const Eigen::MatrixXd gram_w = kb.weighted.transpose() * w.asDiagonal() * kb.weighted;
  CHECK((gram_w - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  // Same span: weighted columns reconstruct from plain ones.
  const Eigen::MatrixXd back = kb.plain * (kb.plain.transpose() * kb.weighted);
  CHECK((back - kb.weighted).norm() < 1e-10);
}

TEST_CASE("mode decomposition splits kernel, spurious and rotating parts") {
  Fixture fx(drift_example3(), 3, 2);
  const ModeDecomposition md = mode_decomposition(fx.ops, fx.kb, 1.0);
  const std::size_t n = fx.lat.size();  // 125
  CHECK(static_cast<std::size_t>(md.theta_kernel.cols()) == 5);
  CHECK(static_cast<std::size_t>(md.theta_spurious.cols()) == 24);
  CHECK(static_cast<std::size_t>(md.mu.size()) == 96);
  CHECK(static_cast<std::size_t>(md.theta.cols()) + md.theta_kernel.cols() +
            md.theta_spurious.cols() ==
        n);
  for (Eigen::Index i = 0; i + 1 < md.mu.size(); ++i)
    CHECK(std::abs(md.mu[i]) >= std::abs(md.mu[i + 1]) - 1e-15);
  CHECK(std::abs(md.mu[md.mu.size() - 1]) > md.zero_tol);
}

TEST_CASE("driftless resolvent is the diagonal heat resolvent") {
  Fixture fx(drift_zero(2), 2, 3);
  const SpectralField g = random_field(fx.lat, 99, 0);
  for (double lambda : {0.5, 2.0}) {
    const SpectralField r = solve_resolvent(fx.ops, 0.0, lambda, g);
    // (lambda - A) r = g with A diagonal: r_k = g_k/(lambda + |k|^2).
    double worst = 0.0;
    for (std::size_t i = 0; i < fx.lat.size(); ++i) {
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      worst = std::max(worst, std::abs(r.coeffs()[ii] * (lambda + fx.lat.sq_norm(i)) -
                                       g.coeffs()[ii]));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("drift-invariant eigenfunctions pass through the finite-c resolvent") {
  Fixture fx(drift_example3(), 3, 3);
  const SpectralField c1 = make_cos1(fx.lat);
  const double lambda = 0.8;
  for (double c : {0.0, 7.0, 50.0}) {
    const SpectralField r = solve_resolvent(fx.ops, c, lambda, c1);
    SpectralField want = c1;
    want *= 1.0 / (1.0 + lambda);
    CHECK((r.coeffs() - want.coeffs()).norm() < 1e-12);
  }
}

TEST_CASE("closed-form mode sum reproduces the LU resolvent") {
  Fixture fx(drift_example3(), 3, 2);
  const ModeDecomposition md = mode_decomposition(fx.ops, fx.kb, 1.0);
  for (double c : {0.0, 1.0, -10.0, 100.0}) {
    for (std::uint64_t i = 0; i < 5; ++i) {
      const SpectralField g = random_field(fx.lat, 5, i);
      const SpectralField lu = solve_resolvent(fx.ops, c, 1.0, g);
      const SpectralField mf = finite_c_mode_formula(fx.ops, md, c, g);
      CHECK((lu.coeffs() - mf.coeffs()).norm() < 1e-9);
    }
  }
}

TEST_CASE("projection and spectral limit routes agree") {
  Fixture fx(drift_example3(), 3, 2, 1.5);
  const ModeDecomposition md = mode_decomposition(fx.ops, fx.kb, 1.5);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SpectralField g = random_field(fx.lat, 17, i);
    const SpectralField a = limit_resolvent(fx.ops, fx.kb, 1.5, g, LimitRoute::projection);
    const SpectralField b = limit_resolvent(fx.ops, fx.kb, 1.5, g, LimitRoute::spectral, &md);
    CHECK(std::sqrt(inner_h1_lambda(a - b, a - b, 1.5)) < 1e-10);
  }
}

TEST_CASE("limit resolvent lands in the kernel and kills its complement") {
  Fixture fx(drift_cellular2d(), 2, 4);
  const double lambda = 1.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SpectralField g = random_field(fx.lat, 41, i);
    const SpectralField r = limit_resolvent(fx.ops, fx.kb, lambda, g, LimitRoute::projection);
    const SpectralField back = project_plain(r, fx.kb, fx.ops.rep);
    CHECK((r.coeffs() - back.coeffs()).norm() < 1e-10);  // in span
    SpectralField gp = g;
    gp -= project_plain(g, fx.kb, fx.ops.rep);
    const SpectralField rp = limit_resolvent(fx.ops, fx.kb, lambda, gp, LimitRoute::projection);
    CHECK(norm_l2(rp) < 1e-10);  // complement annihilated
  }
}

TEST_CASE("weighted projection solves the first-order conditions") {
  Fixture fx(drift_example3(), 3, 2, 2.0);
  for (std::uint64_t i = 0; i < 5; ++i)
    CHECK(minimizer_check(fx.ops, fx.kb, 2.0, random_field(fx.lat, 7, i)) < 1e-10);
}

TEST_CASE("any-weight evaluation and reweighting match the direct basis") {
  Fixture fx(drift_example3(), 3, 2, 1.0);
  const double lambda = 2.0;
  const KernelBasis direct = kernel_basis(fx.ops, lambda);
  const KernelBasis rew = reweight_kernel_basis(fx.ops, fx.kb, lambda);
  // Same span, both orthonormal at lambda: cross Gram must be orthogonal.
  const Eigen::VectorXd w =
      fx.ops.rep.mode_weights([&](double s) { return s + lambda; });
  const Eigen::MatrixXd cross = rew.weighted.transpose() * w.asDiagonal() * direct.weighted;
  CHECK((cross * cross.transpose() -
         Eigen::MatrixXd::Identity(cross.rows(), cross.rows()))
            .norm() < 1e-10);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const SpectralField g = random_field(fx.lat, 13, i);
    const SpectralField a = limit_resolvent_any_weight(fx.ops, fx.kb, lambda, g);
    const SpectralField b = limit_resolvent(fx.ops, direct, lambda, g, LimitRoute::projection);
    CHECK((a.coeffs() - b.coeffs()).norm() < 1e-10);
  }
}

TEST_CASE("limit property report shows Markov contraction behavior") {
  Fixture fx(drift_example3(), 3, 2, 0.5);
  const SpectralField g = random_field(fx.lat, 3, 2);
  std::vector<SpectralField> probes;
  for (std::uint64_t i = 0; i < 4; ++i) probes.push_back(random_field(fx.lat, 31, i));
  const LimitPropertyReport rep = verify_limit_properties(fx.ops, fx.kb, 0.5, 2.0, g, probes, 32);
  CHECK(rep.pseudo_resolvent_defect < 1e-10);
  CHECK(rep.selfadjoint_defect < 1e-10);
  CHECK(rep.contraction_margin <= 1e-12);
  CHECK(rep.kernel_orth_norm < 1e-10);
  // Markov range only makes sense for [0,1] data; here just finite.
  CHECK(std::isfinite(rep.markov_min));
  CHECK(std::isfinite(rep.markov_max));
}

TEST_CASE("strong continuity curve matches the diagonal formula on invariants") {
  Fixture fx(drift_example3(), 3, 2);
  const SpectralField g = make_cos1(fx.lat);  // in the kernel span
  const auto rows = strong_continuity_curve(fx.ops, fx.kb, g, {9.0, 99.0});
  REQUIRE(rows.size() == 2);
  for (const ContinuityRow& r : rows) {
    // lambda R*_l cos x1 - cos x1 = -cos x1/(1+lambda).
    CHECK(r.dist_H == doctest::Approx(std::sqrt(0.5) / (1.0 + r.lambda)).epsilon(1e-12));
    CHECK(r.dist_H1lambda > 0.0);
  }
  // Fields outside the kernel span are a usage error.
  const SpectralField off = SpectralField::from_modes(
      fx.lat, {{Mode{0, 1, 0}, Complex(0.5, 0.0)}, {Mode{0, -1, 0}, Complex(0.5, 0.0)}});
  CHECK_THROWS_AS(strong_continuity_curve(fx.ops, fx.kb, off, {9.0}),
                  std::runtime_error);
}

TEST_CASE("random probe fields are reproducible, unit-norm and real") {
  ModeLattice lat(2, 3);
  const SpectralField a = random_field(lat, 5, 7);
  const SpectralField b = random_field(lat, 5, 7);
  CHECK((a.coeffs() - b.coeffs()).norm() == 0.0);
  CHECK(norm_l2(a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(a.coeffs()[static_cast<Eigen::Index>(lat.center_index())].imag()) <
        1e-15);
  const SpectralField c = random_field(lat, 5, 8);
  CHECK((a.coeffs() - c.coeffs()).norm() > 1e-3);
  const SpectralField d = random_field(lat, 6, 7);
  CHECK((a.coeffs() - d.coeffs()).norm() > 1e-3);
}

TEST_CASE("convergence curve fields stay put when the data is invariant") {
  Fixture fx(drift_example3(), 3, 2);
  const ConvergenceCurve curve =
      convergence_curve(fx.ops, fx.kb, 1.0, make_cos1(fx.lat), {0.0, 10.0, 100.0});
  REQUIRE(curve.rows.size() == 3);
  // cos x1 is invariant, so R^(c) = R* exactly and every distance vanishes.
  for (const ConvergenceRow& r : curve.rows) {
    CHECK(r.dist_H < 1e-12);
    CHECK(r.dist_H1 < 1e-12);
  }
}

TEST_CASE("convergence curve decays for non-invariant data") {
  Fixture fx(drift_example3(), 3, 2);
  const SpectralField g = SpectralField::from_modes(
      fx.lat, {{Mode{0, 1, 0}, Complex(0.5, 0.0)}, {Mode{0, -1, 0}, Complex(0.5, 0.0)}});
  const ConvergenceCurve curve = convergence_curve(fx.ops, fx.kb, 1.0, g, {1.0, 10.0, 100.0});
  REQUIRE(curve.rows.size() == 3);
  CHECK(curve.rows[0].dist_H > curve.rows[1].dist_H);
  CHECK(curve.rows[1].dist_H > curve.rows[2].dist_H);
  // The log-log slope is well below zero but milder than -1: cos x2 excites
  // rotation frequencies arbitrarily close to zero (sin x1 vanishes on two
  // circles), and those components relax at their own pace.
  CHECK(curve.fit_slope < -0.2);
  // c = 0 row: distance equals ||(A-1)^{-1}g - R*g|| with R*g = 0 here; the
  // plain resolvent leaves g/(1+|k|^2) behind, so dist_H = sqrt(1/2)/2.
  const ConvergenceCurve with0 = convergence_curve(fx.ops, fx.kb, 1.0, g, {0.0});
  CHECK(with0.rows[0].dist_H == doctest::Approx(std::sqrt(0.5) / 2.0).epsilon(1e-12));
}

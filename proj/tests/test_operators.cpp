// Drift presets, divergence validation, and the assembled mode-space
// operators A (diffusion) and B (drift convolution).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dhom/operators.hpp"

using namespace dhom;

namespace {

SpectralField make_cos(const ModeLattice& lat, int axis) {
  Mode p{0, 0, 0}, m{0, 0, 0};
  p[axis] = 1;
  m[axis] = -1;
  return SpectralField::from_modes(
      lat, {{p, Complex(0.5, 0.0)}, {m, Complex(0.5, 0.0)}});
}

}  // namespace

TEST_CASE("drift presets evaluate to their formulas") {
  const double x[3] = {0.9, 2.3, 4.1};
  double out[3];

  const TrigVectorField z = drift_zero(3);
  CHECK(z.is_zero());
  z.eval(x, out);
  CHECK(out[0] == 0.0);
  CHECK(out[2] == 0.0);

  const TrigVectorField e3 = drift_example3();
  CHECK(e3.d() == 3);
  CHECK(e3.Kb() == 1);
  CHECK(!e3.is_zero());
  CHECK(e3.divergence_defect() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(e3.sup_bound() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  e3.eval(x, out);
  CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(std::sin(0.9)).epsilon(1e-14));
  CHECK(out[2] == doctest::Approx(std::cos(0.9)).epsilon(1e-14));

  const TrigVectorField cell = drift_cellular2d();
  cell.eval(x, out);
  CHECK(out[0] == doctest::Approx(std::sin(2.3)).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(-std::sin(0.9)).epsilon(1e-14));

  const TrigVectorField irr = drift_irrational(1.41);
  irr.eval(x, out);
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(1.41).epsilon(1e-14));

  CHECK(validate_divergence_free(e3, 1e-12).pass);
}

TEST_CASE("compressible fields are rejected at construction") {
  // b = (sin x1, 0) has divergence cos x1.
  TrigVectorField::ModeList c0{{Mode{1, 0, 0}, Complex(0.0, -0.5)},
                               {Mode{-1, 0, 0}, Complex(0.0, 0.5)}};
  CHECK_THROWS_AS(TrigVectorField(2, {c0, {}}), std::invalid_argument);
}

TEST_CASE("diffusion operator is the diagonal -|k|^2") {
  ModeLattice lat(2, 3);
  const OperatorMatrix A = assemble_A(lat);
  const Eigen::VectorXd diag = assemble_A_diag(lat);
  REQUIRE(A.square());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    CHECK(diag[ii] == -lat.sq_norm(i));
    CHECK(A.mat(ii, ii) == Complex(-lat.sq_norm(i), 0.0));
  }
  CHECK(A.mat.cwiseAbs().sum() == doctest::Approx(diag.cwiseAbs().sum()).epsilon(1e-15));
}

TEST_CASE("drift convolution entries follow i k_j amp_j(m)") {
  // For b = (0, sin x1, cos x1): amp_2(+-e1) = -+i/2, amp_3(+-e1) = 1/2, so
  // entry(k + e1, k) = i k_2 (-i/2) + i k_3 (1/2) = k_2/2 + i k_3/2.
  ModeLattice lat(3, 2);
  const OperatorMatrix B = assemble_B(drift_example3(), lat, false);
  REQUIRE(B.square());
  const Mode k{1, 2, -1};
  const Mode kp{2, 2, -1};
  const Complex got = B.mat(static_cast<Eigen::Index>(lat.index(kp)),
                            static_cast<Eigen::Index>(lat.index(k)));
  CHECK(std::abs(got - Complex(1.0, -0.5)) < 1e-15);
  CHECK(antisymmetry_defect(B) < 1e-14);
}

TEST_CASE("Galerkin drift action matches the product formula") {
  // b.grad cos x2 = -sin x1 sin x2 = (cos(x1+x2) - cos(x1-x2))/2 for the shear
  // drift; every target mode stays inside the lattice, so Galerkin is exact.
  ModeLattice lat(3, 2);
  const OperatorMatrix B = assemble_B(drift_example3(), lat, false);
  const SpectralField f = make_cos(lat, 1);
  const Eigen::VectorXcd out = B.mat * f.coeffs();
  const SpectralField want = SpectralField::from_modes(
      lat, {{Mode{1, 1, 0}, Complex(0.25, 0.0)},
            {Mode{-1, -1, 0}, Complex(0.25, 0.0)},
            {Mode{1, -1, 0}, Complex(-0.25, 0.0)},
            {Mode{-1, 1, 0}, Complex(-0.25, 0.0)}});
  CHECK((out - want.coeffs()).norm() < 1e-14);
}

TEST_CASE("extended form keeps the modes Galerkin drops") {
  // b = (cos 2x2, 0) shifts k2 by +-2, so acting on cos(x1 + 2x2) produces a
  // (1,4) mode: outside the K=2 Galerkin lattice, inside the extended one.
  ModeLattice lat(2, 2);
  const TrigVectorField b(
      2, {{{Mode{0, 2, 0}, Complex(0.5, 0.0)}, {Mode{0, -2, 0}, Complex(0.5, 0.0)}}, {}});
  CHECK(b.Kb() == 2);
  const OperatorMatrix Bg = assemble_B(b, lat, false);
  const OperatorMatrix Be = assemble_B(b, lat, true);
  CHECK(Bg.square());
  CHECK(!Be.square());
  CHECK(Be.target.K() == lat.K() + b.Kb());

  const SpectralField f = SpectralField::from_modes(
      lat, {{Mode{1, 2, 0}, Complex(0.5, 0.0)}, {Mode{-1, -2, 0}, Complex(0.5, 0.0)}});
  const Eigen::VectorXcd ge = Be.mat * f.coeffs();
  const Eigen::VectorXcd gg = Bg.mat * f.coeffs();
  // B f = i/4 (e^{i(x1+4x2)} + e^{i x1}) + conj: coefficient i/4 at (1,4).
  const Complex spill = ge[static_cast<Eigen::Index>(Be.target.index(Mode{1, 4, 0}))];
  CHECK(std::abs(spill - Complex(0.0, 0.25)) < 1e-15);
  // The two forms agree on every mode the Galerkin lattice retains.
  double shared_gap = 0.0, ext_mass = 0.0, gal_mass = 0.0;
  for (std::size_t i = 0; i < Be.target.size(); ++i) {
    const Mode k = Be.target.mode(i);
    const Complex v = ge[static_cast<Eigen::Index>(i)];
    ext_mass += std::norm(v);
    if (lat.contains(k)) {
      shared_gap = std::max(
          shared_gap, std::abs(v - gg[static_cast<Eigen::Index>(lat.index(k))]));
      gal_mass += std::norm(v);
    }
  }
  CHECK(shared_gap < 1e-15);
  CHECK(ext_mass > gal_mass + 0.1);  // the dropped modes carry real mass
}

TEST_CASE("assembled operator bundle carries consistent pieces") {
  ModeLattice lat(3, 2);
  const AssembledOperators ops = assemble_operators(drift_example3(), lat);
  CHECK(ops.lat == lat);
  CHECK(ops.lat_ext.K() == 3);
  CHECK(ops.antisym_defect < 1e-14);
  CHECK(ops.divergence_defect < 1e-14);
  CHECK(ops.drift_sup == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK((ops.B_real + ops.B_real.transpose()).cwiseAbs().maxCoeff() < 1e-13);

  // cos x1 is drift-invariant for the shear, so (A + cB) cos x1 = -cos x1.
  const SpectralField c1 = make_cos(lat, 0);
  for (double c : {0.0, 7.0, 100.0}) {
    const SpectralField g = apply_Ac(ops, c, c1);
    CHECK((g.coeffs() + c1.coeffs()).norm() < 1e-12);
  }
}

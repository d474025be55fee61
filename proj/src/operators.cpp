#include "dhom/operators.hpp"

#include <algorithm>
#include <cmath>

namespace dhom {

OperatorMatrix assemble_A(const ModeLattice& lat) {
  const auto n = static_cast<Eigen::Index>(lat.size());
  OperatorMatrix op{lat, lat, Eigen::MatrixXcd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    op.mat(i, i) = Complex(-lat.sq_norm(static_cast<std::size_t>(i)), 0.0);
  }
  return op;
}

Eigen::VectorXd assemble_A_diag(const ModeLattice& lat) {
  const auto n = static_cast<Eigen::Index>(lat.size());
  Eigen::VectorXd diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = -lat.sq_norm(static_cast<std::size_t>(i));
  return diag;
}

OperatorMatrix assemble_B(const TrigVectorField& b, const ModeLattice& lat, bool extended) {
  DHOM_REQUIRE(b.d() == lat.d(), "drift/lattice dimension mismatch");
  const auto report = validate_divergence_free(b, 1e-12);
  DHOM_CHECK(report.pass, "drift failed the divergence-free check");

  const ModeLattice target = extended ? ModeLattice(lat.d(), lat.K() + b.Kb()) : lat;
  OperatorMatrix op{lat, target,
                    Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(target.size()),
                                           static_cast<Eigen::Index>(lat.size()))};
  for (std::size_t col = 0; col < lat.size(); ++col) {
    const Mode k = lat.mode(col);
    for (int j = 0; j < lat.d(); ++j) {
      const double kj = k[static_cast<std::size_t>(j)];
      if (kj == 0.0) continue;  // i*k_j factor vanishes
      for (const auto& [m, amp] : b.component(j)) {
        Mode out{k[0] + m[0], k[1] + m[1], k[2] + m[2]};
        if (!target.contains(out)) continue;  // Galerkin row drop
        op.mat(static_cast<Eigen::Index>(target.index(out)), static_cast<Eigen::Index>(col)) +=
            Complex(0.0, kj) * amp;
      }
    }
  }
  return op;
}

double antisymmetry_defect(const OperatorMatrix& B_gal) {
  DHOM_REQUIRE(B_gal.square(), "antisymmetry is defined for the square Galerkin form");
  const Eigen::Index n = B_gal.mat.rows();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      worst = std::max(worst, std::abs(B_gal.mat(i, j) + std::conj(B_gal.mat(j, i))));
    }
  }
  return worst;
}

AssembledOperators assemble_operators(const TrigVectorField& b, const ModeLattice& lat) {
  OperatorMatrix Bg = assemble_B(b, lat, false);
  OperatorMatrix Be = assemble_B(b, lat, true);
  RealRep rep(lat);
  RealRep rep_ext(Be.target);
  AssembledOperators ops{lat,
                         Be.target,
                         rep,
                         rep_ext,
                         assemble_A_diag(lat),
                         Bg.mat,
                         rep.op_to_real(Bg.mat, rep),
                         rep_ext.op_to_real(Be.mat, rep),
                         b.sup_bound(),
                         antisymmetry_defect(Bg),
                         b.divergence_defect()};
  return ops;
}

SpectralField apply_Ac(const AssembledOperators& ops, double c, const SpectralField& f) {
  DHOM_REQUIRE(f.lattice() == ops.lat, "field lattice does not match assembled operators");
  Eigen::VectorXcd out = ops.A_diag.cast<Complex>().cwiseProduct(f.coeffs());
  if (c != 0.0) out += c * (ops.B_gal * f.coeffs());
  return SpectralField(ops.lat, std::move(out));
}

}  // namespace dhom

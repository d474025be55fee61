#pragma once

#include <Eigen/Dense>

#include "dhom/drift.hpp"
#include "dhom/field.hpp"
#include "dhom/lattice.hpp"

namespace dhom {

// Dense operator between mode lattices; entry (target index, source index).
struct OperatorMatrix {
  ModeLattice source;
  ModeLattice target;
  Eigen::MatrixXcd mat;

  bool square() const { return source == target; }
};

// Diagonal diffusion generator: entry(k,k) = -|k|^2.
OperatorMatrix assemble_A(const ModeLattice& lat);
Eigen::VectorXd assemble_A_diag(const ModeLattice& lat);

// Drift operator B = b.grad as mode convolution: entry(k+m, k) += i k_j amp_j(m).
// extended=true targets truncation K+Kb with no back-projection (exact action on
// the source span); extended=false drops rows outside the source lattice (Galerkin).
OperatorMatrix assemble_B(const TrigVectorField& b, const ModeLattice& lat, bool extended);

// max |entry(k,l) + conj(entry(l,k))| for the square Galerkin form.
double antisymmetry_defect(const OperatorMatrix& B_gal);

// Everything the solver modules need, assembled once and shared read-only.
struct AssembledOperators {
  ModeLattice lat;      // Galerkin lattice
  ModeLattice lat_ext;  // extended target lattice (K + Kb)
  RealRep rep;
  RealRep rep_ext;
  Eigen::VectorXd A_diag;      // -|k|^2 per index (identical in real coordinates)
  Eigen::MatrixXcd B_gal;      // square Galerkin form
  Eigen::MatrixXd B_real;      // B_gal in real coordinates (antisymmetric)
  Eigen::MatrixXd B_ext_real;  // extended form in real coordinates
  double drift_sup;
  double antisym_defect;
  double divergence_defect;
};

AssembledOperators assemble_operators(const TrigVectorField& b, const ModeLattice& lat);

// (A + cB)f with B in Galerkin form.
SpectralField apply_Ac(const AssembledOperators& ops, double c, const SpectralField& f);

}  // namespace dhom

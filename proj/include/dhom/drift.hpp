#pragma once

#include <utility>
#include <vector>

#include "dhom/field.hpp"
#include "dhom/lattice.hpp"

namespace dhom {

// Divergence-free vector field with finitely many trigonometric modes per
// component. Each component is real-valued (Hermitian mode lists).
class TrigVectorField {
 public:
  using ModeList = std::vector<std::pair<Mode, Complex>>;

  TrigVectorField() : d_(0), Kb_(0) {}
  TrigVectorField(int d, std::vector<ModeList> components, double div_tol = 1e-12);

  int d() const { return d_; }
  // Largest |m_j| over all drift modes; the extended operator target needs K + Kb.
  int Kb() const { return Kb_; }
  const ModeList& component(int j) const { return comps_[static_cast<std::size_t>(j)]; }
  bool is_zero() const;

  // b(x) written into out[0..d-1].
  void eval(const double* x, double* out) const;

  // Upper bound for sup_x |b(x)| (Euclidean): sqrt(sum_j (sum_m |amp_j(m)|)^2).
  double sup_bound() const;

  // max over modes of |sum_j m_j amp_j(m)|; 0 for incompressible fields.
  double divergence_defect() const;

 private:
  int d_;
  int Kb_;
  std::vector<ModeList> comps_;
};

struct DivergenceReport {
  double max_defect;
  bool pass;
};
DivergenceReport validate_divergence_free(const TrigVectorField& b, double tol);

TrigVectorField drift_zero(int d);
// b = (0, sin x1, cos x1) on the 3-torus.
TrigVectorField drift_example3();
// Constant field (1, alpha) on the 2-torus; irrational alpha gives dense lines.
TrigVectorField drift_irrational(double alpha);
// b = (sin x2, -sin x1), the Hamiltonian flow of H = cos x1 + cos x2.
TrigVectorField drift_cellular2d();

}  // namespace dhom

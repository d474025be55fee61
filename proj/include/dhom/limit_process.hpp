#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dhom/resolvent.hpp"

namespace dhom {

// Compressed generator on the kernel: basis columns are plain-orthonormal and
// diagonalize it, eigenvalues descending (0 first for the constants).
struct LimitGenerator {
  ModeLattice lat;
  Eigen::MatrixXd basis;   // n x r
  Eigen::VectorXd evals;   // r, all <= ~1e-10
  double sym_defect;       // symmetry defect of <w_i, A w_j> before diagonalization

  std::size_t dim() const { return static_cast<std::size_t>(basis.cols()); }
};

LimitGenerator limit_generator(const AssembledOperators& ops, const KernelBasis& basis);

// Dense matrix of exp(t (A + cB)) in real coordinates.
Eigen::MatrixXd semigroup_matrix(const AssembledOperators& ops, double c, double t);
SpectralField apply_semigroup(const AssembledOperators& ops, double c, double t,
                              const SpectralField& g);
SpectralField apply_semigroup_matrix(const AssembledOperators& ops, const Eigen::MatrixXd& Tt,
                                     const SpectralField& g);

// Semigroup of the compressed generator; g must lie in the kernel span.
SpectralField apply_limit_semigroup(const LimitGenerator& gen, const RealRep& rep, double t,
                                    const SpectralField& g, double tol = 1e-8);

// Projection onto the kernel span followed by the limit semigroup; the
// projection defect is reported instead of enforced.
SpectralField project_then_evolve(const LimitGenerator& gen, const RealRep& rep, double t,
                                  const SpectralField& g, double* defect = nullptr);

// <u,v>_{H^1} restricted to kernel members (hard error outside the span).
double dirichlet_form(const LimitGenerator& gen, const RealRep& rep, const SpectralField& u,
                      const SpectralField& v, double tol = 1e-8);

struct DformRow {
  double lambda;
  double value;   // lambda <u - lambda R*_lambda u, v>
  double target;  // <u,v>_{H^1}
};
std::vector<DformRow> dform_limit_curve(const AssembledOperators& ops, const KernelBasis& basis,
                                        const LimitGenerator& gen, const SpectralField& u,
                                        const SpectralField& v,
                                        const std::vector<double>& lambda_list);

struct SemigroupRow {
  double c;
  double t;
  double dist;  // ||T_t^(c) psi - T*_t psi||
};
std::vector<SemigroupRow> semigroup_convergence_curve(const AssembledOperators& ops,
                                                      const LimitGenerator& gen,
                                                      const SpectralField& psi, double t,
                                                      const std::vector<double>& c_list);

}  // namespace dhom

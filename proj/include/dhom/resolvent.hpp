#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dhom/field.hpp"
#include "dhom/operators.hpp"

namespace dhom {

// Numerical kernel of the drift operator, extracted from the rectangular
// extended form so Galerkin-only spurious null vectors are excluded.
struct KernelBasis {
  ModeLattice lat;
  double lambda;               // weight used for the orthonormal basis below
  Eigen::MatrixXd plain;       // n x r, orthonormal in plain L2 (right singular vectors)
  Eigen::MatrixXd weighted;    // n x r, orthonormal in <.,.>_{1,lambda}; same span
  double sigma_max;
  double sigma_min_kept;       // smallest singular value above the cut (0 if none)
  double sigma_max_dropped;    // largest singular value below the cut (0 if none)
  bool ambiguous;              // some singular value within a decade of the cut

  std::size_t dim() const { return static_cast<std::size_t>(plain.cols()); }
  SpectralField weighted_field(const RealRep& rep, std::size_t j) const;
};

KernelBasis kernel_basis(const AssembledOperators& ops, double lambda, double rel_tol = 1e-8);

// Eigenstructure of L = (A - lambda)^{-1} B, symmetrized with
// D = diag(sqrt(lambda + |k|^2)): M = D L D^{-1} is real antisymmetric and iM is
// Hermitian. Eigenvalue nu of iM corresponds to the L-eigenvalue i*mu with
// mu = -nu; theta columns are <.,.>_{1,lambda}-orthonormal.
struct ModeDecomposition {
  double lambda;
  Eigen::VectorXd d_scale;     // sqrt(lambda + |k|^2) per index
  Eigen::VectorXd mu;          // nonzero frequencies, sorted by decreasing |mu|
  Eigen::MatrixXcd theta;      // eigenfields for mu (complexified real coordinates)
  Eigen::MatrixXcd theta_spurious;  // zero-frequency directions outside the true kernel
  Eigen::MatrixXcd theta_kernel;    // zero-frequency directions spanning the true kernel
  double zero_tol;
};

ModeDecomposition mode_decomposition(const AssembledOperators& ops, const KernelBasis& basis,
                                     double lambda);

// R_lambda^(c) g = -(A_c - lambda)^{-1} g by direct LU solve; residual checked.
SpectralField solve_resolvent(const AssembledOperators& ops, double c, double lambda,
                              const SpectralField& g);

// P_{1,lambda}: orthogonal projection onto the kernel span in <.,.>_{1,lambda}.
SpectralField project_1lambda(const SpectralField& f, const KernelBasis& basis,
                              const RealRep& rep);

// Plain-L2 projection onto the same span.
SpectralField project_plain(const SpectralField& f, const KernelBasis& basis, const RealRep& rep);

enum class LimitRoute { projection, spectral };

// R*_lambda g. Projection route: -P_{1,lambda} (A-lambda)^{-1} g.
// Spectral route: remove all nonzero-frequency and spurious-zero components of
// gamma = (A-lambda)^{-1} g in the symmetrized eigenbasis and negate the rest.
SpectralField limit_resolvent(const AssembledOperators& ops, const KernelBasis& basis,
                              double lambda, const SpectralField& g, LimitRoute route,
                              const ModeDecomposition* md = nullptr);

// -(gamma_0 + sum_k beta_k/(1+ic mu_k) theta_k) with gamma_0 the full
// zero-frequency part (true kernel plus spurious); equals the LU solve.
SpectralField finite_c_mode_formula(const AssembledOperators& ops, const ModeDecomposition& md,
                                    double c, const SpectralField& g);

// R*_lambda at an arbitrary positive weight. The kernel span does not depend on
// the weight, so one basis serves every lambda.
SpectralField limit_resolvent_any_weight(const AssembledOperators& ops, const KernelBasis& basis,
                                         double lambda, const SpectralField& g);

// Same kernel span re-orthonormalized at another lambda, reusing the SVD.
KernelBasis reweight_kernel_basis(const AssembledOperators& ops, const KernelBasis& base,
                                  double lambda);

// Deterministic pseudo-random real field with unit L2 norm (counter RNG, so
// (seed, index) fully determines the field).
SpectralField random_field(const ModeLattice& lat, std::uint64_t seed, std::uint64_t index);

struct LimitPropertyReport {
  double pseudo_resolvent_defect;  // ||(mu-lambda) R*_l R*_m g - R*_l g + R*_m g||
  double selfadjoint_defect;       // max |<R* f, h> - <f, R* h>| over probe pairs
  double contraction_margin;       // ||lambda R*_lambda g|| - ||g|| (should be <= 0)
  double markov_min;               // grid range of lambda R*_lambda g
  double markov_max;
  double kernel_orth_norm;         // ||R*_lambda g_perp|| for g_perp = g - P_plain g
};

LimitPropertyReport verify_limit_properties(const AssembledOperators& ops,
                                            const KernelBasis& basis, double lambda, double mu,
                                            const SpectralField& g,
                                            const std::vector<SpectralField>& probes,
                                            int grid_res);

struct ContinuityRow {
  double lambda;
  double dist_H;
  double dist_H1lambda;
};
// ||lambda R*_lambda g - g|| for g in the kernel span (hard error otherwise).
std::vector<ContinuityRow> strong_continuity_curve(const AssembledOperators& ops,
                                                   const KernelBasis& basis,
                                                   const SpectralField& g,
                                                   const std::vector<double>& lambda_list);

struct ConvergenceRow {
  double c;
  double dist_H;
  double dist_H1;  // H^1 seminorm of the difference
};
struct ConvergenceCurve {
  std::vector<ConvergenceRow> rows;
  double fit_slope;  // log-log slope over the positive-c entries (0 if < 2 points)
};
ConvergenceCurve convergence_curve(const AssembledOperators& ops, const KernelBasis& basis,
                                   double lambda, const SpectralField& g,
                                   const std::vector<double>& c_list);

// First-order optimality of the weighted projection: max_j |<psi* - gamma, v_j>_{1,lambda}|
// where psi* = -R*_lambda g and gamma = (A-lambda)^{-1} g.
double minimizer_check(const AssembledOperators& ops, const KernelBasis& basis, double lambda,
                       const SpectralField& g);

}  // namespace dhom

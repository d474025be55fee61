#include "dhom/limit_process.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace dhom {

namespace {

Eigen::VectorXd real_coords(const RealRep& rep, const SpectralField& f) {
  return rep.to_real(f.coeffs());
}

SpectralField field_from_real(const ModeLattice& lat, const RealRep& rep,
                              const Eigen::VectorXd& r) {
  return SpectralField(lat, rep.from_real(r));
}

}  // namespace

LimitGenerator limit_generator(const AssembledOperators& ops, const KernelBasis& basis) {
  const std::size_t n = ops.lat.size();
  const Eigen::Index r = basis.plain.cols();
  DHOM_REQUIRE(r > 0, "limit_generator: empty kernel basis");

  // Re-orthonormalize defensively; rank loss here means the basis was broken.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.plain);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(
                                              static_cast<Eigen::Index>(n), r);
  Eigen::MatrixXd rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < r; ++j) {
    DHOM_CHECK(std::abs(rfac(j, j)) > 1e-10, "limit_generator: kernel basis lost rank");
  }

  Eigen::MatrixXd aq = ops.A_diag.asDiagonal() * q;
  Eigen::MatrixXd m = q.transpose() * aq;
  const double sym_defect = (m - m.transpose()).cwiseAbs().maxCoeff();
  DHOM_CHECK(sym_defect <= 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()),
             "limit_generator: compressed generator is not symmetric");
  m = 0.5 * (m + m.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  DHOM_CHECK(eig.info() == Eigen::Success, "limit_generator: eigensolve failed");

  // SelfAdjointEigenSolver returns ascending order; flip to put 0 first.
  LimitGenerator gen;
  gen.lat = ops.lat;
  gen.evals = eig.eigenvalues().reverse();
  gen.basis = q * eig.eigenvectors().rowwise().reverse();
  gen.sym_defect = sym_defect;
  DHOM_CHECK(gen.evals.maxCoeff() <= 1e-10, "limit_generator: positive eigenvalue");
  return gen;
}

Eigen::MatrixXd semigroup_matrix(const AssembledOperators& ops, double c, double t) {
  DHOM_REQUIRE(t >= 0.0, "semigroup_matrix: t must be nonnegative");
  const Eigen::Index n = static_cast<Eigen::Index>(ops.lat.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  if (c != 0.0) m = c * ops.B_real;
  m.diagonal() += ops.A_diag;
  Eigen::MatrixXd tm = t * m;
  return tm.exp();
}

SpectralField apply_semigroup_matrix(const AssembledOperators& ops, const Eigen::MatrixXd& Tt,
                                     const SpectralField& g) {
  DHOM_REQUIRE(g.lattice().size() == ops.lat.size(), "apply_semigroup: lattice mismatch");
  Eigen::VectorXd r = real_coords(ops.rep, g);
  return field_from_real(ops.lat, ops.rep, (Tt * r).eval());
}

SpectralField apply_semigroup(const AssembledOperators& ops, double c, double t,
                              const SpectralField& g) {
  return apply_semigroup_matrix(ops, semigroup_matrix(ops, c, t), g);
}

SpectralField apply_limit_semigroup(const LimitGenerator& gen, const RealRep& rep, double t,
                                    const SpectralField& g, double tol) {
  DHOM_REQUIRE(t >= 0.0, "apply_limit_semigroup: t must be nonnegative");
  Eigen::VectorXd r = real_coords(rep, g);
  Eigen::VectorXd coords = gen.basis.transpose() * r;
  const double defect = (r - gen.basis * coords).norm();
  DHOM_REQUIRE(defect <= tol * (1.0 + r.norm()),
               "apply_limit_semigroup: input is not in the kernel span");
  Eigen::VectorXd scale = (t * gen.evals.array()).exp();
  return field_from_real(gen.lat, rep, (gen.basis * (scale.asDiagonal() * coords)).eval());
}

SpectralField project_then_evolve(const LimitGenerator& gen, const RealRep& rep, double t,
                                  const SpectralField& g, double* defect) {
  DHOM_REQUIRE(t >= 0.0, "project_then_evolve: t must be nonnegative");
  Eigen::VectorXd r = real_coords(rep, g);
  Eigen::VectorXd coords = gen.basis.transpose() * r;
  if (defect != nullptr) {
    const double rn = r.norm();
    *defect = (r - gen.basis * coords).norm() / (rn > 0.0 ? rn : 1.0);
  }
  Eigen::VectorXd scale = (t * gen.evals.array()).exp();
  return field_from_real(gen.lat, rep, (gen.basis * (scale.asDiagonal() * coords)).eval());
}

double dirichlet_form(const LimitGenerator& gen, const RealRep& rep, const SpectralField& u,
                      const SpectralField& v, double tol) {
  for (const SpectralField* f : {&u, &v}) {
    Eigen::VectorXd r = real_coords(rep, *f);
    Eigen::VectorXd coords = gen.basis.transpose() * r;
    const double defect = (r - gen.basis * coords).norm();
    DHOM_REQUIRE(defect <= tol * (1.0 + r.norm()),
                 "dirichlet_form: argument is not in the kernel span");
  }
  return inner_h1(u, v);
}

std::vector<DformRow> dform_limit_curve(const AssembledOperators& ops, const KernelBasis& basis,
                                        const LimitGenerator& gen, const SpectralField& u,
                                        const SpectralField& v,
                                        const std::vector<double>& lambda_list) {
  const double target = dirichlet_form(gen, ops.rep, u, v);
  std::vector<DformRow> rows;
  rows.reserve(lambda_list.size());
  for (double lambda : lambda_list) {
    SpectralField ru = limit_resolvent_any_weight(ops, basis, lambda, u);
    SpectralField e = u - (lambda * ru);
    rows.push_back({lambda, lambda * inner(e, v), target});
  }
  return rows;
}

std::vector<SemigroupRow> semigroup_convergence_curve(const AssembledOperators& ops,
                                                      const LimitGenerator& gen,
                                                      const SpectralField& psi, double t,
                                                      const std::vector<double>& c_list) {
  SpectralField limit = apply_limit_semigroup(gen, ops.rep, t, psi);
  std::vector<SemigroupRow> rows;
  rows.reserve(c_list.size());
  for (double c : c_list) {
    SpectralField finite = apply_semigroup(ops, c, t, psi);
    rows.push_back({c, t, norm_l2(finite - limit)});
  }
  return rows;
}

}  // namespace dhom

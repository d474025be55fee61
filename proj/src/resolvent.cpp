#include "dhom/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dhom/rng.hpp"

namespace dhom {

namespace {

Eigen::VectorXd weight_vector(const ModeLattice& lat, double lambda) {
  const auto n = static_cast<Eigen::Index>(lat.size());
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = lat.sq_norm(static_cast<std::size_t>(i)) + lambda;
  return w;
}

// Real vector -> field, asserting the complex reassembly stays Hermitian-clean.
SpectralField field_of_real(const RealRep& rep, const Eigen::VectorXd& x) {
  return SpectralField(rep.lattice(), rep.from_real(x));
}

// Takes a complex vector in complexified real coordinates, checks the imaginary
// residue, and returns the real part as a field.
SpectralField field_of_complexified(const RealRep& rep, const Eigen::VectorXcd& x,
                                    double scale) {
  const double imag = x.imag().cwiseAbs().maxCoeff();
  DHOM_CHECK(imag <= 1e-8 * (1.0 + scale),
             "complexified result has non-negligible imaginary part");
  return field_of_real(rep, x.real());
}

// Compressed generator on the plain-orthonormal kernel basis: G = N^T diag(A) N.
Eigen::MatrixXd compressed_generator(const AssembledOperators& ops, const KernelBasis& basis) {
  return basis.plain.transpose() * ops.A_diag.asDiagonal() * basis.plain;
}

// R*_lambda g = N (lambda I - G)^{-1} N^T g, usable at any positive weight.
Eigen::VectorXd limit_apply_plain(const AssembledOperators& ops, const KernelBasis& basis,
                                  double lambda, const Eigen::VectorXd& g_real) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  const Eigen::MatrixXd G = compressed_generator(ops, basis);
  const auto r = G.rows();
  const Eigen::MatrixXd M = lambda * Eigen::MatrixXd::Identity(r, r) - G;
  const Eigen::VectorXd y = M.llt().solve(basis.plain.transpose() * g_real);
  return basis.plain * y;
}

}  // namespace

SpectralField KernelBasis::weighted_field(const RealRep& rep, std::size_t j) const {
  DHOM_REQUIRE(j < dim(), "basis index out of range");
  return field_of_real(rep, weighted.col(static_cast<Eigen::Index>(j)));
}

KernelBasis kernel_basis(const AssembledOperators& ops, double lambda, double rel_tol) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  const auto n = static_cast<Eigen::Index>(ops.lat.size());

  Eigen::MatrixXd null_plain;
  double sigma_max = 0.0, sigma_min_kept = 0.0, sigma_max_dropped = 0.0;
  bool ambiguous = false;

  if (ops.B_ext_real.cwiseAbs().maxCoeff() == 0.0) {
    null_plain = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(ops.B_ext_real, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    sigma_max = sv[0];
    const double tau = rel_tol * sigma_max;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > tau) {
        rank = i + 1;
        sigma_min_kept = sv[i];
      } else {
        sigma_max_dropped = std::max(sigma_max_dropped, sv[i]);
      }
      if (sv[i] >= tau / 10.0 && sv[i] <= tau * 10.0) ambiguous = true;
    }
    const Eigen::Index r = sv.size() - rank;
    DHOM_CHECK(r > 0, "drift operator has an empty numerical kernel (constants expected)");
    null_plain = svd.matrixV().rightCols(r);
  }

  // Orthonormalize in <.,.>_{1,lambda}: QR of D*N, then map back with D^{-1}.
  const Eigen::VectorXd w = weight_vector(ops.lat, lambda);
  const Eigen::VectorXd dsqrt = w.cwiseSqrt();
  const Eigen::MatrixXd scaled = dsqrt.asDiagonal() * null_plain;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
  Eigen::MatrixXd thinQ =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, null_plain.cols());
  Eigen::MatrixXd weighted = dsqrt.cwiseInverse().asDiagonal() * thinQ;

  return KernelBasis{ops.lat,    lambda,         std::move(null_plain), std::move(weighted),
                     sigma_max,  sigma_min_kept, sigma_max_dropped,     ambiguous};
}

SpectralField random_field(const ModeLattice& lat, std::uint64_t seed, std::uint64_t index) {
  const CounterRng rng{seed};
  const auto n = static_cast<Eigen::Index>(lat.size());
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
  const std::size_t ctr = lat.center_index();
  c[static_cast<Eigen::Index>(ctr)] = Complex(2.0 * rng.uniform01(index, ctr, 0, 40) - 1.0, 0.0);
  for (std::size_t idx = ctr + 1; idx < lat.size(); ++idx) {
    const Complex v(2.0 * rng.uniform01(index, idx, 0, 40) - 1.0,
                    2.0 * rng.uniform01(index, idx, 1, 40) - 1.0);
    c[static_cast<Eigen::Index>(idx)] = v;
    c[static_cast<Eigen::Index>(lat.negate_index(idx))] = std::conj(v);
  }
  const double nrm = c.norm();
  DHOM_CHECK(nrm > 0.0, "random field degenerated to zero");
  c /= nrm;
  return SpectralField(lat, std::move(c));
}

KernelBasis reweight_kernel_basis(const AssembledOperators& ops, const KernelBasis& base,
                                  double lambda) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  DHOM_REQUIRE(base.lat == ops.lat, "kernel basis lattice mismatch");
  const auto n = static_cast<Eigen::Index>(ops.lat.size());
  KernelBasis out = base;
  out.lambda = lambda;
  const Eigen::VectorXd w = weight_vector(ops.lat, lambda);
  const Eigen::VectorXd dsqrt = w.cwiseSqrt();
  const Eigen::MatrixXd scaled = dsqrt.asDiagonal() * base.plain;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
  Eigen::MatrixXd thinQ = qr.householderQ() * Eigen::MatrixXd::Identity(n, base.plain.cols());
  out.weighted = dsqrt.cwiseInverse().asDiagonal() * thinQ;
  return out;
}

ModeDecomposition mode_decomposition(const AssembledOperators& ops, const KernelBasis& basis,
                                     double lambda) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  const auto n = static_cast<Eigen::Index>(ops.lat.size());
  const Eigen::VectorXd w = weight_vector(ops.lat, lambda);
  const Eigen::VectorXd d = w.cwiseSqrt();
  const Eigen::VectorXd dinv = d.cwiseInverse();

  // M = -D^{-1} B D^{-1} is real antisymmetric; decompose the Hermitian iM.
  const Eigen::MatrixXd M = -(dinv.asDiagonal() * ops.B_real * dinv.asDiagonal());
  Eigen::MatrixXcd H = Complex(0.0, 1.0) * M.cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H);
  DHOM_CHECK(eig.info() == Eigen::Success, "eigendecomposition failed");
  const Eigen::VectorXd nu = eig.eigenvalues();
  const Eigen::MatrixXcd& Q = eig.eigenvectors();

  const double nu_scale = std::max(1.0, nu.cwiseAbs().maxCoeff());
  const double zero_tol = 1e-10 * nu_scale;

  std::vector<Eigen::Index> zero_idx, mode_idx;
  for (Eigen::Index i = 0; i < n; ++i) {
    (std::abs(nu[i]) <= zero_tol ? zero_idx : mode_idx).push_back(i);
  }
  std::sort(mode_idx.begin(), mode_idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double da = std::abs(nu[a]), db = std::abs(nu[b]);
    if (da != db) return da > db;
    return a < b;
  });

  const auto r = static_cast<Eigen::Index>(basis.dim());
  const auto z = static_cast<Eigen::Index>(zero_idx.size());
  DHOM_CHECK(z >= r, "zero eigenspace smaller than the extracted kernel");

  Eigen::MatrixXcd Z(n, z);
  for (Eigen::Index j = 0; j < z; ++j) Z.col(j) = Q.col(zero_idx[static_cast<std::size_t>(j)]);

  // True kernel directions in the symmetrized coordinates.
  Eigen::MatrixXd Dk = d.asDiagonal() * basis.plain;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Dk);
  Eigen::MatrixXd Zt = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);

  // Spurious zero directions: the part of Z orthogonal to the true kernel.
  Eigen::MatrixXcd theta_spurious(n, 0);
  if (z > r) {
    Eigen::MatrixXcd Y = Z - Zt.cast<Complex>() * (Zt.transpose().cast<Complex>() * Z);
    Eigen::JacobiSVD<Eigen::MatrixXcd> ysvd(Y, Eigen::ComputeThinU);
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < ysvd.singularValues().size(); ++i) {
      if (ysvd.singularValues()[i] > 0.5) ++cnt;
    }
    DHOM_CHECK(cnt == z - r, "zero eigenspace does not split cleanly into kernel + spurious");
    theta_spurious = dinv.asDiagonal() * ysvd.matrixU().leftCols(cnt);
  }

  ModeDecomposition md;
  md.lambda = lambda;
  md.d_scale = d;
  md.zero_tol = zero_tol;
  md.mu.resize(static_cast<Eigen::Index>(mode_idx.size()));
  md.theta.resize(n, static_cast<Eigen::Index>(mode_idx.size()));
  for (std::size_t j = 0; j < mode_idx.size(); ++j) {
    md.mu[static_cast<Eigen::Index>(j)] = -nu[mode_idx[j]];
    md.theta.col(static_cast<Eigen::Index>(j)) = dinv.asDiagonal() * Q.col(mode_idx[j]);
  }
  md.theta_spurious = std::move(theta_spurious);
  md.theta_kernel = dinv.asDiagonal() * Zt.cast<Complex>();
  return md;
}

SpectralField solve_resolvent(const AssembledOperators& ops, double c, double lambda,
                              const SpectralField& g) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  DHOM_REQUIRE(g.lattice() == ops.lat, "field lattice does not match assembled operators");
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());
  Eigen::MatrixXd M = c * ops.B_real;
  M.diagonal() += ops.A_diag;
  M.diagonal().array() -= lambda;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::VectorXd x = lu.solve(-g_real);
  const double resid = (M * x + g_real).norm();
  DHOM_CHECK(resid <= 1e-10 * (1.0 + g_real.norm()), "resolvent solve residual too large");
  return field_of_real(ops.rep, x);
}

SpectralField project_1lambda(const SpectralField& f, const KernelBasis& basis,
                              const RealRep& rep) {
  DHOM_REQUIRE(f.lattice() == basis.lat, "field lattice does not match kernel basis");
  const Eigen::VectorXd w = weight_vector(basis.lat, basis.lambda);
  const Eigen::VectorXd f_real = rep.to_real(f.coeffs());
  const Eigen::VectorXd coords = basis.weighted.transpose() * w.cwiseProduct(f_real).matrix();
  return field_of_real(rep, basis.weighted * coords);
}

SpectralField project_plain(const SpectralField& f, const KernelBasis& basis,
                            const RealRep& rep) {
  DHOM_REQUIRE(f.lattice() == basis.lat, "field lattice does not match kernel basis");
  const Eigen::VectorXd f_real = rep.to_real(f.coeffs());
  return field_of_real(rep, basis.plain * (basis.plain.transpose() * f_real));
}

SpectralField limit_resolvent(const AssembledOperators& ops, const KernelBasis& basis,
                              double lambda, const SpectralField& g, LimitRoute route,
                              const ModeDecomposition* md) {
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  DHOM_REQUIRE(g.lattice() == ops.lat, "field lattice does not match assembled operators");
  DHOM_REQUIRE(lambda == basis.lambda, "kernel basis was orthonormalized at a different lambda");
  const Eigen::VectorXd w = weight_vector(ops.lat, lambda);
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());
  const Eigen::VectorXd gamma = -g_real.cwiseQuotient(w);

  if (route == LimitRoute::projection) {
    const SpectralField gamma_field = field_of_real(ops.rep, gamma);
    SpectralField proj = project_1lambda(gamma_field, basis, ops.rep);
    return -1.0 * proj;
  }

  DHOM_REQUIRE(md != nullptr, "spectral route requires a mode decomposition");
  DHOM_REQUIRE(md->lambda == lambda, "mode decomposition was built at a different lambda");
  // Remove every non-kernel component of gamma in the <.,.>_{1,lambda} frame.
  const Eigen::VectorXcd wgamma = w.cwiseProduct(gamma).cast<Complex>();
  Eigen::VectorXcd resid = gamma.cast<Complex>();
  if (md->theta.cols() > 0) resid -= md->theta * (md->theta.adjoint() * wgamma);
  if (md->theta_spurious.cols() > 0) {
    const Eigen::VectorXcd wr = w.cast<Complex>().cwiseProduct(resid);
    resid -= md->theta_spurious * (md->theta_spurious.adjoint() * wr);
  }
  return -1.0 * field_of_complexified(ops.rep, resid, gamma.norm());
}

SpectralField finite_c_mode_formula(const AssembledOperators& ops, const ModeDecomposition& md,
                                    double c, const SpectralField& g) {
  DHOM_REQUIRE(g.lattice() == ops.lat, "field lattice does not match assembled operators");
  const Eigen::VectorXcd g_real = ops.rep.to_real(g.coeffs()).cast<Complex>();

  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(g_real.size());
  acc += md.theta_kernel * (md.theta_kernel.adjoint() * g_real);
  if (md.theta_spurious.cols() > 0) {
    acc += md.theta_spurious * (md.theta_spurious.adjoint() * g_real);
  }
  if (md.theta.cols() > 0) {
    Eigen::VectorXcd beta = md.theta.adjoint() * g_real;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      beta[j] /= Complex(1.0, c * md.mu[j]);
    }
    acc += md.theta * beta;
  }
  return field_of_complexified(ops.rep, acc, g_real.norm());
}

SpectralField limit_resolvent_any_weight(const AssembledOperators& ops, const KernelBasis& basis,
                                         double lambda, const SpectralField& g) {
  DHOM_REQUIRE(g.lattice() == ops.lat, "field lattice does not match assembled operators");
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());
  return field_of_real(ops.rep, limit_apply_plain(ops, basis, lambda, g_real));
}

LimitPropertyReport verify_limit_properties(const AssembledOperators& ops,
                                            const KernelBasis& basis, double lambda, double mu,
                                            const SpectralField& g,
                                            const std::vector<SpectralField>& probes,
                                            int grid_res) {
  DHOM_REQUIRE(lambda > 0.0 && mu > 0.0 && lambda != mu, "need distinct positive weights");
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());

  const Eigen::VectorXd rl = limit_apply_plain(ops, basis, lambda, g_real);
  const Eigen::VectorXd rm = limit_apply_plain(ops, basis, mu, g_real);
  const Eigen::VectorXd rlm = limit_apply_plain(ops, basis, lambda, rm);

  LimitPropertyReport rep{};
  rep.pseudo_resolvent_defect = ((mu - lambda) * rlm - rl + rm).norm();

  rep.selfadjoint_defect = 0.0;
  std::vector<Eigen::VectorXd> pr, rpr;
  for (const auto& p : probes) {
    pr.push_back(ops.rep.to_real(p.coeffs()));
    rpr.push_back(limit_apply_plain(ops, basis, lambda, pr.back()));
  }
  for (std::size_t i = 0; i < pr.size(); ++i) {
    for (std::size_t j = 0; j < pr.size(); ++j) {
      rep.selfadjoint_defect =
          std::max(rep.selfadjoint_defect, std::abs(rpr[i].dot(pr[j]) - pr[i].dot(rpr[j])));
    }
  }

  rep.contraction_margin = lambda * rl.norm() - g_real.norm();

  const GridField grid = eval_on_grid(field_of_real(ops.rep, lambda * rl), grid_res);
  rep.markov_min = grid.values.minCoeff();
  rep.markov_max = grid.values.maxCoeff();

  const Eigen::VectorXd perp = g_real - basis.plain * (basis.plain.transpose() * g_real);
  rep.kernel_orth_norm = limit_apply_plain(ops, basis, lambda, perp).norm();
  return rep;
}

std::vector<ContinuityRow> strong_continuity_curve(const AssembledOperators& ops,
                                                   const KernelBasis& basis,
                                                   const SpectralField& g,
                                                   const std::vector<double>& lambda_list) {
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());
  const double defect = (g_real - basis.plain * (basis.plain.transpose() * g_real)).norm();
  DHOM_CHECK(defect <= 1e-8 * (1.0 + g_real.norm()),
             "field is not in the kernel span (strong continuity undefined)");

  std::vector<ContinuityRow> rows;
  for (const double lam : lambda_list) {
    const Eigen::VectorXd rl = limit_apply_plain(ops, basis, lam, g_real);
    const SpectralField err = field_of_real(ops.rep, lam * rl - g_real);
    rows.push_back({lam, norm_l2(err), std::sqrt(inner_h1_lambda(err, err, lam))});
  }
  return rows;
}

ConvergenceCurve convergence_curve(const AssembledOperators& ops, const KernelBasis& basis,
                                   double lambda, const SpectralField& g,
                                   const std::vector<double>& c_list) {
  // Weight-independent evaluation so one basis serves every lambda in the list.
  const SpectralField star = limit_resolvent_any_weight(ops, basis, lambda, g);
  ConvergenceCurve curve;
  for (const double c : c_list) {
    const SpectralField diff = solve_resolvent(ops, c, lambda, g) - star;
    curve.rows.push_back({c, norm_l2(diff), sobolev_norm(diff, 1)});
  }
  std::vector<double> lx, ly;
  for (const auto& row : curve.rows) {
    if (row.c > 0.0 && row.dist_H > 1e-13) {
      lx.push_back(std::log(row.c));
      ly.push_back(std::log(row.dist_H));
    }
  }
  curve.fit_slope = 0.0;
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    const double sx = std::accumulate(lx.begin(), lx.end(), 0.0);
    const double sy = std::accumulate(ly.begin(), ly.end(), 0.0);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    curve.fit_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return curve;
}

double minimizer_check(const AssembledOperators& ops, const KernelBasis& basis, double lambda,
                       const SpectralField& g) {
  DHOM_REQUIRE(lambda == basis.lambda, "kernel basis was orthonormalized at a different lambda");
  const Eigen::VectorXd w = weight_vector(ops.lat, lambda);
  const Eigen::VectorXd g_real = ops.rep.to_real(g.coeffs());
  const Eigen::VectorXd gamma = -g_real.cwiseQuotient(w);
  const SpectralField star = limit_resolvent(ops, basis, lambda, g, LimitRoute::projection);
  const Eigen::VectorXd psi = -ops.rep.to_real(star.coeffs());
  const Eigen::VectorXd defects = basis.weighted.transpose() * w.cwiseProduct(psi - gamma).matrix();
  return defects.cwiseAbs().maxCoeff();
}

}  // namespace dhom

#include "dhom/lattice.hpp"

#include <cmath>

namespace dhom {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Eigen::VectorXd RealRep::to_real(const Eigen::VectorXcd& c, double herm_tol) const {
  const std::size_t n = dim();
  DHOM_REQUIRE(static_cast<std::size_t>(c.size()) == n, "coefficient size mismatch");
  const std::size_t ctr = lat_.center_index();
  const double scale = 1.0 + c.cwiseAbs().maxCoeff();
  Eigen::VectorXd r(n);
  double defect = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t mir = lat_.negate_index(idx);
    if (idx == ctr) {
      defect = std::max(defect, std::abs(c[idx].imag()));
      r[idx] = c[idx].real();
    } else if (idx > mir) {
      const Complex avg = 0.5 * (c[idx] + std::conj(c[mir]));
      defect = std::max(defect, std::abs(c[idx] - avg));
      r[idx] = kSqrt2 * avg.real();
      r[mir] = kSqrt2 * avg.imag();
    }
  }
  DHOM_CHECK(defect <= herm_tol * scale, "Hermitian symmetry defect above tolerance");
  return r;
}

Eigen::VectorXcd RealRep::from_real(const Eigen::VectorXd& r) const {
  const std::size_t n = dim();
  DHOM_REQUIRE(static_cast<std::size_t>(r.size()) == n, "real coordinate size mismatch");
  const std::size_t ctr = lat_.center_index();
  Eigen::VectorXcd c(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t mir = lat_.negate_index(idx);
    if (idx == ctr) {
      c[idx] = Complex(r[idx], 0.0);
    } else if (idx > mir) {
      c[idx] = Complex(r[idx] / kSqrt2, r[mir] / kSqrt2);
      c[mir] = std::conj(c[idx]);
    }
  }
  return c;
}

Eigen::MatrixXd RealRep::op_to_real(const Eigen::MatrixXcd& op, const RealRep& source) const {
  const std::size_t nt = dim();
  const std::size_t ns = source.dim();
  DHOM_REQUIRE(static_cast<std::size_t>(op.rows()) == nt &&
                   static_cast<std::size_t>(op.cols()) == ns,
               "operator shape mismatch");
  const std::size_t ctr_s = source.lattice().center_index();
  const std::size_t ctr_t = lat_.center_index();
  const double scale = 1.0 + op.cwiseAbs().maxCoeff();

  Eigen::MatrixXd out(nt, ns);
  Eigen::VectorXcd y(nt);
  double imag_defect = 0.0;
  const Complex inv_sqrt2(1.0 / kSqrt2, 0.0);
  const Complex i_inv_sqrt2(0.0, 1.0 / kSqrt2);
  for (std::size_t q = 0; q < ns; ++q) {
    const std::size_t mir = source.lattice().negate_index(q);
    if (q == ctr_s) {
      y = op.col(q);
    } else if (q > mir) {
      y = inv_sqrt2 * op.col(q) + inv_sqrt2 * op.col(mir);
    } else {
      // imaginary slot of the mode at negate_index(q)
      y = i_inv_sqrt2 * op.col(mir) - i_inv_sqrt2 * op.col(q);
    }
    for (std::size_t p = 0; p < nt; ++p) {
      const std::size_t pm = lat_.negate_index(p);
      if (p == ctr_t) {
        imag_defect = std::max(imag_defect, std::abs(y[p].imag()));
        out(p, q) = y[p].real();
      } else if (p > pm) {
        const Complex avg = 0.5 * (y[p] + std::conj(y[pm]));
        imag_defect = std::max(imag_defect, std::abs(y[p] - avg));
        out(p, q) = kSqrt2 * avg.real();
        out(pm, q) = kSqrt2 * avg.imag();
      }
    }
  }
  DHOM_CHECK(imag_defect <= 1e-9 * scale,
             "operator does not preserve real fields (realification defect)");
  return out;
}

Eigen::VectorXd RealRep::mode_weights(const std::function<double(double)>& w) const {
  const std::size_t n = dim();
  Eigen::VectorXd out(n);
  for (std::size_t idx = 0; idx < n; ++idx) out[idx] = w(lat_.sq_norm(idx));
  return out;
}

}  // namespace dhom

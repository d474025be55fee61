// Spectral fields (truncated Fourier series of real functions) and grid
// samples.  Real-field operations treat an imaginary residue above 1e-12
// (relative) as a hard error.
#pragma once

#include <complex>
#include <iosfwd>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dhom/lattice.hpp"

namespace dhom {

using Complex = std::complex<double>;

struct GridField {
  int d = 0;
  int res = 0;             // points per axis, x_j = 2*pi*i/res
  Eigen::VectorXd values;  // linear index with axis 0 slowest (row-major)

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

class SpectralField {
 public:
  SpectralField() = default;
  // Validates Hermitian symmetry: coeff(-k) == conj(coeff(k)) within tol.
  SpectralField(const ModeLattice& lat, Eigen::VectorXcd coeffs, double tol = 1e-12);

  static SpectralField zero(const ModeLattice& lat);
  // Field from a sparse list of (mode, coefficient); the conjugate mode must
  // be supplied explicitly (both halves), e.g. cos x1 = {(+e1,1/2),(-e1,1/2)}.
  static SpectralField from_modes(const ModeLattice& lat,
                                  const std::vector<std::pair<Mode, Complex>>& entries);

  const ModeLattice& lattice() const { return lat_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Complex coeff(const Mode& k) const;

  double value_at(const double* x) const;  // direct summation (skips zeros)

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  ModeLattice lat_;
  Eigen::VectorXcd coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField f);

// Evaluation on the uniform grid {2*pi*i/res}^d via separable partial
// transforms.  res must be >= 2K+1 per axis.
GridField eval_on_grid(const SpectralField& f, int res);

// Restriction of the grid DFT to the lattice.  Hermitian symmetry is
// enforced by symmetrization; the defect before symmetrization is written
// to *herm_defect when non-null.  Rejects non-finite input values.
SpectralField field_from_grid(const GridField& g, const ModeLattice& lat,
                              double* herm_defect = nullptr);

// L2(pi) inner product: sum_k f_k conj(h_k).
double inner(const SpectralField& f, const SpectralField& h);

// Weighted product <f,h>_{1,lambda} = sum_k (|k|^2 + lambda) f_k conj(h_k).
double inner_h1_lambda(const SpectralField& f, const SpectralField& h, double lambda);

// H^1 pairing sum_k |k|^2 f_k conj(h_k) (gradient form; constants drop out).
double inner_h1(const SpectralField& f, const SpectralField& h);

// sqrt(sum |coeff|^2 |k|^{2m}); the k=0 mode is included only for m=0.
double sobolev_norm(const SpectralField& f, int m);

double norm_l2(const SpectralField& f);

// Serialization: JSON {d, K, coeffs: [[k...], re, im]}, CSV "x1,..,xd,value".
nlohmann::ordered_json field_to_json(const SpectralField& f);
SpectralField field_from_json(const nlohmann::ordered_json& j);
void grid_to_csv(const GridField& g, std::ostream& os);
GridField grid_from_csv(std::istream& is, int d, int res);

}  // namespace dhom

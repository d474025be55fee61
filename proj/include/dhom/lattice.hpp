// Mode lattice for trigonometric polynomials on the flat torus [0,2pi)^d.
// Modes k with |k_j| <= K are enumerated lexicographically; the enumeration
// is fixed so that index(-k) == size()-1-index(k) (negation is a mirror).
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dhom {

using Complex = std::complex<double>;

#define DHOM_REQUIRE(cond, msg)                                          \
  do {                                                                   \
    if (!(cond)) throw std::invalid_argument(std::string("dhom: ") + msg); \
  } while (0)

#define DHOM_CHECK(cond, msg)                                            \
  do {                                                                   \
    if (!(cond)) throw std::runtime_error(std::string("dhom: ") + msg);  \
  } while (0)

using Mode = std::array<int, 3>;  // trailing components zero when d < 3

class ModeLattice {
 public:
  ModeLattice() : d_(0), K_(0) {}
  ModeLattice(int d, int K) : d_(d), K_(K) {
    DHOM_REQUIRE(d >= 1 && d <= 3, "lattice dimension must be 1, 2 or 3");
    DHOM_REQUIRE(K >= 1, "lattice truncation K must be positive");
  }

  int d() const { return d_; }
  int K() const { return K_; }
  int side() const { return 2 * K_ + 1; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int j = 0; j < d_; ++j) s *= static_cast<std::size_t>(side());
    return s;
  }

  bool contains(const Mode& k) const {
    for (int j = 0; j < d_; ++j)
      if (k[j] < -K_ || k[j] > K_) return false;
    for (int j = d_; j < 3; ++j)
      if (k[j] != 0) return false;
    return true;
  }

  std::size_t index(const Mode& k) const {
    DHOM_REQUIRE(contains(k), "mode outside lattice");
    std::size_t idx = 0;
    for (int j = 0; j < d_; ++j) idx = idx * side() + static_cast<std::size_t>(k[j] + K_);
    return idx;
  }

  Mode mode(std::size_t idx) const {
    DHOM_REQUIRE(idx < size(), "mode index out of range");
    Mode k{0, 0, 0};
    for (int j = d_ - 1; j >= 0; --j) {
      k[j] = static_cast<int>(idx % side()) - K_;
      idx /= side();
    }
    return k;
  }

  std::size_t negate_index(std::size_t idx) const { return size() - 1 - idx; }
  std::size_t center_index() const { return (size() - 1) / 2; }

  double sq_norm(std::size_t idx) const {
    Mode k = mode(idx);
    double s = 0;
    for (int j = 0; j < d_; ++j) s += double(k[j]) * double(k[j]);
    return s;
  }

  bool operator==(const ModeLattice& o) const { return d_ == o.d_ && K_ == o.K_; }
  bool operator!=(const ModeLattice& o) const { return !(*this == o); }

 private:
  int d_;
  int K_;
};

// Real coordinates for Hermitian-symmetric coefficient vectors.  With the
// mirror enumeration, indices above the center form a half lattice; a real
// field is the center coefficient plus (sqrt2*Re, sqrt2*Im) per half mode.
// The map is an isometry for every inner product with even mode weights, so
// all downstream factorizations (SVD/QR/eig/LU/expm) run on real matrices.
class RealRep {
 public:
  RealRep() = default;
  explicit RealRep(const ModeLattice& lat) : lat_(lat) {}

  const ModeLattice& lattice() const { return lat_; }
  std::size_t dim() const { return lat_.size(); }

  Eigen::VectorXd to_real(const Eigen::VectorXcd& c, double herm_tol = 1e-9) const;
  Eigen::VectorXcd from_real(const Eigen::VectorXd& r) const;

  // Transforms a complex operator matrix (rows: target lattice, cols: source
  // lattice) that maps real fields to real fields into real coordinates.
  Eigen::MatrixXd op_to_real(const Eigen::MatrixXcd& op, const RealRep& source) const;

  // Diagonal of a mode-weight w(|k|^2) in real coordinates (weights are even
  // in k, so pairs share an entry).
  Eigen::VectorXd mode_weights(const std::function<double(double)>& w) const;

 private:
  ModeLattice lat_;
};

}  // namespace dhom

#include "dhom/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dhom {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Contracts one tensor axis against a dense matrix P: out(a,x,b) = sum_m P(x,m) in(a,m,b).
// shape holds the current extent of every axis; axis' extent becomes P.rows().
Eigen::VectorXcd contract_axis(const Eigen::VectorXcd& in, std::array<int, 3>& shape, int d,
                               int axis, const Eigen::MatrixXcd& P) {
  int pre = 1, post = 1;
  for (int j = 0; j < axis; ++j) pre *= shape[j];
  for (int j = axis + 1; j < d; ++j) post *= shape[j];
  const int mid = shape[axis];
  const int nx = static_cast<int>(P.rows());
  DHOM_REQUIRE(static_cast<int>(P.cols()) == mid, "contraction extent mismatch");

  Eigen::VectorXcd out(static_cast<std::size_t>(pre) * nx * post);
  for (int a = 0; a < pre; ++a) {
    const std::size_t in_base = static_cast<std::size_t>(a) * mid * post;
    const std::size_t out_base = static_cast<std::size_t>(a) * nx * post;
    for (int x = 0; x < nx; ++x) {
      for (int b = 0; b < post; ++b) out[out_base + static_cast<std::size_t>(x) * post + b] = 0.0;
      for (int m = 0; m < mid; ++m) {
        const Complex w = P(x, m);
        if (w == Complex(0.0, 0.0)) continue;
        const std::size_t src = in_base + static_cast<std::size_t>(m) * post;
        const std::size_t dst = out_base + static_cast<std::size_t>(x) * post;
        for (int b = 0; b < post; ++b) out[dst + b] += w * in[src + b];
      }
    }
  }
  shape[axis] = nx;
  return out;
}

}  // namespace

SpectralField::SpectralField(const ModeLattice& lat, Eigen::VectorXcd coeffs, double tol)
    : lat_(lat), coeffs_(std::move(coeffs)) {
  DHOM_REQUIRE(static_cast<std::size_t>(coeffs_.size()) == lat_.size(),
               "coefficient vector length must match lattice size");
  const double scale = 1.0 + coeffs_.cwiseAbs().maxCoeff();
  double defect = 0.0;
  for (std::size_t idx = 0; idx < lat_.size(); ++idx) {
    const std::size_t mir = lat_.negate_index(idx);
    if (idx <= mir) {
      defect = std::max(defect, std::abs(coeffs_[idx] - std::conj(coeffs_[mir])));
    }
  }
  DHOM_CHECK(defect <= tol * scale, "coefficients are not Hermitian-symmetric (field not real)");
}

SpectralField SpectralField::zero(const ModeLattice& lat) {
  return SpectralField(lat, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lat.size())));
}

SpectralField SpectralField::from_modes(const ModeLattice& lat,
                                        const std::vector<std::pair<Mode, Complex>>& entries) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lat.size()));
  for (const auto& [k, v] : entries) {
    DHOM_REQUIRE(lat.contains(k), "mode outside lattice");
    c[static_cast<Eigen::Index>(lat.index(k))] += v;
  }
  return SpectralField(lat, std::move(c));
}

Complex SpectralField::coeff(const Mode& k) const {
  return coeffs_[static_cast<Eigen::Index>(lat_.index(k))];
}

double SpectralField::value_at(const double* x) const {
  // Hermitian symmetry is a class invariant, so the value is the center term
  // plus twice the real part of the positive-half sum.
  const std::size_t ctr = lat_.center_index();
  double acc = coeffs_[static_cast<Eigen::Index>(ctr)].real();
  for (std::size_t idx = ctr + 1; idx < lat_.size(); ++idx) {
    const Complex c = coeffs_[static_cast<Eigen::Index>(idx)];
    if (c == Complex(0.0, 0.0)) continue;
    const Mode k = lat_.mode(idx);
    double phase = 0.0;
    for (int j = 0; j < lat_.d(); ++j) phase += k[static_cast<std::size_t>(j)] * x[j];
    acc += 2.0 * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
  }
  return acc;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  DHOM_REQUIRE(lat_ == other.lat_, "lattice mismatch");
  coeffs_ += other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  DHOM_REQUIRE(lat_ == other.lat_, "lattice mismatch");
  coeffs_ -= other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField f) { return f *= s; }

GridField eval_on_grid(const SpectralField& f, int res) {
  const ModeLattice& lat = f.lattice();
  DHOM_REQUIRE(res >= lat.side(), "grid resolution must be at least 2K+1");
  const int d = lat.d();
  const int K = lat.K();
  const int side = lat.side();

  // Synthesis matrix for one axis: P(x, s) = exp(i (s-K) * 2*pi*x/res).
  Eigen::MatrixXcd P(res, side);
  for (int x = 0; x < res; ++x) {
    const double theta = kTwoPi * x / res;
    for (int s = 0; s < side; ++s) {
      const double ang = (s - K) * theta;
      P(x, s) = Complex(std::cos(ang), std::sin(ang));
    }
  }

  std::array<int, 3> shape{1, 1, 1};
  for (int j = 0; j < d; ++j) shape[static_cast<std::size_t>(j)] = side;
  Eigen::VectorXcd buf = f.coeffs();
  for (int axis = 0; axis < d; ++axis) buf = contract_axis(buf, shape, d, axis, P);

  GridField g;
  g.d = d;
  g.res = res;
  g.values.resize(buf.size());
  double max_imag = 0.0;
  double max_val = 0.0;
  for (Eigen::Index i = 0; i < buf.size(); ++i) {
    g.values[i] = buf[i].real();
    max_imag = std::max(max_imag, std::abs(buf[i].imag()));
    max_val = std::max(max_val, std::abs(g.values[i]));
  }
  DHOM_CHECK(max_imag <= 1e-12 * (1.0 + max_val), "grid synthesis produced non-real values");
  return g;
}

SpectralField field_from_grid(const GridField& g, const ModeLattice& lat, double* herm_defect) {
  DHOM_REQUIRE(g.d == lat.d(), "dimension mismatch");
  DHOM_REQUIRE(g.res >= lat.side(), "grid resolution must be at least 2K+1");
  const std::size_t expect = [&] {
    std::size_t n = 1;
    for (int j = 0; j < g.d; ++j) n *= static_cast<std::size_t>(g.res);
    return n;
  }();
  DHOM_REQUIRE(static_cast<std::size_t>(g.values.size()) == expect, "grid size mismatch");
  DHOM_REQUIRE(g.values.allFinite(), "grid contains non-finite values");

  const int d = lat.d();
  const int K = lat.K();
  const int side = lat.side();
  const int res = g.res;

  // Analysis matrix for one axis: P(s, x) = exp(-i (s-K) * 2*pi*x/res) / res.
  Eigen::MatrixXcd P(side, res);
  for (int s = 0; s < side; ++s) {
    for (int x = 0; x < res; ++x) {
      const double ang = -(s - K) * kTwoPi * x / res;
      P(s, x) = Complex(std::cos(ang) / res, std::sin(ang) / res);
    }
  }

  std::array<int, 3> shape{1, 1, 1};
  for (int j = 0; j < d; ++j) shape[static_cast<std::size_t>(j)] = res;
  Eigen::VectorXcd buf = g.values.cast<Complex>();
  for (int axis = 0; axis < d; ++axis) buf = contract_axis(buf, shape, d, axis, P);

  // Real input means the exact coefficients are Hermitian; symmetrize and report the defect.
  double defect = 0.0;
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const std::size_t mir = lat.negate_index(idx);
    if (idx < mir) continue;
    if (idx == mir) {
      defect = std::max(defect, std::abs(buf[static_cast<Eigen::Index>(idx)].imag()));
      buf[static_cast<Eigen::Index>(idx)] =
          Complex(buf[static_cast<Eigen::Index>(idx)].real(), 0.0);
    } else {
      const Complex a = buf[static_cast<Eigen::Index>(idx)];
      const Complex b = buf[static_cast<Eigen::Index>(mir)];
      const Complex avg = 0.5 * (a + std::conj(b));
      defect = std::max(defect, std::max(std::abs(a - avg), std::abs(b - std::conj(avg))));
      buf[static_cast<Eigen::Index>(idx)] = avg;
      buf[static_cast<Eigen::Index>(mir)] = std::conj(avg);
    }
  }
  if (herm_defect != nullptr) *herm_defect = defect;
  return SpectralField(lat, std::move(buf));
}

double inner(const SpectralField& f, const SpectralField& h) {
  DHOM_REQUIRE(f.lattice() == h.lattice(), "lattice mismatch");
  const Complex v = h.coeffs().dot(f.coeffs());  // sum f_k * conj(h_k)
  const double scale = f.coeffs().norm() * h.coeffs().norm() + 1e-300;
  DHOM_CHECK(std::abs(v.imag()) <= 1e-12 * (1.0 + scale),
             "inner product of real fields has non-negligible imaginary part");
  return v.real();
}

double inner_h1_lambda(const SpectralField& f, const SpectralField& h, double lambda) {
  DHOM_REQUIRE(f.lattice() == h.lattice(), "lattice mismatch");
  DHOM_REQUIRE(lambda > 0.0, "lambda must be positive");
  const ModeLattice& lat = f.lattice();
  Complex acc(0.0, 0.0);
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const double w = lat.sq_norm(idx) + lambda;
    acc += w * f.coeffs()[static_cast<Eigen::Index>(idx)] *
           std::conj(h.coeffs()[static_cast<Eigen::Index>(idx)]);
  }
  return acc.real();
}

double inner_h1(const SpectralField& f, const SpectralField& h) {
  DHOM_REQUIRE(f.lattice() == h.lattice(), "lattice mismatch");
  const ModeLattice& lat = f.lattice();
  Complex acc(0.0, 0.0);
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    acc += lat.sq_norm(idx) * f.coeffs()[static_cast<Eigen::Index>(idx)] *
           std::conj(h.coeffs()[static_cast<Eigen::Index>(idx)]);
  }
  return acc.real();
}

double sobolev_norm(const SpectralField& f, int m) {
  DHOM_REQUIRE(m >= 0, "Sobolev order must be nonnegative");
  const ModeLattice& lat = f.lattice();
  double acc = 0.0;
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const double a2 = std::norm(f.coeffs()[static_cast<Eigen::Index>(idx)]);
    if (m == 0) {
      acc += a2;
    } else {
      acc += a2 * std::pow(lat.sq_norm(idx), m);
    }
  }
  return std::sqrt(acc);
}

double norm_l2(const SpectralField& f) { return f.coeffs().norm(); }

nlohmann::ordered_json field_to_json(const SpectralField& f) {
  const ModeLattice& lat = f.lattice();
  nlohmann::ordered_json j;
  j["d"] = lat.d();
  j["K"] = lat.K();
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const Complex c = f.coeffs()[static_cast<Eigen::Index>(idx)];
    if (c == Complex(0.0, 0.0)) continue;
    const Mode k = lat.mode(idx);
    auto kv = nlohmann::ordered_json::array();
    for (int jx = 0; jx < lat.d(); ++jx) kv.push_back(k[static_cast<std::size_t>(jx)]);
    rows.push_back(nlohmann::ordered_json::array({kv, c.real(), c.imag()}));
  }
  j["coeffs"] = std::move(rows);
  return j;
}

SpectralField field_from_json(const nlohmann::ordered_json& j) {
  const int d = j.at("d").get<int>();
  const int K = j.at("K").get<int>();
  ModeLattice lat(d, K);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lat.size()));
  for (const auto& row : j.at("coeffs")) {
    DHOM_REQUIRE(row.is_array() && row.size() == 3, "coefficient row must be [k, re, im]");
    Mode k{0, 0, 0};
    const auto& kv = row[0];
    DHOM_REQUIRE(kv.is_array() && static_cast<int>(kv.size()) == d, "mode arity mismatch");
    for (int jx = 0; jx < d; ++jx) k[static_cast<std::size_t>(jx)] = kv[jx].get<int>();
    DHOM_REQUIRE(lat.contains(k), "mode outside lattice");
    c[static_cast<Eigen::Index>(lat.index(k))] = Complex(row[1].get<double>(), row[2].get<double>());
  }
  return SpectralField(lat, std::move(c));
}

void grid_to_csv(const GridField& g, std::ostream& os) {
  os << "x1";
  for (int j = 2; j <= g.d; ++j) os << ",x" << j;
  os << ",value\n";
  char buf[64];
  std::array<int, 3> iv{0, 0, 0};
  const std::size_t n = static_cast<std::size_t>(g.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rem = i;
    for (int j = g.d - 1; j >= 0; --j) {
      iv[static_cast<std::size_t>(j)] = static_cast<int>(rem % static_cast<std::size_t>(g.res));
      rem /= static_cast<std::size_t>(g.res);
    }
    for (int j = 0; j < g.d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", kTwoPi * iv[static_cast<std::size_t>(j)] / g.res);
      os << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", g.values[static_cast<Eigen::Index>(i)]);
    os << buf << '\n';
  }
}

GridField grid_from_csv(std::istream& is, int d, int res) {
  DHOM_REQUIRE(d >= 1 && d <= 3, "dimension must be 1..3");
  DHOM_REQUIRE(res >= 1, "resolution must be positive");
  GridField g;
  g.d = d;
  g.res = res;
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= static_cast<std::size_t>(res);
  g.values.resize(static_cast<Eigen::Index>(n));

  std::string line;
  DHOM_CHECK(static_cast<bool>(std::getline(is, line)), "missing CSV header");
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    DHOM_CHECK(row < n, "too many CSV rows for grid");
    std::istringstream ls(line);
    std::string tok;
    double value = 0.0;
    for (int col = 0; col <= d; ++col) {
      DHOM_CHECK(static_cast<bool>(std::getline(ls, tok, ',')), "short CSV row");
      if (col == d) value = std::stod(tok);
    }
    g.values[static_cast<Eigen::Index>(row)] = value;
    ++row;
  }
  DHOM_CHECK(row == n, "CSV row count does not match grid size");
  return g;
}

}  // namespace dhom

#include "dhom/drift.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dhom {

TrigVectorField::TrigVectorField(int d, std::vector<ModeList> components, double div_tol)
    : d_(d), Kb_(0), comps_(std::move(components)) {
  DHOM_REQUIRE(d_ >= 1 && d_ <= 3, "dimension must be 1..3");
  DHOM_REQUIRE(static_cast<int>(comps_.size()) == d_, "one mode list per component required");

  double amax = 0.0;
  for (int j = 0; j < d_; ++j) {
    // Merge duplicate modes so Hermitian pairing is well defined.
    std::map<Mode, Complex> merged;
    for (const auto& [m, a] : comps_[static_cast<std::size_t>(j)]) {
      Mode key = m;
      for (int t = d_; t < 3; ++t) {
        DHOM_REQUIRE(key[static_cast<std::size_t>(t)] == 0, "trailing mode entries must be 0");
      }
      merged[key] += a;
    }
    ModeList clean;
    for (const auto& [m, a] : merged) {
      if (a == Complex(0.0, 0.0)) continue;
      clean.emplace_back(m, a);
      amax = std::max(amax, std::abs(a));
      for (int t = 0; t < d_; ++t) {
        Kb_ = std::max(Kb_, std::abs(m[static_cast<std::size_t>(t)]));
      }
    }
    // Component must be real-valued: amp(-m) = conj(amp(m)).
    for (const auto& [m, a] : clean) {
      Mode neg{-m[0], -m[1], -m[2]};
      auto it = merged.find(neg);
      const Complex twin = (it == merged.end()) ? Complex(0.0, 0.0) : it->second;
      DHOM_REQUIRE(std::abs(twin - std::conj(a)) <= 1e-12 * (1.0 + amax),
                   "drift component is not real-valued (missing conjugate mode)");
    }
    comps_[static_cast<std::size_t>(j)] = std::move(clean);
  }

  const double defect = divergence_defect();
  DHOM_REQUIRE(defect <= div_tol * (1.0 + amax), "drift field is not divergence-free");
}

bool TrigVectorField::is_zero() const {
  for (const auto& comp : comps_) {
    if (!comp.empty()) return false;
  }
  return true;
}

void TrigVectorField::eval(const double* x, double* out) const {
  for (int j = 0; j < d_; ++j) {
    double acc = 0.0;
    for (const auto& [m, a] : comps_[static_cast<std::size_t>(j)]) {
      double phase = 0.0;
      for (int t = 0; t < d_; ++t) phase += m[static_cast<std::size_t>(t)] * x[t];
      acc += a.real() * std::cos(phase) - a.imag() * std::sin(phase);
    }
    out[j] = acc;
  }
}

double TrigVectorField::sup_bound() const {
  double sq = 0.0;
  for (const auto& comp : comps_) {
    double s = 0.0;
    for (const auto& [m, a] : comp) s += std::abs(a);
    sq += s * s;
  }
  return std::sqrt(sq);
}

double TrigVectorField::divergence_defect() const {
  std::map<Mode, Complex> div;
  for (int j = 0; j < d_; ++j) {
    for (const auto& [m, a] : comps_[static_cast<std::size_t>(j)]) {
      div[m] += Complex(0.0, static_cast<double>(m[static_cast<std::size_t>(j)])) * a;
    }
  }
  double worst = 0.0;
  for (const auto& [m, v] : div) worst = std::max(worst, std::abs(v));
  return worst;
}

DivergenceReport validate_divergence_free(const TrigVectorField& b, double tol) {
  const double defect = b.divergence_defect();
  return DivergenceReport{defect, defect <= tol};
}

TrigVectorField drift_zero(int d) {
  return TrigVectorField(d, std::vector<TrigVectorField::ModeList>(static_cast<std::size_t>(d)));
}

TrigVectorField drift_example3() {
  const Complex half(0.5, 0.0);
  const Complex ihalf(0.0, 0.5);
  TrigVectorField::ModeList b1;
  TrigVectorField::ModeList b2{{Mode{1, 0, 0}, -ihalf}, {Mode{-1, 0, 0}, ihalf}};   // sin x1
  TrigVectorField::ModeList b3{{Mode{1, 0, 0}, half}, {Mode{-1, 0, 0}, half}};      // cos x1
  return TrigVectorField(3, {b1, b2, b3});
}

TrigVectorField drift_irrational(double alpha) {
  TrigVectorField::ModeList b1{{Mode{0, 0, 0}, Complex(1.0, 0.0)}};
  TrigVectorField::ModeList b2{{Mode{0, 0, 0}, Complex(alpha, 0.0)}};
  return TrigVectorField(2, {b1, b2});
}

TrigVectorField drift_cellular2d() {
  const Complex ihalf(0.0, 0.5);
  TrigVectorField::ModeList b1{{Mode{0, 1, 0}, -ihalf}, {Mode{0, -1, 0}, ihalf}};   // sin x2
  TrigVectorField::ModeList b2{{Mode{1, 0, 0}, ihalf}, {Mode{-1, 0, 0}, -ihalf}};   // -sin x1
  return TrigVectorField(2, {b1, b2});
}

}  // namespace dhom

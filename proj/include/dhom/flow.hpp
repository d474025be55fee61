#pragma once

#include <array>
#include <functional>
#include <vector>

#include "dhom/drift.hpp"

namespace dhom {

// Closed-form flow map: out = Phi_t(x0), componentwise, unwrapped.
using FlowFn = std::function<void(const double* x0, double t, double* out)>;

inline double wrap_2pi(double x) {
  const double two_pi = 6.283185307179586476925286766559;
  double y = x - two_pi * std::floor(x / two_pi);
  if (y >= two_pi) y -= two_pi;
  return y;
}

// One orbit of the drift field through a base point, queryable on [-T, T].
// Either a closed-form flow map or a dense RK4 sample with cubic Hermite
// interpolation between stored states (states kept unwrapped internally).
class Trajectory {
 public:
  Trajectory() = default;

  static Trajectory closed_form(int d, const std::array<double, 3>& x0, FlowFn flow, double T);
  static Trajectory sampled(const TrigVectorField& b, const std::array<double, 3>& x0, double T,
                            double h, double store_dt = 0.0);

  int d() const { return d_; }
  double horizon() const { return T_; }
  const std::array<double, 3>& origin() const { return x0_; }

  // Position at time t, wrapped to [0, 2pi)^d. |t| may not exceed the horizon.
  std::array<double, 3> at(double t) const;

 private:
  int d_ = 0;
  double T_ = 0.0;
  std::array<double, 3> x0_{};
  FlowFn flow_;
  // Sampled variant: (2M+1) stored states and drift values, row-major, step dt_.
  double dt_ = 0.0;
  std::vector<double> states_;
  std::vector<double> derivs_;
};

// RK4 orbit integration in both time directions; store_dt = 0 picks 10*h.
Trajectory integrate_flow(const TrigVectorField& b, const std::array<double, 3>& x0, double T,
                          double h, double store_dt = 0.0);

// Wrapped torus distance between two points of dimension d.
double torus_distance(const double* x, const double* y, int d);

}  // namespace dhom

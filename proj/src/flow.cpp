#include "dhom/flow.hpp"

#include <cmath>

#include "dhom/lattice.hpp"

namespace dhom {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

void rk4_step(const TrigVectorField& b, double h, std::array<double, 3>& x) {
  std::array<double, 3> k1{}, k2{}, k3{}, k4{}, tmp{};
  b.eval(x.data(), k1.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
  b.eval(tmp.data(), k2.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
  b.eval(tmp.data(), k3.data());
  for (int j = 0; j < 3; ++j) tmp[j] = x[j] + h * k3[j];
  b.eval(tmp.data(), k4.data());
  for (int j = 0; j < 3; ++j) x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

}  // namespace

Trajectory Trajectory::closed_form(int d, const std::array<double, 3>& x0, FlowFn flow,
                                   double T) {
  DHOM_REQUIRE(d >= 1 && d <= 3, "trajectory dimension out of range");
  DHOM_REQUIRE(T > 0.0, "trajectory horizon must be positive");
  DHOM_REQUIRE(flow != nullptr, "closed-form trajectory needs a flow map");
  Trajectory tr;
  tr.d_ = d;
  tr.T_ = T;
  tr.x0_ = x0;
  tr.flow_ = std::move(flow);
  return tr;
}

Trajectory Trajectory::sampled(const TrigVectorField& b, const std::array<double, 3>& x0,
                               double T, double h, double store_dt) {
  DHOM_REQUIRE(T > 0.0 && h > 0.0, "trajectory horizon and step must be positive");
  if (store_dt <= 0.0) store_dt = 10.0 * h;
  const long m = static_cast<long>(std::ceil(T / store_dt - 1e-12));
  DHOM_REQUIRE(m >= 1, "trajectory needs at least one stored step");
  const long n_sub = std::max<long>(1, static_cast<long>(std::llround(store_dt / h)));
  const double h_sub = store_dt / static_cast<double>(n_sub);

  Trajectory tr;
  tr.d_ = b.d();
  tr.T_ = static_cast<double>(m) * store_dt;
  tr.x0_ = x0;
  tr.dt_ = store_dt;
  tr.states_.assign(static_cast<std::size_t>(2 * m + 1) * 3, 0.0);
  tr.derivs_.assign(static_cast<std::size_t>(2 * m + 1) * 3, 0.0);

  auto store = [&](long idx, const std::array<double, 3>& x) {
    std::array<double, 3> dv{};
    b.eval(x.data(), dv.data());
    for (int j = 0; j < 3; ++j) {
      tr.states_[static_cast<std::size_t>(idx) * 3 + j] = x[j];
      tr.derivs_[static_cast<std::size_t>(idx) * 3 + j] = dv[j];
    }
  };

  std::array<double, 3> x = x0;
  store(m, x);
  for (long i = 1; i <= m; ++i) {
    for (long s = 0; s < n_sub; ++s) rk4_step(b, h_sub, x);
    store(m + i, x);
  }
  x = x0;
  for (long i = 1; i <= m; ++i) {
    for (long s = 0; s < n_sub; ++s) rk4_step(b, -h_sub, x);
    store(m - i, x);
  }
  return tr;
}

std::array<double, 3> Trajectory::at(double t) const {
  DHOM_REQUIRE(d_ > 0, "trajectory is empty");
  DHOM_REQUIRE(std::abs(t) <= T_ + 1e-9, "query time exceeds trajectory horizon");
  std::array<double, 3> out{};
  if (flow_) {
    flow_(x0_.data(), t, out.data());
  } else {
    const long m = (static_cast<long>(states_.size()) / 3 - 1) / 2;
    double u = (t + static_cast<double>(m) * dt_) / dt_;
    long i = static_cast<long>(std::floor(u));
    if (i < 0) i = 0;
    if (i > 2 * m - 1) i = 2 * m - 1;
    const double s = u - static_cast<double>(i);
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    const double* y0 = &states_[static_cast<std::size_t>(i) * 3];
    const double* y1 = y0 + 3;
    const double* d0 = &derivs_[static_cast<std::size_t>(i) * 3];
    const double* d1 = d0 + 3;
    for (int j = 0; j < 3; ++j) {
      out[j] = h00 * y0[j] + h10 * dt_ * d0[j] + h01 * y1[j] + h11 * dt_ * d1[j];
    }
  }
  for (int j = 0; j < d_; ++j) out[j] = wrap_2pi(out[j]);
  for (int j = d_; j < 3; ++j) out[j] = 0.0;
  return out;
}

Trajectory integrate_flow(const TrigVectorField& b, const std::array<double, 3>& x0, double T,
                          double h, double store_dt) {
  return Trajectory::sampled(b, x0, T, h, store_dt);
}

double torus_distance(const double* x, const double* y, int d) {
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    double diff = std::abs(x[j] - y[j]);
    if (diff > kPi) diff = 2.0 * kPi - diff;
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace dhom

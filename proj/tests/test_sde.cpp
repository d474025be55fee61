// Counter RNG statistics, the Strang-split sampler against exact laws,
// characteristic-function estimators and the reductions they rely on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "dhom/io.hpp"
#include "dhom/rng.hpp"
#include "dhom/scenario.hpp"
#include "dhom/sde.hpp"

using namespace dhom;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

SpectralField make_cos1(const ModeLattice& lat) {
  return SpectralField::from_modes(
      lat, {{Mode{1, 0, 0}, Complex(0.5, 0.0)}, {Mode{-1, 0, 0}, Complex(0.5, 0.0)}});
}

// Two-sided KS distance of a sorted sample against a CDF.
double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    worst = std::max(worst, std::abs(F - static_cast<double>(i) / n));
    worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - F));
  }
  return worst;
}

// CDF of the wrapped normal on [0, 2pi) with mean mu and variance v,
// via the theta-series partial sums (|j| <= 8 is plenty for v >= 0.5).
double wrapped_normal_cdf(double x, double mu, double v) {
  double F = 0.0;
  for (int j = -8; j <= 8; ++j) {
    const double a = (x - mu + kTwoPi * j) / std::sqrt(2.0 * v);
    const double b = (0.0 - mu + kTwoPi * j) / std::sqrt(2.0 * v);
    F += 0.5 * (std::erf(a) - std::erf(b));
  }
  return F;
}

}  // namespace

TEST_CASE("counter RNG is a pure function of its counters") {
  CounterRng rng{123};
  CHECK(rng.word(1, 2, 3, 4) == rng.word(1, 2, 3, 4));
  CHECK(rng.word(1, 2, 3, 4) != rng.word(2, 2, 3, 4));
  CHECK(rng.word(1, 2, 3, 4) != rng.word(1, 3, 3, 4));
  CHECK(rng.word(1, 2, 3, 4) != rng.word(1, 2, 4, 4));
  CHECK(rng.word(1, 2, 3, 4) != CounterRng{124}.word(1, 2, 3, 4));
}

TEST_CASE("uniform stream passes KS at the 1% level") {
  CounterRng rng{20260815};
  const std::size_t n = 20000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = rng.uniform01(i, 0, 0, 2);
  const double ks = ks_distance(std::move(xs), [](double x) { return x; });
  CHECK(ks < 1.6276 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian stream has standard moments") {
  CounterRng rng{7};
  const std::size_t n = 40000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.gaussian(i, 5, 1);
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.08));
}

TEST_CASE("driftless point start is a wrapped Gaussian at every grid time") {
  McConfig cfg;
  cfg.c = 0.0;
  cfg.n_paths = 20000;
  cfg.t_grid = {0.5};
  cfg.seed = 42;
  cfg.init = InitKind::point;
  cfg.x0 = {1.0, 3.0, 0.0};
  const PathEnsemble ens = simulate(drift_zero(2), nullptr, cfg);
  REQUIRE(ens.states.size() == 1);
  REQUIRE(ens.states[0].rows() == 20000);
  const double bound = 1.6276 / std::sqrt(20000.0);
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> xs(20000);
    for (long i = 0; i < 20000; ++i) xs[static_cast<std::size_t>(i)] = ens.states[0](i, axis);
    const double mu = cfg.x0[static_cast<std::size_t>(axis)];
    // Additive noise has variance 2t per axis (generator is the Laplacian).
    const double ks =
        ks_distance(std::move(xs), [&](double x) { return wrapped_normal_cdf(x, mu, 1.0); });
    CHECK(ks < bound);
  }
  // Unwrapped displacement variance matches 2t as well.
  for (int axis = 0; axis < 2; ++axis) {
    double s2 = 0.0;
    for (long i = 0; i < 20000; ++i) {
      const double d = ens.unwrapped[0](i, axis) - cfg.x0[static_cast<std::size_t>(axis)];
      s2 += d * d;
    }
    s2 /= 20000.0;
    CHECK(s2 == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("cosine initial density is sampled exactly") {
  McConfig cfg;
  cfg.c = 0.0;
  cfg.n_paths = 20000;
  cfg.t_grid = {1e-6};  // essentially the initial law
  cfg.seed = 9;
  cfg.init = InitKind::cosine_density;
  cfg.density_a = 0.8;
  const PathEnsemble ens = simulate(drift_zero(2), nullptr, cfg);
  std::vector<double> xs(20000);
  for (long i = 0; i < 20000; ++i) xs[static_cast<std::size_t>(i)] = ens.states[0](i, 0);
  // CDF of (1 + a cos x)/(2pi) on [0, 2pi).
  const double a = 0.8;
  const double ks = ks_distance(
      std::move(xs), [&](double x) { return (x + a * std::sin(x)) / kTwoPi; });
  CHECK(ks < 1.6276 / std::sqrt(20000.0));
  // Second axis stays uniform.
  std::vector<double> ys(20000);
  for (long i = 0; i < 20000; ++i) ys[static_cast<std::size_t>(i)] = ens.states[0](i, 1);
  CHECK(ks_distance(std::move(ys), [](double x) { return x / kTwoPi; }) <
        1.6276 / std::sqrt(20000.0));
}

TEST_CASE("uniform start keeps the heat characteristic function at J0") {
  // E[exp(i cos X_t)] = J_0(1) for X_t uniform; the trapezoid value of the
  // integral is frozen in as an independently computed constant.
  double j0 = 0.0;
  const int m = 4096;
  for (int i = 0; i < m; ++i) j0 += std::cos(std::cos(kTwoPi * i / m)) / m;
  CHECK(j0 == doctest::Approx(0.7651976865579666).epsilon(1e-12));

  McConfig cfg;
  cfg.c = 0.0;
  cfg.n_paths = 20000;
  cfg.t_grid = {0.3};
  cfg.seed = 20260815;
  const PathEnsemble ens = simulate(drift_zero(2), nullptr, cfg);
  ModeLattice lat(2, 3);
  const CharFnEstimate est = char_fn(ens, make_cos1(lat), 1.0, 0.3);
  CHECK(est.n == 20000);
  CHECK(std::abs(est.value.real() - 0.7651976865579666) < 3.5 * est.se_re);
  CHECK(std::abs(est.value.imag()) < 3.5 * est.se_im);
}

TEST_CASE("sampler agrees with the spectral characteristic function") {
  // Zero drift, cosine density: both routes compute E[e^{i xi cos X_t}].
  ModeLattice lat(2, 3);
  const TrigVectorField b = drift_zero(2);
  const AssembledOperators ops = assemble_operators(b, lat);
  const SpectralField f = make_cos1(lat);
  const SpectralField g_init = SpectralField::from_modes(
      lat, {{Mode{0, 0, 0}, Complex(1.0, 0.0)},
            {Mode{1, 0, 0}, Complex(0.25, 0.0)},
            {Mode{-1, 0, 0}, Complex(0.25, 0.0)}});
  const double t = 0.4, xi = 0.5;
  const Eigen::MatrixXd Tt = semigroup_matrix(ops, 0.0, t);
  const SpectralCharFn spec = spectral_char_fn_finite(ops, Tt, f, xi, g_init, 64);
  CHECK(spec.truncation_loss < 1e-6);

  McConfig cfg;
  cfg.c = 0.0;
  cfg.n_paths = 20000;
  cfg.t_grid = {t};
  cfg.seed = 31;
  cfg.init = InitKind::cosine_density;
  cfg.density_a = 0.5;
  const PathEnsemble ens = simulate(b, nullptr, cfg);
  const CharFnEstimate est = char_fn(ens, f, xi, t);
  CHECK(std::abs(est.value.real() - spec.value.real()) < 3.5 * est.se_re);
  CHECK(std::abs(est.value.imag() - spec.value.imag()) < 3.5 * est.se_im);
}

TEST_CASE("mean observable matches the initial-density average") {
  McConfig cfg;
  cfg.c = 0.0;
  cfg.n_paths = 20000;
  cfg.t_grid = {1e-6};
  cfg.seed = 13;
  cfg.init = InitKind::cosine_density;
  cfg.density_a = 0.8;
  const PathEnsemble ens = simulate(drift_zero(2), nullptr, cfg);
  ModeLattice lat(2, 2);
  const CharFnEstimate est = mean_observable(ens, make_cos1(lat), 1e-6);
  // E[cos X] under (1 + a cos x)/(2pi) is a/2.
  CHECK(std::abs(est.value.real() - 0.4) < 3.5 * est.se_re);
  CHECK(std::abs(est.value.imag()) < 1e-15);
}

TEST_CASE("two-time characteristic function degenerates to one time at xi2=0") {
  McConfig cfg;
  cfg.c = 3.0;
  cfg.n_paths = 4000;
  cfg.t_grid = {0.2, 0.5};
  cfg.seed = 77;
  const PathEnsemble ens = simulate(drift_example3(), nullptr, cfg);
  ModeLattice lat(3, 2);
  const SpectralField f = make_cos1(lat);
  const CharFnEstimate one = char_fn(ens, f, 0.7, 0.2);
  const CharFnEstimate two = two_time_char_fn(ens, f, 0.7, 0.2, 0.0, 0.5);
  CHECK(std::abs(one.value - two.value) < 1e-15);
  CHECK_THROWS(char_fn(ens, f, 0.7, 0.3));  // not a grid time
}

TEST_CASE("path modulus probabilities grow with the window and shrink with eps") {
  ModeLattice lat(3, 2);
  const SpectralField f = make_cos1(lat);
  McConfig cfg;
  cfg.c = 10.0;
  cfg.n_paths = 400;
  cfg.t_grid = {1.0};
  cfg.seed = 5;
  cfg.dense_observable = &f;
  const PathEnsemble ens = simulate(drift_example3(), nullptr, cfg);
  REQUIRE(ens.dense_len > 1);
  const std::vector<double> deltas{0.025, 0.05, 0.1, 0.2};
  const auto rows = path_modulus_report(ens, 0.4, deltas);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    CHECK(rows[i].prob <= rows[i + 1].prob + 1e-12);
  const auto tight = path_modulus_report(ens, 0.8, deltas);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(tight[i].prob <= rows[i].prob + 1e-12);
}

TEST_CASE("ensemble reruns and binary dumps are bit-identical") {
  McConfig cfg;
  cfg.c = 2.0;
  cfg.n_paths = 200;
  cfg.t_grid = {0.25, 0.5};
  cfg.seed = 99;
  const PathEnsemble a = simulate(drift_example3(), nullptr, cfg);
  const PathEnsemble b = simulate(drift_example3(), nullptr, cfg);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    CHECK((a.states[i] - b.states[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.unwrapped[i] - b.unwrapped[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dhom_sde_test";
  fs::create_directories(dir);
  const std::string pa = (dir / "a.bin").string(), pb = (dir / "b.bin").string();
  write_ensemble_binary(a, pa);
  write_ensemble_binary(b, pb);
  CHECK(files_identical(pa, pb));
  fs::remove_all(dir);
}

TEST_CASE("exact flow map and RK4 substeps land on the same law") {
  // The shear flow is affine in t, so one RK4 step is exact up to roundoff;
  // supplying the closed form must not change the statistics materially.
  const FlowFn flow = [](const double* x0, double t, double* out) {
    out[0] = x0[0];
    out[1] = x0[1] + t * std::sin(x0[0]);
    out[2] = x0[2] + t * std::cos(x0[0]);
  };
  McConfig cfg;
  cfg.c = 20.0;
  cfg.n_paths = 500;
  cfg.t_grid = {0.5};
  cfg.seed = 3;
  cfg.init = InitKind::point;
  cfg.x0 = {1.0, 2.0, 3.0};
  const PathEnsemble with_flow = simulate(drift_example3(), &flow, cfg);
  const PathEnsemble without = simulate(drift_example3(), nullptr, cfg);
  const double gap =
      (with_flow.states[0] - without.states[0]).cwiseAbs().maxCoeff();
  CHECK(gap < 1e-4);
}

TEST_CASE("pairwise reduction is exact on adversarial data") {
  std::vector<double> v;
  for (int i = 0; i < 1537; ++i) v.push_back((i % 7 - 3) * 1e-3 + (i % 2 ? 1e12 : -1e12));
  long double acc = 0.0L;
  for (double x : v) acc += static_cast<long double>(x);
  const double want = static_cast<double>(acc);
  CHECK(pairwise_sum(v.data(), v.size()) == doctest::Approx(want).epsilon(1e-12));
  CHECK(pairwise_sum(v.data(), 0) == 0.0);
  CHECK(pairwise_sum(v.data(), 1) == v[0]);
}

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dhom/field.hpp"
#include "dhom/flow.hpp"
#include "dhom/limit_process.hpp"
#include "dhom/operators.hpp"

namespace dhom {

enum class InitKind { uniform, cosine_density, point };

struct McConfig {
  double c = 0.0;
  long n_paths = 1000;
  std::vector<double> t_grid;  // strictly increasing, all >= 0
  std::uint64_t seed = 1;
  InitKind init = InitKind::uniform;
  double density_a = 0.0;  // initial law (1 + a cos x1) dpi, |a| <= 1
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  double dt0 = 1e-3;
  double theta = 0.05;  // drift substep bound: dt <= theta / (|c| sup|b|)
  const SpectralField* dense_observable = nullptr;  // track f(Y) every step
};

struct PathEnsemble {
  int d = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
  double dt = 0.0;  // nominal step (interval steps never exceed it)
  long n_paths = 0;
  std::vector<double> t_grid;
  std::vector<long> step_of;               // global step index per grid time
  std::vector<Eigen::MatrixXd> states;     // per grid time: n x d, wrapped
  std::vector<Eigen::MatrixXd> unwrapped;  // per grid time: n x d, unwrapped
  // Dense observable track: n_paths rows of (total_steps + 1) floats.
  std::vector<float> dense;
  long dense_len = 0;
};

// Strang-split Euler scheme: half drift (exact flow map when supplied, one
// RK4 step otherwise), full diffusion kick, half drift.  Deterministic for a
// fixed config under any worker count.
PathEnsemble simulate(const TrigVectorField& b, const FlowFn* drift_flow, const McConfig& cfg);

void write_ensemble_binary(const PathEnsemble& ens, const std::string& path);

struct CharFnEstimate {
  std::complex<double> value;
  double se_re = 0.0;
  double se_im = 0.0;
  long n = 0;
};

// Sample mean of exp(i xi f(Y_t)); t must be one of the grid times.
CharFnEstimate char_fn(const PathEnsemble& ens, const SpectralField& f, double xi, double t);
CharFnEstimate two_time_char_fn(const PathEnsemble& ens, const SpectralField& f, double xi1,
                                double t1, double xi2, double t2);
// Sample mean of f(Y_t).
CharFnEstimate mean_observable(const PathEnsemble& ens, const SpectralField& f, double t);

struct SpectralCharFn {
  std::complex<double> value;
  double truncation_loss = 0.0;    // lattice energy missing from cos/sin parts
  double projection_defect = 0.0;  // limit route only: out-of-kernel share
};

// E[exp(i xi f(Y_t))] through the generator: split exp(i xi f) into cos/sin
// fields on the lattice and evolve them with a precomputed semigroup matrix.
SpectralCharFn spectral_char_fn_finite(const AssembledOperators& ops, const Eigen::MatrixXd& Tt,
                                       const SpectralField& f, double xi,
                                       const SpectralField& g_init, int grid_res);
// Same through the limit semigroup (projection defect recorded, not enforced).
SpectralCharFn spectral_char_fn_limit(const AssembledOperators& ops, const LimitGenerator& gen,
                                      double t, const SpectralField& f, double xi,
                                      const SpectralField& g_init, int grid_res);

struct ModulusRow {
  double delta;
  double prob;  // fraction of paths with sup range >= eps in some delta-window
  double se;
};

// Continuity-modulus estimate from the dense observable track.
std::vector<ModulusRow> path_modulus_report(const PathEnsemble& ens, double eps,
                                            const std::vector<double>& deltas);

// Deterministic pairwise reduction (summation order fixed by the recursion).
double pairwise_sum(const double* v, std::size_t n);

}  // namespace dhom

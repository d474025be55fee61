#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dhom/field.hpp"
#include "dhom/flow.hpp"

namespace dhom {

// Low-discrepancy sample points in [0, 2pi)^d (Halton, bases 2, 3, 5).
std::vector<std::array<double, 3>> halton_points(int d, int n);

struct GapSearchParams {
  double T = 20.0;         // trajectory window searched on each side
  double dtau = 10.0;      // coarse grid spacing; grid times are its multiples
  int refine_starts = 16;  // coarse candidates refined per edge
  int refine_iters = 30;   // compass-search sweeps per start
  double prune_cap = 0.0;  // drop edges whose hint gap bound exceeds this (0 = off)
  std::function<double(const double*)> hint;  // flow invariant used for pruning
  double hint_lip = 1.0;                      // Lipschitz bound of the hint
  std::uint64_t eval_budget = 20'000'000'000ULL;  // guard on n^2 * grid^2
};

// Sample trajectories plus the symmetric one-link gap matrix between them.
// Pruned edges carry +inf; gaps are upper bounds of the true orbit gaps.
struct ChainGraph {
  int d = 0;
  std::vector<Trajectory> nodes;
  std::vector<std::vector<std::array<double, 3>>> positions;  // per node, at grid times
  Eigen::MatrixXd w;
  std::vector<double> grid_times;
  GapSearchParams params;
};

ChainGraph build_chain_graph(std::vector<Trajectory> nodes, const GapSearchParams& p);

// Shortest-chain distances over the gap matrix (dense Dijkstra).
std::vector<double> chain_distances_from(const ChainGraph& g, std::size_t src);
double chain_distance(const ChainGraph& g, std::size_t i, std::size_t j);

// Distance between two externally supplied trajectories, chained through the
// sample graph (direct link included).
double quotient_distance(const ChainGraph& g, const Trajectory& a, const Trajectory& b);

struct QuotientAtlas {
  double delta = 0.0;
  int n_classes = 0;
  std::vector<int> class_of;                 // per node
  std::vector<std::size_t> representative;   // per class: its seed node
  std::vector<double> weights;               // per class: sample fraction
};

// Greedy ball partition: lowest-index unassigned node seeds a class that
// absorbs every unassigned node within chain distance delta.
QuotientAtlas equivalence_classes(const ChainGraph& g, double delta);

struct LabelGrid {
  int d = 0;
  int res = 0;
  std::vector<int> labels;       // res^d cells, class id everywhere after fill
  double fill_fraction = 0.0;    // fraction labeled by rasterization alone
  int n_classes = 0;
};

// Rasterize each node's orbit with its class label, then fill the remaining
// cells by multi-source BFS from the labeled ones.
LabelGrid build_label_grid(const ChainGraph& g, const QuotientAtlas& atlas, int res);

struct InvariantProjection {
  SpectralField field;
  std::vector<double> class_values;  // cell average of the input per class
};

InvariantProjection project_invariant(const SpectralField& f, const LabelGrid& grid,
                                      const QuotientAtlas& atlas);

struct AlgebraReport {
  double isometry_defect;     // |sum_c w_c v_f(c)^2 - <f, f>|
  double product_defect;      // max_c |v_{f h}(c) - v_f(c) v_h(c)|
  double lift_defect;         // grid L2 gap between f and its class-constant lift
  double max_class_variance;  // largest within-class variance of f on the grid
};

AlgebraReport isometry_and_algebra_check(const SpectralField& f, const SpectralField& h,
                                         const LabelGrid& grid, const QuotientAtlas& atlas);

}  // namespace dhom

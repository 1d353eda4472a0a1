#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ibmot/coupling.hpp"
#include "ibmot/fam.hpp"

namespace ibmot {

/// Uniform grid T0, T0 + d, ..., T1 - d, T1 with d = (T1 - T0)/n_steps.
Eigen::VectorXd uniform_grid(const RapConfig& rap, int n_steps);

/// Exact Brownian-bridge noise A_t on a sorted grid inside [T0, T1], pinned
/// to 0 at T0 and T1, sampled by sequential conditional Gaussians.
Eigen::VectorXd sample_bridge_path(const RapConfig& rap, const Eigen::VectorXd& grid,
                                   std::mt19937_64& rng);

/// Generator for path `path_id` of a run seeded with `seed`; streams for
/// distinct ids are decorrelated by a splitmix64 hash of (seed, id).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_id);

/// One simulated path on a grid that starts at T0 and ends at T1.
struct SimPath {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double x0 = 0.0;
  double x1 = 0.0;
  Eigen::VectorXd I;
  Eigen::VectorXd M;  ///< M(T0) = E[X1 | X0], M(T1) = X1
};

SimPath simulate_path(const Coupling& c, const RapConfig& rap, const Eigen::VectorXd& grid,
                      std::mt19937_64& rng);

/// Innovations Brownian motion recovered from one path by left-point Euler:
///   dN = ((h1' h2(T1) - h1(T1) h2') Z - (h1' h2 - h1 h2') M) / (h1(T1) h2 - h1 h2(T1))
///        - x0 g0') dt + dI,   Z = I - g0 x0,
///   dW = dN / (h1' h2 - h1 h2').
/// Centered drivers only. Returns W on the grid, W(T0) = 0.
Eigen::VectorXd innovations_path(const Eigen::VectorXd& grid, const SimPath& path,
                                 const RapConfig& rap);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
  Eigen::Index grid_size = 0;
};

struct PathBundle {
  Eigen::VectorXd grid;
  std::vector<SimPath> paths;    ///< empty unless kept
  Eigen::MatrixXd W;             ///< n_paths x grid, empty unless kept
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  PathBundle bundle;
  McEstimate k_estimate;        ///< trapezoid of (x1 - M)^2 w on [T0, T1 - d]
  double tail_bias_bound = 0.0; ///< bound on the omitted [T1 - d, T1] piece
  McEstimate w_terminal_mean;   ///< E[W_T1]
  McEstimate w_terminal_var;    ///< Var[W_T1]
  McEstimate x1_w_terminal;     ///< E[X1 W_T1]
};

struct SimulationOptions {
  std::int64_t n_paths = 100'000;
  int n_steps = 200;
  std::uint64_t seed = 0;
  bool keep_paths = false;
  bool innovations = true;
};

SimulationResult simulate_fam(const Coupling& c, const RapConfig& rap, const SimulationOptions& opt);

struct IncrementStat {
  Eigen::Index s = 0;    ///< grid index of the conditioning time
  Eigen::Index t = 0;    ///< grid index of the later time
  bool weighted = false; ///< h(M_s) = M_s instead of 1
  double mean = 0.0;
  double std_error = 0.0;
};

struct MartingaleReport {
  std::vector<IncrementStat> increments;
  std::vector<McEstimate> level;    ///< E[M_t] at each checkpoint
  std::vector<Eigen::Index> level_index;
  double initial_pin_error = 0.0;   ///< mean |M(T0) - x0|
  double final_pin_error = 0.0;     ///< mean |M(t_last) - x1|, t_last = T1 - d
  /// max over increment statistics of |mean| / SE (0 when SE = 0 and mean = 0)
  double max_z = 0.0;
};

/// E[(M_t - M_s) h(M_s)] for h in {1, id} at a few (s, t) pairs, the level
/// E[M_t] at checkpoints, and the pinning errors. Needs kept paths.
MartingaleReport martingale_diagnostics(const PathBundle& bundle);

}  // namespace ibmot

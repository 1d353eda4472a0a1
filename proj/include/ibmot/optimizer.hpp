#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ibmot/coupling.hpp"
#include "ibmot/fam.hpp"
#include "ibmot/objective.hpp"
#include "ibmot/quadrature.hpp"

namespace ibmot {

/// Which gradient norm bounds the step. Both give the same iterates, because
/// projecting p + lambda g onto the polytope equals projecting
/// p + lambda P_T g (P_T the projection onto the equality null space), and the
/// ascent inequality only ever pairs g with differences of feasible points.
/// kTangent therefore yields a valid, much smaller bound.
enum class GradientNorm { kFull, kTangent };

struct SolverParams {
  double epsilon = 1e-2;
  double grad_bound = 0.0;   ///< sup of the gradient norm over the polytope (estimate)
  double delta = 0.0;        ///< Frobenius diameter bound of the polytope
  double lambda = 0.0;       ///< epsilon / (2 grad_bound^2)
  std::int64_t theta = 1;    ///< iterations actually run
  double theta_required = 1; ///< 4 ceil(delta^2 grad_bound^2 / epsilon^2), uncapped
  std::int64_t max_theta_cap = 100'000;
  std::uint64_t seed = 0;
  GradientNorm norm = GradientNorm::kTangent;
};

struct SolverOverrides {
  std::optional<double> grad_bound;
  std::optional<double> delta;
  std::optional<std::int64_t> max_theta_cap;
  int grad_samples = 16;
  GradientNorm norm = GradientNorm::kTangent;
  double projection_tol = 1e-10;
  int projection_max_iter = 50'000;
  /// Start from this coupling (projected) instead of the projected
  /// independent coupling.
  std::optional<Eigen::MatrixXd> start;
};

struct IterationRecord {
  double value = 0.0;            ///< K_I at pi^(theta - 1)
  double grad_norm = 0.0;        ///< norm used for the step bound
  double projection_residual = 0.0;  ///< validate_coupling(...).max() after projecting
  int projection_iterations = 0;
};

struct SolveResult {
  Coupling coupling_avg;
  double value = 0.0;               ///< K_I at coupling_avg
  double best_iterate_value = 0.0;
  Coupling best_iterate;
  std::vector<IterationRecord> history;
  SolverParams params_used;
  std::vector<std::string> warnings;
};

/// Twice the largest gradient norm over the projected independent coupling
/// and n_samples random feasible couplings (anchor plus a random null-space
/// direction of random length up to the diameter bound, then projected).
double estimate_grad_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           const RapConfig& rap, const QuadratureSpec& quad, int n_samples,
                           std::uint64_t seed, GradientNorm norm = GradientNorm::kFull);

/// Random feasible coupling around `anchor` (see estimate_grad_bound).
Coupling random_feasible_coupling(const MartingaleProjector& projector, const Coupling& anchor,
                                  double radius, std::uint64_t seed);

/// Projected gradient ascent with iterate averaging. Starts at the projection
/// of the independent coupling, steps p <- Proj(p + lambda grad K_I(p)) for
/// theta iterations and returns (1/theta) sum of pi^(0..theta-1). theta is
/// capped at max_theta_cap with a warning.
SolveResult solve(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const RapConfig& rap,
                  const QuadratureSpec& quad, double epsilon, const SolverOverrides& overrides = {},
                  std::uint64_t seed = 0);

/// Empirical check of the first-order concavity inequality
/// K(b) - K(a) <= <grad K(a), b - a> on random feasible pairs.
struct ConcavityAudit {
  int pairs = 0;
  int violations = 0;
  double worst_violation = 0.0;
};

ConcavityAudit concavity_audit(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               const RapConfig& rap, const QuadratureSpec& quad, int n_pairs,
                               std::uint64_t seed, double tol = 1e-9);

}  // namespace ibmot

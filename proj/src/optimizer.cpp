#include "ibmot/optimizer.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

double gradient_norm(const MartingaleProjector& projector, const Eigen::MatrixXd& g,
                     GradientNorm norm) {
  if (norm == GradientNorm::kFull) return g.norm();
  if (projector.affine_dimension() == 0) return 0.0;
  // Components below round-off of the full gradient are not a direction of ascent.
  const double t = projector.project_tangent(g).norm();
  return t > 1e-12 * g.norm() ? t : 0.0;
}

Coupling checked_projection(const MartingaleProjector& projector, const Eigen::MatrixXd& p,
                            double tol, int max_iter) {
  ProjectionResult res = projector.project(p, tol, max_iter);
  if (!res.converged)
    throw NumericalError("projection did not converge (last step " + std::to_string(res.last_step) +
                         ", affine residual " + std::to_string(res.affine_residual) + ")");
  return std::move(res.coupling);
}

}  // namespace

Coupling random_feasible_coupling(const MartingaleProjector& projector, const Coupling& anchor,
                                  double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Eigen::MatrixXd noise(anchor.p.rows(), anchor.p.cols());
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = normal(rng);
  Eigen::MatrixXd dir = projector.project_tangent(noise);
  const double len = dir.norm();
  if (len < 1e-14) return anchor;
  dir *= radius * uniform(rng) / len;
  return checked_projection(projector, anchor.p + dir, 1e-10, 50'000);
}

double estimate_grad_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           const RapConfig& rap, const QuadratureSpec& quad, int n_samples,
                           std::uint64_t seed, GradientNorm norm) {
  const MartingaleProjector projector(mu, nu);
  const Coupling anchor =
      checked_projection(projector, independent_coupling(mu, nu).p, 1e-10, 50'000);
  const double radius = diameter_bound(mu, nu);
  double best = gradient_norm(projector, k_gradient(anchor, rap, quad), norm);
  std::mt19937_64 seeder(seed);
  for (int s = 0; s < n_samples; ++s) {
    const Coupling c = random_feasible_coupling(projector, anchor, radius, seeder());
    best = std::max(best, gradient_norm(projector, k_gradient(c, rap, quad), norm));
  }
  return 2.0 * best;
}

SolveResult solve(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const RapConfig& rap,
                  const QuadratureSpec& quad, double epsilon, const SolverOverrides& overrides,
                  std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw InvalidArgument("solve: epsilon must be positive");
  const MartingaleProjector projector(mu, nu);

  SolverParams params;
  params.epsilon = epsilon;
  params.seed = seed;
  params.norm = overrides.norm;
  if (overrides.max_theta_cap) params.max_theta_cap = std::max<std::int64_t>(1, *overrides.max_theta_cap);
  params.grad_bound = overrides.grad_bound
                          ? *overrides.grad_bound
                          : estimate_grad_bound(mu, nu, rap, quad, overrides.grad_samples, seed,
                                                overrides.norm);
  params.delta = overrides.delta ? *overrides.delta : diameter_bound(mu, nu);

  SolveResult result;
  if (params.grad_bound > 0.0) {
    params.lambda = epsilon / (2.0 * params.grad_bound * params.grad_bound);
    const double ratio = params.delta * params.grad_bound / epsilon;
    params.theta_required = 4.0 * std::ceil(ratio * ratio);
  } else {
    // Constant objective on the polytope: any feasible point is optimal.
    params.lambda = 0.0;
    params.theta_required = 1.0;
  }
  if (params.theta_required > static_cast<double>(params.max_theta_cap)) {
    params.theta = params.max_theta_cap;
    result.warnings.push_back("iteration count capped at " + std::to_string(params.max_theta_cap) +
                              " (bound requires " + std::to_string(params.theta_required) +
                              "); the epsilon guarantee is not certified");
  } else {
    params.theta = std::max<std::int64_t>(1, static_cast<std::int64_t>(params.theta_required));
  }

  const Eigen::MatrixXd start = overrides.start ? *overrides.start : independent_coupling(mu, nu).p;
  Coupling current = checked_projection(projector, start, overrides.projection_tol,
                                        overrides.projection_max_iter);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(current.p.rows(), current.p.cols());
  result.best_iterate_value = -std::numeric_limits<double>::infinity();
  result.history.reserve(static_cast<std::size_t>(params.theta));

  for (std::int64_t step = 1; step <= params.theta; ++step) {
    sum += current.p;
    const ObjectiveEvaluation eval = evaluate_objective(current, rap, quad);
    if (eval.value > result.best_iterate_value) {
      result.best_iterate_value = eval.value;
      result.best_iterate = current;
    }
    IterationRecord rec;
    rec.value = eval.value;
    rec.grad_norm = gradient_norm(projector, eval.gradient, params.norm);
    if (step < params.theta) {
      ProjectionResult proj = projector.project(current.p + params.lambda * eval.gradient,
                                                overrides.projection_tol,
                                                overrides.projection_max_iter);
      if (!proj.converged)
        throw NumericalError("projection failed at iteration " + std::to_string(step));
      rec.projection_iterations = proj.iterations;
      current = std::move(proj.coupling);
      rec.projection_residual = validate_coupling(current.p, mu, nu).max();
    }
    result.history.push_back(rec);
  }

  result.coupling_avg = {sum / static_cast<double>(params.theta), projector.x(), projector.y()};
  result.value = k_objective(result.coupling_avg, rap, quad);
  result.params_used = params;
  return result;
}

ConcavityAudit concavity_audit(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               const RapConfig& rap, const QuadratureSpec& quad, int n_pairs,
                               std::uint64_t seed, double tol) {
  const MartingaleProjector projector(mu, nu);
  const Coupling anchor =
      checked_projection(projector, independent_coupling(mu, nu).p, 1e-10, 50'000);
  const double radius = diameter_bound(mu, nu);
  std::mt19937_64 seeder(seed);
  ConcavityAudit audit;
  for (int k = 0; k < n_pairs; ++k) {
    const Coupling a = random_feasible_coupling(projector, anchor, radius, seeder());
    const Coupling b = random_feasible_coupling(projector, anchor, radius, seeder());
    const ObjectiveEvaluation ea = evaluate_objective(a, rap, quad);
    const double kb = k_objective(b, rap, quad);
    const double gap = (kb - ea.value) - (ea.gradient.array() * (b.p - a.p).array()).sum();
    ++audit.pairs;
    if (gap > tol) {
      ++audit.violations;
      audit.worst_violation = std::max(audit.worst_violation, gap);
    }
  }
  return audit;
}

}  // namespace ibmot

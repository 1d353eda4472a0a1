#include "ibmot/convexify.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ibmot/errors.hpp"

namespace ibmot {

double PiecewiseLinear::operator()(double t) const {
  if (t <= knots(0)) return values(0);
  const Eigen::Index n = knots.size();
  if (t >= knots(n - 1)) return values(n - 1);
  const double* first = knots.data();
  const Eigen::Index k = std::upper_bound(first, first + n, t) - first;
  const double lam = (t - knots(k - 1)) / (knots(k) - knots(k - 1));
  return (1.0 - lam) * values(k - 1) + lam * values(k);
}

PiecewiseLinear cumulative_gap(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const QuantileFunction qm = quantile_function(mu);
  const QuantileFunction qn = quantile_function(nu);
  PiecewiseLinear q;
  q.knots = merged_grid(qm, qn);
  q.values.resize(q.knots.size());
  q.values(0) = 0.0;
  for (Eigen::Index k = 1; k < q.knots.size(); ++k) {
    const double lo = q.knots(k - 1), hi = q.knots(k);
    q.values(k) = q.values(k - 1) + (hi - lo) * (step_value_on(qm, lo, hi) - step_value_on(qn, lo, hi));
  }
  return q;
}

PiecewiseLinear convex_envelope(const PiecewiseLinear& q) {
  const Eigen::Index n = q.knots.size();
  std::vector<Eigen::Index> hull;
  hull.reserve(static_cast<std::size_t>(n));
  // Knots are already sorted by abscissa, so the lower chain is one pass.
  for (Eigen::Index k = 0; k < n; ++k) {
    while (hull.size() >= 2) {
      const Eigen::Index a = hull[hull.size() - 2];
      const Eigen::Index b = hull.back();
      const double cross = (q.knots(b) - q.knots(a)) * (q.values(k) - q.values(a)) -
                           (q.values(b) - q.values(a)) * (q.knots(k) - q.knots(a));
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(k);
  }

  PiecewiseLinear env;
  env.knots.resize(static_cast<Eigen::Index>(hull.size()));
  env.values.resize(static_cast<Eigen::Index>(hull.size()));
  for (std::size_t k = 0; k < hull.size(); ++k) {
    env.knots(static_cast<Eigen::Index>(k)) = q.knots(hull[k]);
    env.values(static_cast<Eigen::Index>(k)) = q.values(hull[k]);
  }
  return env;
}

ConvexifyResult convexify_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               double alpha, double beta) {
  if (!(alpha > 1.0) || !(beta > 1.0) || std::abs(1.0 / alpha + 1.0 / beta - 1.0) > 1e-12)
    throw InvalidArgument("convexify_pair: need alpha, beta > 1 with 1/alpha + 1/beta = 1");

  ConvexifyResult r{mu, nu, {}, 0.0, alpha, beta};
  const QuantileFunction qm = quantile_function(mu);
  const QuantileFunction qn = quantile_function(nu);

  if (convex_order_check(mu, nu).ordered) {
    r.f.breakpoints = Eigen::VectorXd::Ones(1);
    r.f.values = Eigen::VectorXd::Zero(1);
    return r;
  }

  const PiecewiseLinear q = cumulative_gap(mu, nu);
  const PiecewiseLinear env = convex_envelope(q);

  // Envelope knots are a subset of q's knots, so f is constant on each cell
  // of q's grid; on (t_{k-1}, t_k] it equals the slope of the hull segment
  // containing that cell.
  const Eigen::Index cells = q.knots.size() - 1;
  r.f.breakpoints = q.knots.tail(cells);
  r.f.values.resize(cells);
  std::vector<double> mu_atoms, nu_atoms, lengths;
  mu_atoms.reserve(static_cast<std::size_t>(cells));
  nu_atoms.reserve(static_cast<std::size_t>(cells));
  lengths.reserve(static_cast<std::size_t>(cells));
  Eigen::Index seg = 1;
  for (Eigen::Index k = 1; k <= cells; ++k) {
    const double lo = q.knots(k - 1), hi = q.knots(k);
    while (env.knots(seg) < hi && seg < env.knots.size() - 1) ++seg;
    const double slope =
        (env.values(seg) - env.values(seg - 1)) / (env.knots(seg) - env.knots(seg - 1));
    r.f.values(k - 1) = slope;
    r.cost += (hi - lo) * std::abs(slope);
    mu_atoms.push_back(step_value_on(qm, lo, hi) - slope / alpha);
    nu_atoms.push_back(step_value_on(qn, lo, hi) + slope / beta);
    lengths.push_back(hi - lo);
  }
  r.mu_tilde = make_measure(mu_atoms, lengths);
  r.nu_tilde = make_measure(nu_atoms, lengths);
  return r;
}

}  // namespace ibmot

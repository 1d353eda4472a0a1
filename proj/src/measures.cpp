#include "ibmot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

constexpr double kMergeRel = 1e-12;
constexpr double kGridMerge = 1e-15;

bool same_atom(double a, double b) { return std::abs(a - b) <= kMergeRel * (1.0 + std::abs(a)); }

}  // namespace

EmpiricalMeasure make_measure(std::span<const double> atoms, std::span<const double> weights) {
  if (atoms.empty()) throw InvalidArgument("make_measure: empty input");
  if (atoms.size() != weights.size())
    throw InvalidArgument("make_measure: atoms and weights differ in length");
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (!std::isfinite(atoms[k]) || !std::isfinite(weights[k]))
      throw InvalidArgument("make_measure: non-finite entry");
    if (weights[k] < 0.0) throw InvalidArgument("make_measure: negative weight");
  }

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  std::vector<double> xs, ws;
  xs.reserve(atoms.size());
  ws.reserve(atoms.size());
  for (std::size_t k : order) {
    if (!xs.empty() && same_atom(xs.back(), atoms[k])) {
      ws.back() += weights[k];
    } else {
      xs.push_back(atoms[k]);
      ws.push_back(weights[k]);
    }
  }

  std::vector<double> kept_x, kept_w;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (ws[k] > 0.0) {
      kept_x.push_back(xs[k]);
      kept_w.push_back(ws[k]);
    }
  }
  if (kept_x.empty()) throw InvalidArgument("make_measure: all weights are zero");

  const double total = std::accumulate(kept_w.begin(), kept_w.end(), 0.0);
  // Already-normalized input passes through untouched so that canonicalization
  // is idempotent bit for bit.
  if (std::abs(total - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
    for (double& w : kept_w) w /= total;
  }

  EmpiricalMeasure m;
  m.atoms_ = Eigen::Map<const Eigen::VectorXd>(kept_x.data(), static_cast<Eigen::Index>(kept_x.size()));
  m.weights_ = Eigen::Map<const Eigen::VectorXd>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
  return m;
}

EmpiricalMeasure make_measure(const Eigen::VectorXd& atoms, const Eigen::VectorXd& weights) {
  return make_measure(std::span<const double>(atoms.data(), static_cast<std::size_t>(atoms.size())),
                      std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())));
}

EmpiricalMeasure uniform_measure(std::span<const double> samples) {
  if (samples.empty()) throw InvalidArgument("uniform_measure: empty input");
  const double w = 1.0 / static_cast<double>(samples.size());
  std::vector<double> ws(samples.size(), w);
  EmpiricalMeasure m = make_measure(samples, ws);
  if (m.size() == static_cast<Eigen::Index>(samples.size())) m.weights_.setConstant(w);
  return m;
}

QuantileFunction quantile_function(const EmpiricalMeasure& m) {
  QuantileFunction q;
  q.values = m.atoms();
  q.breakpoints.resize(m.size());
  double cum = 0.0;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    cum += m.weights()(k);
    q.breakpoints(k) = cum;
  }
  q.breakpoints(m.size() - 1) = 1.0;
  return q;
}

double quantile(const EmpiricalMeasure& m, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw InvalidArgument("quantile: u must lie in (0, 1]");
  double cum = 0.0;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    cum += m.weights()(k);
    if (cum >= u - 1e-13 * u) return m.atoms()(k);
  }
  return m.atoms()(m.size() - 1);
}

double mean(const EmpiricalMeasure& m) { return m.weights().dot(m.atoms()); }

double second_moment(const EmpiricalMeasure& m) {
  return m.weights().dot(m.atoms().cwiseAbs2());
}

Eigen::VectorXd merged_grid(const QuantileFunction& a, const QuantileFunction& b) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(a.breakpoints.size() + b.breakpoints.size() + 1));
  pts.push_back(0.0);
  for (double u : a.breakpoints) pts.push_back(u);
  for (double u : b.breakpoints) pts.push_back(u);
  std::sort(pts.begin(), pts.end());

  std::vector<double> grid;
  grid.reserve(pts.size());
  for (double u : pts) {
    if (grid.empty() || u - grid.back() > kGridMerge) grid.push_back(u);
  }
  grid.back() = 1.0;
  return Eigen::Map<Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
}

double step_value_on(const QuantileFunction& q, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double* first = q.breakpoints.data();
  const double* last = first + q.breakpoints.size();
  const double* it = std::lower_bound(first, last, mid);
  if (it == last) --it;
  return q.values(it - first);
}

double w1_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const QuantileFunction qa = quantile_function(a);
  const QuantileFunction qb = quantile_function(b);
  const Eigen::VectorXd grid = merged_grid(qa, qb);
  double total = 0.0;
  for (Eigen::Index k = 1; k < grid.size(); ++k) {
    const double lo = grid(k - 1), hi = grid(k);
    total += (hi - lo) * std::abs(step_value_on(qa, lo, hi) - step_value_on(qb, lo, hi));
  }
  return total;
}

ConvexOrderReport convex_order_check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     double tol) {
  const QuantileFunction qm = quantile_function(mu);
  const QuantileFunction qn = quantile_function(nu);
  const Eigen::VectorXd grid = merged_grid(qm, qn);

  Eigen::VectorXd Q(grid.size());
  Q(0) = 0.0;
  for (Eigen::Index k = 1; k < grid.size(); ++k) {
    const double lo = grid(k - 1), hi = grid(k);
    Q(k) = Q(k - 1) + (hi - lo) * (step_value_on(qm, lo, hi) - step_value_on(qn, lo, hi));
  }

  ConvexOrderReport r;
  r.min_Q = Q.minCoeff();
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    if (Q(k) <= r.min_Q + tol) r.argmin_Q.push_back(grid(k));
  }
  r.Q_at_1 = Q(grid.size() - 1);
  r.mean_gap = mean(mu) - mean(nu);
  r.ordered = r.min_Q >= -tol && std::abs(r.Q_at_1) <= tol;
  return r;
}

EmpiricalMeasure discretize(const EmpiricalMeasure& m, int n) {
  if (n <= 0) throw InvalidArgument("discretize: n must be positive");
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::vector<double> ws(static_cast<std::size_t>(n), 1.0 / n);
  for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = quantile(m, (k + 0.5) / n);
  return make_measure(xs, ws);
}

}  // namespace ibmot

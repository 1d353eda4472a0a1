#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ibmot {

/// Finitely supported probability measure on the real line.
///
/// Atoms are strictly increasing and every weight is positive; weights sum to
/// one up to 1e-12. Instances are only created through make_measure() or
/// uniform_measure(), which canonicalize their input.
class EmpiricalMeasure {
public:
  const Eigen::VectorXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return atoms_.size(); }

private:
  friend EmpiricalMeasure make_measure(std::span<const double>, std::span<const double>);
  friend EmpiricalMeasure uniform_measure(std::span<const double>);

  Eigen::VectorXd atoms_;
  Eigen::VectorXd weights_;
};

/// Sorts atoms, merges atoms closer than 1e-12 (1 + |x|) by adding their
/// weights, drops zero weights and renormalizes.
EmpiricalMeasure make_measure(std::span<const double> atoms, std::span<const double> weights);
EmpiricalMeasure make_measure(const Eigen::VectorXd& atoms, const Eigen::VectorXd& weights);

/// Equal weight 1/l on each sample (after merging duplicates the merged atom
/// carries k/l).
EmpiricalMeasure uniform_measure(std::span<const double> samples);

/// Left-continuous step function on (0, 1]: value values[k] on
/// (breakpoints[k-1], breakpoints[k]], with breakpoints[-1] = 0.
struct QuantileFunction {
  Eigen::VectorXd breakpoints;
  Eigen::VectorXd values;
};

QuantileFunction quantile_function(const EmpiricalMeasure& m);

/// Smallest atom x with CDF(x) >= u, for u in (0, 1].
double quantile(const EmpiricalMeasure& m, double u);

double mean(const EmpiricalMeasure& m);
double second_moment(const EmpiricalMeasure& m);

/// Sorted union of the breakpoints of two quantile functions, starting at 0
/// and ending at 1. Adjacent breakpoints closer than 1e-15 are merged.
Eigen::VectorXd merged_grid(const QuantileFunction& a, const QuantileFunction& b);

/// Value of a quantile step function on the grid cell (lo, hi].
double step_value_on(const QuantileFunction& q, double lo, double hi);

/// W1 distance as the exact integral of |Q_a - Q_b| over the merged grid.
double w1_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct ConvexOrderReport {
  bool ordered = false;
  double mean_gap = 0.0;  ///< mean(mu) - mean(nu)
  double min_Q = 0.0;
  std::vector<double> argmin_Q;
  double Q_at_1 = 0.0;
};

inline constexpr double kConvexOrderTol = 1e-9;

/// mu <=cx nu iff Q(t) = int_0^t (Q_mu - Q_nu) >= 0 on [0,1] and Q(1) = 0.
/// Q is piecewise linear on the merged grid, so checking breakpoints suffices.
ConvexOrderReport convex_order_check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     double tol = kConvexOrderTol);

/// Quantile-midpoint reduction to at most n atoms: atoms Q((k - 1/2)/n),
/// k = 1..n, each with weight 1/n (duplicates merged).
EmpiricalMeasure discretize(const EmpiricalMeasure& m, int n);

}  // namespace ibmot

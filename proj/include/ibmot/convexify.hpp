#pragma once

#include <Eigen/Dense>

#include "ibmot/measures.hpp"

namespace ibmot {

/// Continuous piecewise-linear function on [0,1], given by its values at
/// increasing knots (first knot 0, last knot 1).
struct PiecewiseLinear {
  Eigen::VectorXd knots;
  Eigen::VectorXd values;

  double operator()(double t) const;
};

/// Q(t) = int_0^t (Q_mu - Q_nu) on the merged quantile grid, Q(0) = 0.
PiecewiseLinear cumulative_gap(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Greatest convex minorant of q: the lower convex hull of its knots,
/// computed with one monotone-chain sweep. Collinear knots are dropped.
PiecewiseLinear convex_envelope(const PiecewiseLinear& q);

struct ConvexifyResult {
  EmpiricalMeasure mu_tilde;
  EmpiricalMeasure nu_tilde;
  QuantileFunction f;  ///< left-derivative of the envelope, as a step function
  double cost = 0.0;   ///< int_0^1 |f|
  double alpha = 2.0;
  double beta = 2.0;
};

/// Minimal-W1 repair of (mu, nu) into convex order: Q_mu - f/alpha and
/// Q_nu + f/beta, with f the left-derivative of the convex envelope of the
/// cumulative gap. Pairs already in convex order are returned unchanged.
/// Requires alpha, beta > 1 and 1/alpha + 1/beta = 1.
ConvexifyResult convexify_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               double alpha = 2.0, double beta = 2.0);

}  // namespace ibmot

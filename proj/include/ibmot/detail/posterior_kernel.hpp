#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace ibmot::detail {

/// Posterior of X1 over the atoms y given X0 = x_u and an observation with
/// signal-free residual r = I - g0 x_u:
///   log w_j = log p_uj - (r - g1 y_j)^2 / (2 v).
/// Works in log space with max subtraction. `scratch` receives the
/// normalized weights. log_norm is log sum_j p_uj exp(-(r - g1 y_j)^2/(2v)).
struct PosteriorMoments {
  double mean;
  double variance;
  double log_norm;
};

inline PosteriorMoments posterior_moments(const Eigen::VectorXd& log_p, const Eigen::VectorXd& y,
                                          double r, double g1, double inv_two_v,
                                          Eigen::VectorXd& scratch) {
  const Eigen::Index m = y.size();
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double d = r - g1 * y(j);
    const double e = log_p(j) - d * d * inv_two_v;
    scratch(j) = e;
    top = std::max(top, e);
  }
  double total = 0.0, first = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = std::exp(scratch(j) - top);
    scratch(j) = w;
    total += w;
    first += w * y(j);
  }
  const double mean = first / total;
  double var = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    scratch(j) /= total;
    const double d = y(j) - mean;
    var += scratch(j) * d * d;
  }
  return {mean, var, top + std::log(total)};
}

}  // namespace ibmot::detail

#pragma once

#include <functional>

#include <Eigen/Dense>

#include "ibmot/coupling.hpp"

namespace ibmot {

using ScalarFn = std::function<double(double)>;

/// One-arc randomized arcade process on [T0, T1]:
///   I_t = g0(t) X0 + g1(t) X1 + A_t,   Var[A_t] = variance(t),
/// with a centered Gauss-Markov driver whose covariance factors as
/// K(s, t) = h1(min(s, t)) h2(max(s, t)).
struct RapConfig {
  double T0 = 0.0;
  double T1 = 1.0;
  ScalarFn g0, g1, dg0;
  ScalarFn variance;
  ScalarFn h1, h2, dh1, dh2;
};

/// The randomized Brownian bridge: g0 = (T1 - t)/(T1 - T0),
/// g1 = (t - T0)/(T1 - T0), variance (T1 - t)(t - T0)/(T1 - T0), h1 = t,
/// h2 = 1, hence weight 1/(T1 - t).
RapConfig brownian_rap(double T0 = 0.0, double T1 = 1.0);

/// Checks the interpolation conditions g0(T0) = g1(T1) = 1,
/// g0(T1) = g1(T0) = 0 and variance(T0) = variance(T1) = 0.
void validate_rap(const RapConfig& rap);

/// sqrt(variance(t)) for t in [T0, T1].
double noise_std(const RapConfig& rap, double t);

/// sqrt(h1' h2 - h1 h2') / (h1(T1) h2(t) - h1(t) h2(T1)), t in [T0, T1).
double weight_fn(const RapConfig& rap, double t);

/// Law of X1 given X0 = x_u and I_t = g0 x_u + g1 y_q + a.
struct FamPosterior {
  Eigen::Index u = 0;
  double a = 0.0;
  double t = 0.0;
  Eigen::VectorXd post_weights;
  double mean = 0.0;
  double variance = 0.0;
};

FamPosterior posterior_at(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q,
                          double a, double t);

/// dM/dp_{uq} at the observation g0 x_u + g1 y_q + a:
///   phi(a) (y_q - M) / sum_j phi(a + g1 (y_q - y_j)) p_uj.
double dM_dp(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q, double a,
             double t);

/// dM/dp_{uh} at the same observation; equals dM_dp(..., q, ...) for h = q.
double dM_dp(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q,
             Eigen::Index h, double a, double t);

}  // namespace ibmot

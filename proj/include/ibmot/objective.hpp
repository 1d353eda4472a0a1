#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ibmot/coupling.hpp"
#include "ibmot/fam.hpp"
#include "ibmot/quadrature.hpp"

namespace ibmot {

/// Per-time-node quantities of the objective.
///
/// errors(u, h) = E[(y_h - M_t)^2 | X0 = x_u, X1 = y_h]
///              = int phi(a; v) (y_h - M_t(x_u, g0 x_u + g1 y_h + a))^2 da.
/// The squared error S(t) is <p, errors>, and because M_t is the posterior
/// mean the derivative of S in p_uh is exactly errors(u, h): the terms coming
/// from dM/dp cancel after summing over q.
struct TimeSlice {
  double t = 0.0;
  double weight = 0.0;          ///< w(t)
  double squared_error = 0.0;   ///< S(t)
  double expected_variance = 0.0;
  Eigen::MatrixXd errors;
};

TimeSlice evaluate_time_slice(const Coupling& c, const RapConfig& rap, double t,
                              const GaussRule& noise);

/// S(t) = sum_ij p_ij int (y_j - M_t(x_i, g0 x_i + g1 y_j + a))^2 phi(a; v(t)) da.
/// Any nonnegative p with positive row sums is accepted.
double inner_error(const Coupling& c, const RapConfig& rap, double t, const QuadratureSpec& quad);

struct ObjectiveEvaluation {
  double value = 0.0;           ///< K_I = int S(t) w(t) dt
  double variance_form = 0.0;   ///< int E[Var[X1 | X0, I_t]] w(t) dt
  Eigen::MatrixXd gradient;
  std::vector<TimeSlice> slices;  ///< errors matrices dropped unless requested
};

ObjectiveEvaluation evaluate_objective(const Coupling& c, const RapConfig& rap,
                                       const QuadratureSpec& quad, bool keep_slice_errors = false);

double k_objective(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad);
double k_variance_form(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad);
Eigen::MatrixXd k_gradient(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad);

/// sqrt((T1 - T0)(m2(nu) - m2(mu))): Cauchy-Schwarz bound on K_I over all
/// martingale couplings.
double objective_upper_bound(const RapConfig& rap, const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu);

}  // namespace ibmot

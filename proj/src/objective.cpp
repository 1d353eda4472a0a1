#include "ibmot/objective.hpp"

#include <cmath>

#include "ibmot/detail/posterior_kernel.hpp"
#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

// Kernel exponents below this are set to exactly zero: denormal entries
// would stall the matrix product. Every dropped term is < 3e-261.
constexpr double kMinExponent = -600.0;
// Below this the scaled sums may have lost their dominant term.
constexpr double kMinScaledMass = 1e-240;

}  // namespace

// For an observation generated from atom h at noise node z, the posterior
// weight of atom q in row u is proportional to
//   p_uq exp(-c d^2 - b d),  d = y_h - y_q,  c = g1^2/(2v),  b = g1 z/sd,
// after dropping the factor exp(-z^2/2) shared by all q. The exponent never
// exceeds z^2/2, so the sums over q are one matrix product per node against
// the fixed stack [P; P y; P y^2]. Entries whose mass underflowed are
// recomputed in log space.
TimeSlice evaluate_time_slice(const Coupling& c, const RapConfig& rap, double t,
                              const GaussRule& noise) {
  if (!(t > rap.T0 && t < rap.T1)) throw InvalidArgument("time slice: t must be interior");
  const double v = rap.variance(t);
  if (!(v > 0.0)) throw NumericalError("time slice: degenerate noise variance");
  const double sd = std::sqrt(v);
  const double g1 = rap.g1(t);
  const double inv_two_v = 0.5 / v;

  const Eigen::Index l = c.p.rows(), m = c.p.cols();
  for (Eigen::Index u = 0; u < l; ++u) {
    if (!(c.p.row(u).maxCoeff() > 0.0)) throw InvalidArgument("time slice: row has no mass");
    if (c.p.row(u).minCoeff() < 0.0) throw InvalidArgument("time slice: negative entry");
  }

  // Centered atoms keep the second moment sums well conditioned.
  const double ybar = 0.5 * (c.y.maxCoeff() + c.y.minCoeff());
  const Eigen::ArrayXd yc = c.y.array() - ybar;
  Eigen::MatrixXd stacked(3 * l, m);
  stacked.topRows(l) = c.p;
  stacked.middleRows(l, l) = (c.p.array().rowwise() * yc.transpose()).matrix();
  stacked.bottomRows(l) = (stacked.middleRows(l, l).array().rowwise() * yc.transpose()).matrix();

  Eigen::MatrixXd gaps(m, m);  // gaps(h, q) = y_h - y_q
  for (Eigen::Index q = 0; q < m; ++q) gaps.col(q) = (c.y.array() - c.y(q)).matrix();
  const double cc = g1 * g1 * inv_two_v;
  const Eigen::ArrayXXd quad_part = -cc * gaps.array().square();

  Eigen::MatrixXd log_p;  // filled on first fallback
  Eigen::VectorXd scratch(m), log_row(m);
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(l, m), var = Eigen::MatrixXd::Zero(l, m);
  Eigen::MatrixXd kernel(m, m), sums(3 * l, m);

  for (Eigen::Index k = 0; k < noise.nodes.size(); ++k) {
    const double z = noise.nodes(k), wk = noise.weights(k);
    const double b = g1 * z / sd;
    kernel = (quad_part - b * gaps.array())
                 .unaryExpr([](double e) { return e < kMinExponent ? 0.0 : std::exp(e); })
                 .matrix();
    if (m <= 16)
      sums.noalias() = stacked.lazyProduct(kernel.transpose());
    else
      sums.noalias() = stacked * kernel.transpose();
    for (Eigen::Index h = 0; h < m; ++h)
      for (Eigen::Index u = 0; u < l; ++u) {
        const double mass = sums(u, h);
        double e, s2;
        if (mass >= kMinScaledMass) {
          const double mean = sums(l + u, h) / mass;
          const double d = yc(h) - mean;
          e = d * d;
          s2 = std::max(0.0, sums(2 * l + u, h) / mass - mean * mean);
        } else {
          if (log_p.size() == 0) log_p = c.p.array().log().matrix();
          log_row = log_p.row(u).transpose();
          const double r = g1 * c.y(h) + sd * z;
          const auto mom = detail::posterior_moments(log_row, c.y, r, g1, inv_two_v, scratch);
          const double d = c.y(h) - mom.mean;
          e = d * d;
          s2 = mom.variance;
        }
        err(u, h) += wk * e;
        var(u, h) += wk * s2;
      }
  }

  TimeSlice s;
  s.t = t;
  s.weight = weight_fn(rap, t);
  s.squared_error = c.p.cwiseProduct(err).sum();
  s.expected_variance = c.p.cwiseProduct(var).sum();
  s.errors = std::move(err);
  if (!std::isfinite(s.squared_error) || !std::isfinite(s.expected_variance))
    throw NumericalError("time slice: non-finite value at t = " + std::to_string(t));
  return s;
}

double inner_error(const Coupling& c, const RapConfig& rap, double t, const QuadratureSpec& quad) {
  return evaluate_time_slice(c, rap, t, quad.noise).squared_error;
}

ObjectiveEvaluation evaluate_objective(const Coupling& c, const RapConfig& rap,
                                       const QuadratureSpec& quad, bool keep_slice_errors) {
  ObjectiveEvaluation out;
  out.gradient = Eigen::MatrixXd::Zero(c.p.rows(), c.p.cols());
  out.slices.reserve(static_cast<std::size_t>(quad.time.nodes.size()));
  for (Eigen::Index k = 0; k < quad.time.nodes.size(); ++k) {
    TimeSlice s = evaluate_time_slice(c, rap, quad.time.nodes(k), quad.noise);
    const double w = quad.time.weights(k) * s.weight;
    out.value += w * s.squared_error;
    out.variance_form += w * s.expected_variance;
    out.gradient += w * s.errors;
    if (!keep_slice_errors) s.errors.resize(0, 0);
    out.slices.push_back(std::move(s));
  }
  return out;
}

double k_objective(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad) {
  return evaluate_objective(c, rap, quad).value;
}

double k_variance_form(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad) {
  return evaluate_objective(c, rap, quad).variance_form;
}

Eigen::MatrixXd k_gradient(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad) {
  return evaluate_objective(c, rap, quad).gradient;
}

double objective_upper_bound(const RapConfig& rap, const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu) {
  const double spread = second_moment(nu) - second_moment(mu);
  return std::sqrt((rap.T1 - rap.T0) * std::max(0.0, spread));
}

}  // namespace ibmot

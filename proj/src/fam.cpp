#include "ibmot/fam.hpp"

#include <cmath>

#include "ibmot/detail/posterior_kernel.hpp"
#include "ibmot/errors.hpp"

namespace ibmot {

RapConfig brownian_rap(double T0, double T1) {
  if (!(T0 < T1) || !std::isfinite(T0) || !std::isfinite(T1))
    throw InvalidArgument("brownian_rap: need finite T0 < T1");
  const double span = T1 - T0;
  RapConfig rap;
  rap.T0 = T0;
  rap.T1 = T1;
  rap.g0 = [=](double t) { return (T1 - t) / span; };
  rap.g1 = [=](double t) { return (t - T0) / span; };
  rap.dg0 = [=](double) { return -1.0 / span; };
  rap.variance = [=](double t) { return (T1 - t) * (t - T0) / span; };
  rap.h1 = [](double t) { return t; };
  rap.h2 = [](double) { return 1.0; };
  rap.dh1 = [](double) { return 1.0; };
  rap.dh2 = [](double) { return 0.0; };
  return rap;
}

void validate_rap(const RapConfig& rap) {
  if (!(rap.T0 < rap.T1)) throw InvalidArgument("rap: need T0 < T1");
  if (!rap.g0 || !rap.g1 || !rap.variance || !rap.h1 || !rap.h2 || !rap.dh1 || !rap.dh2)
    throw InvalidArgument("rap: missing function handle");
  constexpr double tol = 1e-12;
  if (std::abs(rap.g0(rap.T0) - 1.0) > tol || std::abs(rap.g0(rap.T1)) > tol ||
      std::abs(rap.g1(rap.T0)) > tol || std::abs(rap.g1(rap.T1) - 1.0) > tol)
    throw InvalidArgument("rap: g0, g1 are not interpolating coefficients");
  if (std::abs(rap.variance(rap.T0)) > tol || std::abs(rap.variance(rap.T1)) > tol)
    throw InvalidArgument("rap: noise variance must vanish at T0 and T1");
  for (int k = 1; k < 8; ++k) {
    const double t = rap.T0 + (rap.T1 - rap.T0) * k / 8.0;
    if (!(weight_fn(rap, t) > 0.0)) throw InvalidArgument("rap: weight kernel not positive");
    if (!(rap.variance(t) > 0.0)) throw InvalidArgument("rap: noise variance not positive inside");
  }
}

double noise_std(const RapConfig& rap, double t) {
  if (!(t >= rap.T0 && t <= rap.T1)) throw InvalidArgument("noise_std: t outside [T0, T1]");
  return std::sqrt(std::max(0.0, rap.variance(t)));
}

double weight_fn(const RapConfig& rap, double t) {
  if (!(t >= rap.T0 && t < rap.T1)) throw InvalidArgument("weight_fn: t outside [T0, T1)");
  const double num = rap.dh1(t) * rap.h2(t) - rap.h1(t) * rap.dh2(t);
  const double den = rap.h1(rap.T1) * rap.h2(t) - rap.h1(t) * rap.h2(rap.T1);
  if (!(den > 0.0) || num < 0.0) throw NumericalError("weight_fn: degenerate driver covariance");
  return std::sqrt(num) / den;
}

namespace {

struct RowSetup {
  Eigen::VectorXd log_p;
  double g1;
  double v;
};

RowSetup prepare(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q, double a,
                 double t) {
  if (u < 0 || u >= c.p.rows() || q < 0 || q >= c.p.cols())
    throw InvalidArgument("posterior: index out of range");
  if (!std::isfinite(a)) throw InvalidArgument("posterior: non-finite noise coordinate");
  if (!(t > rap.T0 && t < rap.T1)) throw InvalidArgument("posterior: t must be interior");
  if (!(c.p.row(u).maxCoeff() > 0.0)) throw InvalidArgument("posterior: row has no mass");
  const double v = rap.variance(t);
  if (!(v > 0.0)) throw NumericalError("posterior: noise variance vanishes");
  return {c.p.row(u).transpose().array().log().matrix(), rap.g1(t), v};
}

}  // namespace

FamPosterior posterior_at(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q,
                          double a, double t) {
  const RowSetup s = prepare(c, rap, u, q, a, t);
  FamPosterior post;
  post.u = u;
  post.a = a;
  post.t = t;
  post.post_weights.resize(c.y.size());
  const auto mom = detail::posterior_moments(s.log_p, c.y, s.g1 * c.y(q) + a, s.g1,
                                             0.5 / s.v, post.post_weights);
  post.mean = mom.mean;
  post.variance = mom.variance;
  return post;
}

double dM_dp(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q, double a,
             double t) {
  return dM_dp(c, rap, u, q, q, a, t);
}

double dM_dp(const Coupling& c, const RapConfig& rap, Eigen::Index u, Eigen::Index q,
             Eigen::Index h, double a, double t) {
  const RowSetup s = prepare(c, rap, u, q, a, t);
  if (h < 0 || h >= c.p.cols()) throw InvalidArgument("dM_dp: index out of range");
  Eigen::VectorXd scratch(c.y.size());
  const double r = s.g1 * c.y(q) + a;
  const auto mom = detail::posterior_moments(s.log_p, c.y, r, s.g1, 0.5 / s.v, scratch);
  const double d = r - s.g1 * c.y(h);
  return std::exp(-d * d * 0.5 / s.v - mom.log_norm) * (c.y(h) - mom.mean);
}

}  // namespace ibmot

#pragma once

// Instance generators and brute-force oracles shared by the tests. Nothing
// here calls into the solver beyond the measure constructors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ibmot/coupling.hpp"
#include "ibmot/measures.hpp"

namespace testing {

using ibmot::Coupling;
using ibmot::EmpiricalMeasure;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

inline double normal_quantile(double u) {
  double x = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double step = (normal_cdf(x) - u) / normal_pdf(x);
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return x;
}

/// Pair in convex order together with a martingale coupling of it. nu gets
/// m random atoms; each of the l rows of a random positive stochastic kernel
/// K defines x_i = sum_j K_ij y_j. Rows are sorted by x so that p lines up
/// with mu's atom order.
struct Instance {
  EmpiricalMeasure mu;
  EmpiricalMeasure nu;
  Eigen::MatrixXd p;
};

inline Instance random_instance(std::mt19937_64& rng, int l, int m, double spread = 2.0,
                                double floor = 0.05) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    std::vector<double> y(m);
    for (double& v : y) v = spread * (2.0 * unif(rng) - 1.0);
    std::sort(y.begin(), y.end());
    bool distinct = true;
    for (int j = 1; j < m; ++j) distinct &= y[j] - y[j - 1] > 0.05;
    if (!distinct) continue;

    Eigen::MatrixXd kernel(l, m);
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < m; ++j) kernel(i, j) = floor + unif(rng);
      kernel.row(i) /= kernel.row(i).sum();
    }
    Eigen::VectorXd w(l);
    for (int i = 0; i < l; ++i) w(i) = 0.2 + unif(rng);
    w /= w.sum();
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
    Eigen::VectorXd x = kernel * yv;

    std::vector<int> order(l);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a) < x(b); });
    bool xdistinct = true;
    for (int i = 1; i < l; ++i) xdistinct &= x(order[i]) - x(order[i - 1]) > 1e-3;
    if (!xdistinct) continue;

    Eigen::MatrixXd p(l, m);
    Eigen::VectorXd xs(l), ws(l);
    for (int i = 0; i < l; ++i) {
      p.row(i) = w(order[i]) * kernel.row(order[i]);
      xs(i) = x(order[i]);
      ws(i) = w(order[i]);
    }
    const Eigen::VectorXd wn = p.colwise().sum().transpose();
    Instance out{ibmot::make_measure(xs, ws), ibmot::make_measure(yv, wn), p};
    if (out.mu.size() != l || out.nu.size() != m) continue;
    return out;
  }
}

/// Equality constraints of the martingale-coupling polytope on vec(p)
/// (column-major), written out directly: row sums, column sums, row means.
inline void polytope_equalities(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                Eigen::MatrixXd& a, Eigen::VectorXd& b) {
  const Eigen::Index l = mu.size(), m = nu.size();
  a = Eigen::MatrixXd::Zero(2 * l + m, l * m);
  b = Eigen::VectorXd::Zero(2 * l + m);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index k = i + j * l;
      a(i, k) = 1.0;
      a(l + j, k) = 1.0;
      a(l + m + i, k) = nu.atoms()(j) - mu.atoms()(i);
    }
  b.head(l) = mu.weights();
  b.segment(l, m) = nu.weights();
}

/// Affine projection of p0 onto {A p = b, p_k = 0 for k in zero_set}.
/// Returns false when that affine set is empty.
inline bool face_projection(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const std::vector<int>& zero_set, const Eigen::VectorXd& p0,
                            Eigen::VectorXd& out) {
  const Eigen::Index n = p0.size();
  Eigen::MatrixXd c(a.rows() + static_cast<Eigen::Index>(zero_set.size()), n);
  Eigen::VectorXd d(c.rows());
  c.topRows(a.rows()) = a;
  d.head(a.rows()) = b;
  c.bottomRows(static_cast<Eigen::Index>(zero_set.size())).setZero();
  for (std::size_t r = 0; r < zero_set.size(); ++r) {
    c(a.rows() + static_cast<Eigen::Index>(r), zero_set[r]) = 1.0;
    d(a.rows() + static_cast<Eigen::Index>(r)) = 0.0;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(c * c.transpose());
  cod.setThreshold(1e-12);
  const Eigen::VectorXd lambda = cod.solve(c * p0 - d);
  out = p0 - c.transpose() * lambda;
  return (c * out - d).cwiseAbs().maxCoeff() < 1e-10;
}

/// Dense QP oracle: Euclidean projection of p0 onto the polytope by
/// enumerating every candidate zero set; the optimum is the closest
/// feasible face projection. Exponential, for l*m <= ~14 only.
inline Eigen::MatrixXd qp_projection(const Eigen::MatrixXd& p0, const EmpiricalMeasure& mu,
                                     const EmpiricalMeasure& nu) {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  polytope_equalities(mu, nu, a, b);
  const Eigen::Index n = p0.size();
  const Eigen::VectorXd v0 = Eigen::Map<const Eigen::VectorXd>(p0.data(), n);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_p = v0, cand;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> zeros;
    for (int k = 0; k < n; ++k)
      if (mask & (1u << k)) zeros.push_back(k);
    if (!face_projection(a, b, zeros, v0, cand)) continue;
    if (cand.minCoeff() < -1e-12) continue;
    const double dist = (cand - v0).squaredNorm();
    if (dist < best) {
      best = dist;
      best_p = cand;
    }
  }
  return Eigen::Map<Eigen::MatrixXd>(best_p.data(), p0.rows(), p0.cols());
}

/// Vertices of the polytope: feasible points that are the unique solution of
/// {A p = b, p_Z = 0} for some zero set Z.
inline std::vector<Eigen::MatrixXd> polytope_vertices(const EmpiricalMeasure& mu,
                                                      const EmpiricalMeasure& nu) {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  polytope_equalities(mu, nu, a, b);
  const Eigen::Index l = mu.size(), m = nu.size(), n = l * m;
  std::vector<Eigen::MatrixXd> verts;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Eigen::MatrixXd c(a.rows() + n, n);
    c.topRows(a.rows()) = a;
    c.bottomRows(n).setZero();
    std::vector<int> zeros;
    for (int k = 0; k < n; ++k)
      if (mask & (1u << k)) {
        c(a.rows() + k, k) = 1.0;
        zeros.push_back(k);
      }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
    lu.setThreshold(1e-10);
    if (lu.rank() < n) continue;
    Eigen::VectorXd v;
    if (!face_projection(a, b, zeros, Eigen::VectorXd::Zero(n), v)) continue;
    if (v.minCoeff() < -1e-12) continue;
    Eigen::MatrixXd pm = Eigen::Map<Eigen::MatrixXd>(v.data(), l, m);
    bool seen = false;
    for (const auto& q : verts) seen |= (q - pm).norm() < 1e-9;
    if (!seen) verts.push_back(pm);
  }
  return verts;
}

/// W1 by integrating |F_mu - F_nu| over the union of atoms.
inline double w1_by_cdf(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  std::vector<double> pts(a.atoms().data(), a.atoms().data() + a.size());
  pts.insert(pts.end(), b.atoms().data(), b.atoms().data() + b.size());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const EmpiricalMeasure& m, double x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (m.atoms()(i) <= x) s += m.weights()(i);
    return s;
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    total += std::abs(cdf(a, pts[k]) - cdf(b, pts[k])) * (pts[k + 1] - pts[k]);
  return total;
}

/// Convex order by call prices: equal means and E(X - k)+ <= E(Y - k)+ at
/// every atom k of either measure (both sides are piecewise linear in k
/// with kinks only there).
inline bool convex_order_by_calls(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                  double tol = 1e-9) {
  auto call = [](const EmpiricalMeasure& m, double k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) s += m.weights()(i) * std::max(0.0, m.atoms()(i) - k);
    return s;
  };
  const double ma = a.atoms().dot(a.weights()), mb = b.atoms().dot(b.weights());
  if (std::abs(ma - mb) > tol) return false;
  for (const EmpiricalMeasure* m : {&a, &b})
    for (Eigen::Index i = 0; i < m->size(); ++i)
      if (call(a, m->atoms()(i)) > call(b, m->atoms()(i)) + tol) return false;
  return true;
}

inline EmpiricalMeasure measure(std::vector<double> atoms, std::vector<double> weights = {}) {
  if (weights.empty()) return ibmot::uniform_measure(atoms);
  return ibmot::make_measure(atoms, weights);
}

}  // namespace testing

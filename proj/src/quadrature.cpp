#include "ibmot/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

// Symmetric tridiagonal Jacobi matrix with zero diagonal.
Eigen::VectorXd jacobi_nodes(const Eigen::VectorXd& offdiag) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    j(k, k + 1) = offdiag(k);
    j(k + 1, k) = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

// Orthonormal Hermite polynomials for N(0,1): psi_0 = 1,
// psi_{k+1} = (z psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1).
// Returns psi_n(z), psi_n'(z) and sum_{k<n} psi_k(z)^2.
struct HermiteEval {
  double value, derivative, sum_sq;
};

HermiteEval hermite(int n, double z) {
  double prev = 0.0, cur = 1.0, sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += cur * cur;
    const double next = (z * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
  }
  // psi_n' = sqrt(n) psi_{n-1}
  return {cur, std::sqrt(static_cast<double>(n)) * prev, sum_sq};
}

}  // namespace

GaussRule gauss_hermite_normal(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite_normal: n must be positive");
  GaussRule rule;
  if (n == 1) {
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  rule.nodes = jacobi_nodes(off);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    double z = rule.nodes(k);
    for (int it = 0; it < 3; ++it) {
      const HermiteEval e = hermite(n, z);
      z -= e.value / e.derivative;
    }
    rule.nodes(k) = z;
    rule.weights(k) = 1.0 / hermite(n, z).sum_sq;
  }
  // Enforce exact symmetry.
  for (int k = 0; k < n / 2; ++k) {
    const double z = 0.5 * (rule.nodes(n - 1 - k) - rule.nodes(k));
    const double w = 0.5 * (rule.weights(n - 1 - k) + rule.weights(k));
    rule.nodes(k) = -z;
    rule.nodes(n - 1 - k) = z;
    rule.weights(k) = rule.weights(n - 1 - k) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
  return rule;
}

GaussRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be positive");
  if (!(lo < hi)) throw InvalidArgument("gauss_legendre: need lo < hi");
  Eigen::VectorXd x;
  if (n == 1) {
    x = Eigen::VectorXd::Zero(1);
  } else {
    Eigen::VectorXd off(n - 1);
    for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    x = jacobi_nodes(off);
  }
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (hi - lo);
  for (int k = 0; k < n; ++k) {
    double z = x(k), deriv = 1.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0, p1 = z;
      for (int d = 2; d <= n; ++d) {
        const double p2 = ((2.0 * d - 1.0) * z * p1 - (d - 1.0) * p0) / d;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? z : p1;
      const double pm = n == 1 ? 1.0 : p0;
      deriv = n * (z * pn - pm) / (z * z - 1.0);
      z -= pn / deriv;
    }
    x(k) = z;
    rule.weights(k) = half * 2.0 / ((1.0 - z * z) * deriv * deriv);
  }
  for (int k = 0; k < n / 2; ++k) {
    const double z = 0.5 * (x(n - 1 - k) - x(k));
    const double w = 0.5 * (rule.weights(n - 1 - k) + rule.weights(k));
    x(k) = -z;
    x(n - 1 - k) = z;
    rule.weights(k) = rule.weights(n - 1 - k) = w;
  }
  if (n % 2 == 1) x(n / 2) = 0.0;
  for (int k = 0; k < n; ++k) rule.nodes(k) = lo + half * (1.0 + x(k));
  return rule;
}

GaussRule normal_panel_rule(int n_panels, int per_panel, double half_width) {
  if (n_panels < 1 || per_panel < 1) throw InvalidArgument("normal_panel_rule: sizes must be positive");
  if (!(half_width > 0.0)) throw InvalidArgument("normal_panel_rule: half_width must be positive");
  GaussRule rule;
  rule.nodes.resize(n_panels * per_panel);
  rule.weights.resize(n_panels * per_panel);
  const double width = 2.0 * half_width / n_panels;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  for (int i = 0; i < n_panels; ++i) {
    const double lo = -half_width + i * width;
    const GaussRule g = gauss_legendre(per_panel, lo, i + 1 == n_panels ? half_width : lo + width);
    for (int k = 0; k < per_panel; ++k) {
      const double z = g.nodes(k);
      rule.nodes(i * per_panel + k) = z;
      rule.weights(i * per_panel + k) = g.weights(k) * norm * std::exp(-0.5 * z * z);
    }
  }
  return rule;
}

GaussRule graded_time_rule(const RapConfig& rap, int n, double tail) {
  if (n < 2) throw InvalidArgument("graded_time_rule: need at least two nodes");
  if (!(tail > 0.0 && tail < 0.5)) throw InvalidArgument("graded_time_rule: tail must be in (0, 1/2)");
  const double T = rap.T1 - rap.T0;
  // Keep the last node representably below T1.
  const double scale = std::max(std::abs(rap.T0), std::abs(rap.T1));
  tail = std::max(tail, 64.0 * std::numeric_limits<double>::epsilon() * scale / T);
  if (!(tail < 0.5)) throw InvalidArgument("graded_time_rule: interval too short for its position");
  const int n_head = std::max(1, n / 4);
  const int n_tail = n - n_head;
  const GaussRule head = gauss_legendre(n_head, rap.T0, rap.T0 + 0.5 * T);
  const GaussRule s = gauss_legendre(n_tail, std::log(2.0), -std::log(tail));
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.nodes.head(n_head) = head.nodes;
  rule.weights.head(n_head) = head.weights;
  for (int k = 0; k < n_tail; ++k) {
    const double gap = T * std::exp(-s.nodes(k));
    rule.nodes(n_head + k) = rap.T1 - gap;
    // Weight from the gap as stored, so weight / (T1 - node) is exact.
    rule.weights(n_head + k) = s.weights(k) * (rap.T1 - rule.nodes(n_head + k));
  }
  return rule;
}

QuadratureSpec make_quadrature(const RapConfig& rap, int n_noise, int n_time, NoiseRule rule) {
  QuadratureSpec q;
  q.noise_rule = rule;
  if (rule == NoiseRule::kPanels) {
    const int panels = std::max(1, (n_noise + kNoisePanelOrder - 1) / kNoisePanelOrder);
    q.noise = normal_panel_rule(panels, kNoisePanelOrder);
  } else {
    q.noise = gauss_hermite_normal(n_noise);
  }
  q.n_noise = static_cast<int>(q.noise.nodes.size());
  q.time = graded_time_rule(rap, n_time);
  q.n_time = n_time;
  return q;
}

}  // namespace ibmot

#pragma once

#include <Eigen/Dense>

#include "ibmot/fam.hpp"

namespace ibmot {

struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// n-point Gauss rule for the standard normal density: sum_k w_k f(z_k)
/// approximates E[f(Z)], exact for polynomials of degree <= 2n - 1.
/// Nodes from the Golub-Welsch eigenproblem, polished by Newton on the
/// orthonormal Hermite recurrence; weights from the Christoffel function.
GaussRule gauss_hermite_normal(int n);

/// n-point Gauss-Legendre rule on the open interval (lo, hi).
GaussRule gauss_legendre(int n, double lo, double hi);

/// Composite rule for E[f(Z)], Z ~ N(0,1): n_panels equal panels on
/// [-half_width, half_width], each with a per_panel-point Gauss-Legendre
/// rule weighted by the normal density. Resolves the sharp posterior
/// transitions that a single Hermite rule converges slowly on.
GaussRule normal_panel_rule(int n_panels, int per_panel, double half_width = 10.0);

/// Open rule for integrals over (T0, T1) whose integrand carries a
/// 1/(T1 - t) factor: a quarter of the nodes are Gauss-Legendre on the first
/// half of the interval, the rest Gauss-Legendre in s = -log((T1 - t)/T) on
/// (log 2, -log tail), so nodes approach T1 geometrically down to T1 - tail T.
GaussRule graded_time_rule(const RapConfig& rap, int n, double tail = 1e-12);

enum class NoiseRule { kPanels, kHermite };

/// Node sets for the noise integral (standardized, a = sqrt(v(t)) z) and
/// the time integral (open, so the weight's pole at T1 is never evaluated).
struct QuadratureSpec {
  int n_noise = 288;
  int n_time = 64;
  NoiseRule noise_rule = NoiseRule::kPanels;
  GaussRule noise;
  GaussRule time;
};

inline constexpr int kNoisePanelOrder = 6;

/// Panels use kNoisePanelOrder points each, so n_noise is rounded up to a
/// multiple of it.
QuadratureSpec make_quadrature(const RapConfig& rap, int n_noise = 288, int n_time = 64,
                               NoiseRule rule = NoiseRule::kPanels);

}  // namespace ibmot

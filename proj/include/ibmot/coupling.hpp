#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ibmot/measures.hpp"

namespace ibmot {

/// Joint probabilities p(i, j) = P[X0 = x_i, X1 = y_j] on the product of the
/// marginal supports.
struct Coupling {
  Eigen::MatrixXd p;
  Eigen::VectorXd x;  ///< row support (atoms of mu)
  Eigen::VectorXd y;  ///< column support (atoms of nu)
};

/// p_ij = w_mu(i) w_nu(j). Generally not a martingale coupling.
Coupling independent_coupling(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Largest violation of each constraint family. The martingale residual of
/// row i is |sum_j p_ij (y_j - x_i)| / w_mu(i), the deviation of the
/// conditional mean.
struct CouplingResiduals {
  double negativity = 0.0;  ///< max(0, -min p_ij)
  double row_marginal = 0.0;
  double col_marginal = 0.0;
  double martingale = 0.0;

  double max() const;
};

CouplingResiduals validate_coupling(const Eigen::MatrixXd& p, const EmpiricalMeasure& mu,
                                    const EmpiricalMeasure& nu);

struct ProjectionResult {
  Coupling coupling;
  int iterations = 0;
  bool converged = false;
  double last_step = 0.0;         ///< Frobenius norm of the final Dykstra update
  double affine_residual = 0.0;   ///< max |A p - b| over the scaled equalities
  bool polished = false;          ///< finished by the exact active-set step
};

/// Euclidean projection onto the martingale-coupling polytope of (mu, nu).
///
/// The equality system (row sums, column sums, row-wise martingale
/// conditions, the latter scaled by 1/(1 + |x_i| + max|y|)) is factored once
/// through the pseudo-inverse of its Gram matrix A A^T, which is formed
/// analytically in O(lm). project() then alternates the closed-form affine
/// projection with clamping onto p >= 0 (Dykstra's scheme; the affine set
/// needs no correction term). Immutable after construction.
class MartingaleProjector {
public:
  /// Throws Infeasible when mu and nu are not in convex order.
  MartingaleProjector(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

  ProjectionResult project(const Eigen::MatrixXd& p, double tol = 1e-10,
                           int max_iter = 50'000) const;

  /// Orthogonal projection onto the affine hull {A p = b}.
  Eigen::MatrixXd project_affine(const Eigen::MatrixXd& p) const;

  /// Orthogonal projection onto the null space of A (the directions that keep
  /// every equality constraint satisfied).
  Eigen::MatrixXd project_tangent(const Eigen::MatrixXd& g) const;

  /// Dimension of the null space of the equality system.
  Eigen::Index affine_dimension() const { return rows() * cols() - rank_; }

  Eigen::Index rows() const { return x_.size(); }
  Eigen::Index cols() const { return y_.size(); }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }

  /// Dense scaled constraint matrix acting on the column-major vec(p).
  Eigen::MatrixXd constraint_matrix() const;
  Eigen::VectorXd constraint_rhs() const;

private:
  Eigen::VectorXd apply_A(const Eigen::MatrixXd& p) const;
  Eigen::MatrixXd apply_At(const Eigen::VectorXd& lambda) const;
  Eigen::MatrixXd masked_gram(const Eigen::MatrixXd& mask) const;
  static Eigen::Index pinv_gram(const Eigen::MatrixXd& gram, Eigen::MatrixXd& out);
  bool polish(const Eigen::MatrixXd& p0, const Eigen::MatrixXd& iterate, Eigen::MatrixXd& out) const;

  Eigen::VectorXd x_, y_, w_mu_, w_nu_, scale_;
  Eigen::VectorXd rhs_;
  Eigen::MatrixXd gram_pinv_;
  Eigen::Index rank_ = 0;
};

/// One-shot projection; throws NumericalError if Dykstra does not converge.
Coupling project_to_martingale(const Eigen::MatrixXd& p, const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& nu, double tol = 1e-10,
                               int max_iter = 50'000);

/// A feasible point plus an orthonormal basis of the equality null space.
/// Dense SVD of the constraint matrix; meant for small instances and oracles.
struct PolytopeBasis {
  Coupling anchor;
  std::vector<Eigen::MatrixXd> directions;
};

PolytopeBasis polytope_basis(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// sqrt(2 min(max_i w_mu(i), max_j w_nu(j))): an upper bound on the
/// Frobenius diameter of the polytope, from ||p||^2 <= max|p| * sum p.
double diameter_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace ibmot

#include "ibmot/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "ibmot/errors.hpp"

namespace ibmot {

Coupling independent_coupling(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return {mu.weights() * nu.weights().transpose(), mu.atoms(), nu.atoms()};
}

double CouplingResiduals::max() const {
  return std::max({negativity, row_marginal, col_marginal, martingale});
}

CouplingResiduals validate_coupling(const Eigen::MatrixXd& p, const EmpiricalMeasure& mu,
                                    const EmpiricalMeasure& nu) {
  if (p.rows() != mu.size() || p.cols() != nu.size())
    throw InvalidArgument("validate_coupling: shape does not match the marginals");
  CouplingResiduals r;
  r.negativity = std::max(0.0, -p.minCoeff());
  r.row_marginal = (p.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff();
  r.col_marginal = (p.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff();
  const Eigen::VectorXd first_moment = p * nu.atoms();
  const Eigen::VectorXd mass = p.rowwise().sum();
  r.martingale =
      ((first_moment - mass.cwiseProduct(mu.atoms())).array() / mu.weights().array()).abs().maxCoeff();
  return r;
}

// Gram matrix A_F A_F^T of the equalities restricted to the entries where
// mask = 1, formed analytically. Blocks: [row sums | column sums | martingale rows].
Eigen::MatrixXd MartingaleProjector::masked_gram(const Eigen::MatrixXd& mask) const {
  const Eigen::Index l = rows(), m = cols();
  const Eigen::Index n = 2 * l + m;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.topLeftCorner(l, l).diagonal() = mask.rowwise().sum();
  gram.block(l, l, m, m).diagonal() = mask.colwise().sum().transpose();
  gram.block(0, l, l, m) = mask;
  for (Eigen::Index i = 0; i < l; ++i) {
    const Eigen::ArrayXd d = (y_.array() - x_(i)) * mask.row(i).transpose().array();
    const double s = scale_(i);
    gram(i, l + m + i) = s * d.sum();
    gram(l + m + i, l + m + i) = s * s * (d * (y_.array() - x_(i))).sum();
    gram.block(l, l + m + i, m, 1) = s * d.matrix();
  }
  gram.triangularView<Eigen::StrictlyLower>() = gram.transpose().eval();
  return gram;
}

// Pseudo-inverse of a symmetric positive semidefinite matrix; returns the rank.
Eigen::Index MartingaleProjector::pinv_gram(const Eigen::MatrixXd& gram, Eigen::MatrixXd& out) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(1.0, ev.maxCoeff());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(gram.rows());
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < gram.rows(); ++k) {
    if (ev(k) > cutoff) {
      inv(k) = 1.0 / ev(k);
      ++rank;
    }
  }
  out = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return rank;
}

// Exact projection of p0 onto the face {A q = b, q = 0 off the support of
// `zero`'s complement}, accepted only if it satisfies the KKT conditions of
// the full problem: q >= 0 and nonnegative multipliers on the zero set.
bool MartingaleProjector::polish(const Eigen::MatrixXd& p0, const Eigen::MatrixXd& iterate,
                                 Eigen::MatrixXd& out) const {
  const Eigen::MatrixXd mask = (iterate.array() > 0.0).cast<double>().matrix();
  Eigen::MatrixXd pinv;
  pinv_gram(masked_gram(mask), pinv);
  const Eigen::MatrixXd masked = p0.cwiseProduct(mask);
  const Eigen::VectorXd lambda = pinv * (apply_A(masked) - rhs_);
  const Eigen::MatrixXd shift = apply_At(lambda);
  Eigen::MatrixXd q = (p0 - shift).cwiseProduct(mask);
  const double scale = std::max(1.0, p0.cwiseAbs().maxCoeff());
  if ((apply_A(q) - rhs_).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  if (q.minCoeff() < -1e-14 * scale) return false;
  // Multipliers of the active bounds: shift - p0 on the zero set.
  const Eigen::MatrixXd multipliers = (shift - p0).cwiseProduct(Eigen::MatrixXd::Ones(rows(), cols()) - mask);
  if (multipliers.minCoeff() < -1e-11 * scale) return false;
  out = q.cwiseMax(0.0);
  return true;
}

MartingaleProjector::MartingaleProjector(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu)
    : x_(mu.atoms()), y_(nu.atoms()), w_mu_(mu.weights()), w_nu_(nu.weights()) {
  const ConvexOrderReport order = convex_order_check(mu, nu);
  if (!order.ordered)
    throw Infeasible("marginals are not in convex order (min Q = " + std::to_string(order.min_Q) +
                     ", mean gap = " + std::to_string(order.mean_gap) + ")");

  const Eigen::Index l = rows(), m = cols();
  const double ymax = y_.cwiseAbs().maxCoeff();
  scale_ = (1.0 + x_.array().abs() + ymax).inverse().matrix();

  rhs_.setZero(2 * l + m);
  rhs_.head(l) = w_mu_;
  rhs_.segment(l, m) = w_nu_;

  rank_ = pinv_gram(masked_gram(Eigen::MatrixXd::Ones(l, m)), gram_pinv_);

  const Eigen::MatrixXd p0 = apply_At(gram_pinv_ * rhs_);
  const double residual = (apply_A(p0) - rhs_).cwiseAbs().maxCoeff();
  if (residual > 1e-9) throw Infeasible("marginal constraints are inconsistent (means differ)");
}

Eigen::VectorXd MartingaleProjector::apply_A(const Eigen::MatrixXd& p) const {
  const Eigen::Index l = rows(), m = cols();
  Eigen::VectorXd out(2 * l + m);
  out.head(l) = p.rowwise().sum();
  out.segment(l, m) = p.colwise().sum().transpose();
  out.tail(l) = scale_.cwiseProduct(p * y_ - out.head(l).cwiseProduct(x_));
  return out;
}

Eigen::MatrixXd MartingaleProjector::apply_At(const Eigen::VectorXd& lambda) const {
  const Eigen::Index l = rows(), m = cols();
  const Eigen::VectorXd row = lambda.head(l);
  const Eigen::VectorXd col = lambda.segment(l, m);
  const Eigen::VectorXd mart = scale_.cwiseProduct(lambda.tail(l));
  Eigen::MatrixXd out = row.replicate(1, m) + col.transpose().replicate(l, 1);
  out += mart * y_.transpose();
  out.colwise() -= mart.cwiseProduct(x_);
  return out;
}

Eigen::MatrixXd MartingaleProjector::project_affine(const Eigen::MatrixXd& p) const {
  return p - apply_At(gram_pinv_ * (apply_A(p) - rhs_));
}

Eigen::MatrixXd MartingaleProjector::project_tangent(const Eigen::MatrixXd& g) const {
  return g - apply_At(gram_pinv_ * apply_A(g));
}

ProjectionResult MartingaleProjector::project(const Eigen::MatrixXd& p, double tol,
                                              int max_iter) const {
  if (p.rows() != rows() || p.cols() != cols())
    throw InvalidArgument("project: shape does not match the marginals");

  ProjectionResult res;
  Eigen::MatrixXd current = p;
  Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(rows(), cols());
  Eigen::MatrixXd polished;
  int next_polish = 8;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    const Eigen::MatrixXd on_affine = project_affine(current);
    const Eigen::MatrixXd shifted = on_affine + correction;
    Eigen::MatrixXd next = shifted.cwiseMax(0.0);
    correction = shifted - next;
    res.last_step = (next - current).norm();
    current.swap(next);
    const bool small_step = res.last_step < tol;
    // Once Dykstra has settled on a zero pattern, the exact face projection
    // usually satisfies the KKT conditions; try it at doubling intervals.
    if (small_step || res.iterations == next_polish) {
      next_polish *= 2;
      if (polish(p, current, polished)) {
        current.swap(polished);
        res.converged = true;
        res.polished = true;
        break;
      }
    }
    if (small_step && (apply_A(current) - rhs_).cwiseAbs().maxCoeff() <= tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, max_iter);
  res.affine_residual = (apply_A(current) - rhs_).cwiseAbs().maxCoeff();
  res.coupling = {std::move(current), x_, y_};
  return res;
}

Eigen::MatrixXd MartingaleProjector::constraint_matrix() const {
  const Eigen::Index l = rows(), m = cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * l + m, l * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) {
      const Eigen::Index e = i + j * l;
      a(i, e) = 1.0;
      a(l + j, e) = 1.0;
      a(l + m + i, e) = scale_(i) * (y_(j) - x_(i));
    }
  }
  return a;
}

Eigen::VectorXd MartingaleProjector::constraint_rhs() const { return rhs_; }

Coupling project_to_martingale(const Eigen::MatrixXd& p, const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& nu, double tol, int max_iter) {
  const MartingaleProjector projector(mu, nu);
  ProjectionResult res = projector.project(p, tol, max_iter);
  if (!res.converged)
    throw NumericalError("Dykstra projection did not converge in " + std::to_string(max_iter) +
                         " iterations (last step " + std::to_string(res.last_step) +
                         ", affine residual " + std::to_string(res.affine_residual) + ")");
  return std::move(res.coupling);
}

PolytopeBasis polytope_basis(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const MartingaleProjector projector(mu, nu);
  PolytopeBasis basis;
  basis.anchor = project_to_martingale(independent_coupling(mu, nu).p, mu, nu);

  const Eigen::MatrixXd a = projector.constraint_matrix();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;

  const Eigen::Index l = mu.size(), m = nu.size();
  for (Eigen::Index k = rank; k < l * m; ++k) {
    basis.directions.emplace_back(Eigen::Map<const Eigen::MatrixXd>(svd.matrixV().col(k).data(), l, m));
  }
  return basis;
}

double diameter_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return std::sqrt(2.0 * std::min(mu.weights().maxCoeff(), nu.weights().maxCoeff()));
}

}  // namespace ibmot

// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/criticality.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fracprox {

StoppingRule relerr_stop(Eigen::VectorXd target, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("relerr_stop: tol must be > 0");
  StoppingRule rule;
  rule.kind = StopKind::RelErr;
  rule.tol = tol;
  rule.target = std::move(target);
  return rule;
}

StoppingRule residual_stop(std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> fn,
                           double tol) {
  if (tol <= 0.0) throw std::invalid_argument("residual_stop: tol must be > 0");
  if (!fn) throw std::invalid_argument("residual_stop: missing residual function");
  StoppingRule rule;
  rule.kind = StopKind::SubdiffResidual;
  rule.tol = tol;
  rule.residual = std::move(fn);
  return rule;
}

StoppingRule fixed_point_stop(double tol) {
  if (tol <= 0.0) throw std::invalid_argument("fixed_point_stop: tol must be > 0");
  StoppingRule rule;
  rule.kind = StopKind::FixedPointResidual;
  rule.tol = tol;
  return rule;
}

double fixed_point_residual(const FractionalProblem& problem, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double alpha0,
                            std::span<const double> alpha_blocks) {
  const BlockPartition& part = problem.partition();
  if (alpha0 <= 0.0 || static_cast<int>(alpha_blocks.size()) != part.count()) {
    throw std::invalid_argument("fixed_point_residual: bad step sizes");
  }
  const ExtendedReal q = problem.lifted_objective(x, y);
  if (!q.is_finite()) {
    throw std::domain_error("fixed_point_residual: point outside dom(Q)");
  }

  double total = (y - problem.gconj().conj_prox(y + alpha0 * x, alpha0)).norm();
  for (int i = 0; i < part.count(); ++i) {
    const double ai = alpha_blocks[static_cast<std::size_t>(i)];
    if (ai <= 0.0) throw std::invalid_argument("fixed_point_residual: bad step sizes");
    const Eigen::Index off = part.offset(i);
    const Eigen::Index len = part.size(i);
    const Eigen::VectorXd grad_i = problem.h().partial_gradient(x, off, len);
    const Eigen::VectorXd arg =
        x.segment(off, len) - ai * grad_i + (ai * q.value()) * y.segment(off, len);
    Eigen::VectorXd zi(len);
    problem.f().prox(off, arg, ai, zi);
    total += (x.segment(off, len) - zi).norm();
  }
  return total;
}

double fixed_point_residual(const FractionalProblem& problem, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double alpha) {
  std::vector<double> alphas(static_cast<std::size_t>(problem.partition().count()), alpha);
  return fixed_point_residual(problem, x, y, alpha, alphas);
}

double l2_conj_subdiff_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  constexpr double kSphereBand = 1e-12;
  const double ny = y.norm();
  if (ny > 1.0 + kSphereBand) {
    throw std::domain_error("l2_conj_subdiff_distance: |y|_2 > 1");
  }
  if (ny < 1.0 - kSphereBand) return x.norm();
  // On the sphere the subdifferential is the ray through y.
  const double t = std::max(x.dot(y) / (ny * ny), 0.0);
  return (x - t * y).norm();
}

double dist_subdiff_q_l1l2(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                           const BoxBounds& box) {
  const Eigen::Index n = x.size();
  if (y.size() != n || A.cols() != n || A.rows() != b.size() || box.dimension() != n) {
    throw std::invalid_argument("dist_subdiff_q_l1l2: dimension mismatch");
  }
  if (y.norm() > 1.0 + 1e-12) {
    throw std::domain_error("dist_subdiff_q_l1l2: y outside dom(g*)");
  }

  const double norm_x = x.norm();
  const Eigen::VectorXd r = A * x - b;
  const double zeta = x.lpNorm<1>() + 0.5 * lambda * norm_x * r.squaredNorm();
  if (zeta == 0.0) return 0.0;  // global minimum of the lifted objective

  const double eta = x.dot(y);
  if (!(eta > 0.0)) {
    throw std::domain_error("dist_subdiff_q_l1l2: point outside dom(Q)");
  }
  const double q = zeta / eta;

  if (norm_x == 0.0) {
    throw std::domain_error("dist_subdiff_q_l1l2: gradient undefined at x = 0");
  }
  const Eigen::VectorXd grad_h =
      (0.5 * lambda * r.squaredNorm() / norm_x) * x + (lambda * norm_x) * (A.transpose() * r);
  const Eigen::VectorXd target = q * y - grad_h;

  // Per coordinate the set is an interval: sign(x_j) (or [-1,1] at zero)
  // shifted by the box normal cone at binding coordinates.
  constexpr double kBindBand = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double dist_num_sq = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double lo, hi;
    if (x[j] > 0.0) {
      lo = hi = 1.0;
    } else if (x[j] < 0.0) {
      lo = hi = -1.0;
    } else {
      lo = -1.0;
      hi = 1.0;
    }
    const double bind_tol_hi = kBindBand * std::max(1.0, std::abs(box.upper[j]));
    const double bind_tol_lo = kBindBand * std::max(1.0, std::abs(box.lower[j]));
    if (x[j] >= box.upper[j] - bind_tol_hi) hi = kInf;
    if (x[j] <= box.lower[j] + bind_tol_lo) lo = -kInf;
    const double d = std::max({lo - target[j], target[j] - hi, 0.0});
    dist_num_sq += d * d;
  }

  const double dist_den = l2_conj_subdiff_distance(x, y);
  return std::sqrt(dist_num_sq + q * q * dist_den * dist_den) / eta;
}

double rel_err(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  const double nref = ref.norm();
  if (nref == 0.0) throw std::invalid_argument("rel_err: zero reference");
  return (x - ref).norm() / nref;
}

}  // namespace fracprox

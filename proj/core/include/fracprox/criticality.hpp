// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>

#include "fracprox/problem.hpp"
#include "fracprox/prox.hpp"

namespace fracprox {

/// How a solve decides it is done. Checked once per epoch, at the iterate
/// that starts the epoch.
enum class StopKind {
  RelErr,             // |x - target| / |target| < tol
  SubdiffResidual,    // model-supplied normalized subdifferential distance < tol
  FixedPointResidual  // prox fixed-point residual < tol
};

struct StoppingRule {
  StopKind kind = StopKind::RelErr;
  double tol = 1e-3;
  Eigen::VectorXd target;  // RelErr reference point
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> residual;  // SubdiffResidual
};

StoppingRule relerr_stop(Eigen::VectorXd target, double tol = 1e-3);
StoppingRule residual_stop(std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> fn,
                           double tol = 1e-7);
StoppingRule fixed_point_stop(double tol);

/// Fixed-point residual of the prox characterization of critical points:
///   |y - prox_{a0 g*}(y + a0 x)|
///   + sum_i |x_i - prox_{a_i f_i}(x_i - a_i grad_i h(x) + a_i Q(x,y) y_i)|.
/// Zero at (x, y) means x is a critical point of the ratio with y a
/// subgradient of the denominator; this holds for any positive step choices,
/// so the value at a critical point is step-independent. Rejects points with
/// non-positive dual denominator.
double fixed_point_residual(const FractionalProblem& problem, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double alpha0,
                            std::span<const double> alpha_blocks);
double fixed_point_residual(const FractionalProblem& problem, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double alpha = 1.0);

/// dist(x, subdifferential of the conjugate of |.|_2 at y): |x| when
/// |y|_2 < 1 (the subdifferential is {0}), distance to the ray {t y : t >= 0}
/// when |y|_2 = 1. A 1e-12 band classifies "on the sphere".
double l2_conj_subdiff_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Explicit distance from 0 to the subdifferential of the lifted objective
/// for the L1/L2 model (numerator |x|_1 + (lambda/2)|x|_2 |Ax-b|^2 with a
/// box, denominator |x|_2). Per coordinate, the numerator subdifferential is
/// the interval around sign(x_j) widened by the box normal cone at binding
/// coordinates; coordinates within 1e-12 of a bound count as binding, since
/// accepted prox outputs clamp exactly. Returns 0 when the numerator
/// vanishes. Rejects |y|_2 > 1.
double dist_subdiff_q_l1l2(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                           const BoxBounds& box);

/// |x - ref| / |ref|. Rejects a zero reference.
double rel_err(const Eigen::VectorXd& x, const Eigen::VectorXd& ref);

}  // namespace fracprox

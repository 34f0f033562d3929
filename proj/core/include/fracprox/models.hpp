// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <memory>

#include "fracprox/instance.hpp"
#include "fracprox/problem.hpp"
#include "fracprox/solver.hpp"

namespace fracprox {

/// f_i = |.|_1 plus the indicator of the box slice. The prox is exact
/// threshold-then-clamp per coordinate.
class L1BoxTerm final : public SeparableTerm {
 public:
  explicit L1BoxTerm(BoxBounds box) : box_(std::move(box)) {}

  ExtendedReal value(Eigen::Index offset,
                     const Eigen::Ref<const Eigen::VectorXd>& xi) const override;
  void prox(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& v, double alpha,
            Eigen::Ref<Eigen::VectorXd> out) const override;
  bool in_domain(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& xi) const override;

  const BoxBounds& box() const { return box_; }

 private:
  BoxBounds box_;
};

/// h(x) = (lambda/2) |Ax - b|^2. Globally Lipschitz differentiable; the
/// evaluator caches the residual Ax - b and updates it per block through
/// column-range products.
class LeastSquaresTerm final : public SmoothTerm {
 public:
  LeastSquaresTerm(std::shared_ptr<const Eigen::MatrixXd> A, Eigen::VectorXd b, double lambda);

  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd partial_gradient(const Eigen::VectorXd& x, Eigen::Index offset,
                                   Eigen::Index len) const override;
  std::unique_ptr<Evaluator> make_evaluator() const override;

 private:
  std::shared_ptr<const Eigen::MatrixXd> A_;
  Eigen::VectorXd b_;
  double lambda_;
};

/// h(x) = (lambda/2) |x|_2 |Ax - b|^2, the smooth part of the L1/L2 model.
/// Differentiable only away from the origin; the solver trajectory stays in
/// a sublevel set that excludes it, and evaluating the gradient at x = 0
/// throws.
class ScaledLeastSquaresTerm final : public SmoothTerm {
 public:
  ScaledLeastSquaresTerm(std::shared_ptr<const Eigen::MatrixXd> A, Eigen::VectorXd b,
                         double lambda);

  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd partial_gradient(const Eigen::VectorXd& x, Eigen::Index offset,
                                   Eigen::Index len) const override;
  std::unique_ptr<Evaluator> make_evaluator() const override;

 private:
  std::shared_ptr<const Eigen::MatrixXd> A_;
  Eigen::VectorXd b_;
  double lambda_;
};

/// g = |.|_2. g^* is the unit-ball indicator, so the conjugate prox is the
/// ball projection for every step size.
class EuclideanNormDenominator final : public DenominatorConjugate {
 public:
  ExtendedReal conj_value(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd conj_prox(const Eigen::VectorXd& z, double alpha) const override;
  double primal_value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd subgradient(const Eigen::VectorXd& x) const override;
  bool has_dual_subdiff_distance() const override { return true; }
  double dual_subdiff_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override;
};

/// g = |.|_(K), the sum of the K largest absolute entries. g^* is the
/// indicator of {|y|_inf <= 1, |y|_1 <= K}; the conjugate prox goes through
/// the Moreau decomposition and the K-norm prox. The subgradient picks the
/// sign pattern of the K largest magnitudes, lowest index first on ties.
class TopKNormDenominator final : public DenominatorConjugate {
 public:
  explicit TopKNormDenominator(int k);

  ExtendedReal conj_value(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd conj_prox(const Eigen::VectorXd& z, double alpha) const override;
  double primal_value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd subgradient(const Eigen::VectorXd& x) const override;

  int k() const { return k_; }

 private:
  int k_;
};

/// Largest singular value by power iteration on A^T A; deterministic
/// (fixed start vector, fixed tolerance).
double spectral_norm(const Eigen::MatrixXd& A);

/// Builds the fractional program for an instance over `blocks` contiguous
/// primal blocks. The returned problem shares the instance's matrix.
FractionalProblem make_problem(std::shared_ptr<const Instance> inst, int blocks);

/// Solver parameters used throughout the experiments: memory 2, sigma 1e-6,
/// gamma 0.5, dual step 1000, step cap 1e8. The spectral-step floor and
/// first trial step are model specific: 1.99 / (lambda |A|_2^2) for L1/SK
/// (h is globally Lipschitz there), 1e-8 and 1 for L1/L2.
SolverConfig default_config(const Instance& inst);

/// The experiment stopping rule: relative error to the ground truth (1e-3)
/// for L1/SK, normalized subdifferential distance (1e-7) for L1/L2.
StoppingRule default_stop(std::shared_ptr<const Instance> inst);

}  // namespace fracprox

// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <memory>

#include "fracprox/block_partition.hpp"
#include "fracprox/extended_real.hpp"

namespace fracprox {

/// Block-separable term f(x) = sum_i f_i(x_i). Implementations see blocks as
/// (offset into the full vector, slice), so one object serves any partition.
/// Each f_i must be bounded below and continuous on its domain.
class SeparableTerm {
 public:
  virtual ~SeparableTerm() = default;

  /// f_i evaluated on the slice starting at `offset`; +inf outside dom(f_i).
  virtual ExtendedReal value(Eigen::Index offset,
                             const Eigen::Ref<const Eigen::VectorXd>& xi) const = 0;

  /// prox_{alpha f_i}(v) written into `out`. Output must lie in dom(f_i).
  virtual void prox(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& v, double alpha,
                    Eigen::Ref<Eigen::VectorXd> out) const = 0;

  virtual bool in_domain(Eigen::Index offset,
                         const Eigen::Ref<const Eigen::VectorXd>& xi) const = 0;
};

/// Smooth term h with value, full gradient and per-block partial gradients.
/// h is only required to be locally Lipschitz differentiable on the feasible
/// region, which is why the solver line-searches instead of using 1/L steps.
class SmoothTerm {
 public:
  virtual ~SmoothTerm() = default;

  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;

  /// Slice [offset, offset+len) of the gradient. Default takes the slice of
  /// a full gradient; structured terms override with a cheaper path.
  virtual Eigen::VectorXd partial_gradient(const Eigen::VectorXd& x, Eigen::Index offset,
                                           Eigen::Index len) const {
    return gradient(x).segment(offset, len);
  }

  /// Incremental evaluation state owned by a single solve. The solver keeps
  /// one of these so that candidate values along a block line search cost
  /// O(m * block) instead of a full evaluation. reset() recomputes every
  /// cached quantity from scratch; the solver calls it once per epoch to
  /// bound error accumulation in the incremental updates.
  class Evaluator {
   public:
    virtual ~Evaluator() = default;

    virtual void reset(const Eigen::VectorXd& x) = 0;
    virtual double value() const = 0;
    virtual Eigen::VectorXd partial_gradient(Eigen::Index offset, Eigen::Index len) const = 0;
    /// h of the current point with the block at `offset` replaced by `zi`.
    virtual double value_with_block(Eigen::Index offset,
                                    const Eigen::Ref<const Eigen::VectorXd>& zi) const = 0;
    /// Makes the replacement permanent. Must reproduce value_with_block
    /// bitwise: value() after commit equals the candidate value returned for
    /// the same block.
    virtual void commit_block(Eigen::Index offset,
                              const Eigen::Ref<const Eigen::VectorXd>& zi) = 0;
  };

  /// Default evaluator recomputes from scratch through the plain oracles.
  virtual std::unique_ptr<Evaluator> make_evaluator() const;
};

/// Oracles for a convex, real-valued, non-negative denominator g, accessed
/// through its Fenchel conjugate g^*. The solver never needs g itself except
/// for diagnostics and the initial dual point.
class DenominatorConjugate {
 public:
  virtual ~DenominatorConjugate() = default;

  /// g^*(y); +inf outside dom(g^*).
  virtual ExtendedReal conj_value(const Eigen::VectorXd& y) const = 0;

  /// prox_{alpha g^*}(z). Output must lie in dom(g^*).
  virtual Eigen::VectorXd conj_prox(const Eigen::VectorXd& z, double alpha) const = 0;

  /// g(x).
  virtual double primal_value(const Eigen::VectorXd& x) const = 0;

  /// An element of the subdifferential of g at x; any tie rule must be
  /// deterministic. Requires g(x) > 0 for norm-like denominators.
  virtual Eigen::VectorXd subgradient(const Eigen::VectorXd& x) const = 0;

  /// dist(x, subdifferential of g^* at y) when available in closed form.
  virtual bool has_dual_subdiff_distance() const { return false; }
  virtual double dual_subdiff_distance(const Eigen::VectorXd& /*x*/,
                                       const Eigen::VectorXd& /*y*/) const {
    throw std::logic_error("dual_subdiff_distance: not available for this denominator");
  }
};

/// A single-ratio fractional program min (f(x) + h(x)) / g(x) over the set
/// where g is nonzero, presented through the oracles above plus a block
/// partition of the coordinates. Immutable after construction; one instance
/// may be shared read-only across concurrent solves.
class FractionalProblem {
 public:
  FractionalProblem(BlockPartition partition, std::shared_ptr<const SeparableTerm> f,
                    std::shared_ptr<const SmoothTerm> h,
                    std::shared_ptr<const DenominatorConjugate> gconj);

  const BlockPartition& partition() const { return partition_; }
  Eigen::Index dimension() const { return partition_.dimension(); }
  const SeparableTerm& f() const { return *f_; }
  const SmoothTerm& h() const { return *h_; }
  const DenominatorConjugate& gconj() const { return *gconj_; }

  /// f(x) + h(x), summed block by block, left to right, so repeated
  /// evaluations of the same bits are bit-identical. +inf outside dom(f).
  ExtendedReal numerator(const Eigen::VectorXd& x) const;

  /// <x, y> - g^*(y), the conjugate lower bound on g(x); -inf when
  /// g^*(y) = +inf so the lifted objective maps it to +inf uniformly.
  ExtendedReal dual_denominator(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// Lifted objective: numerator / dual_denominator when the numerator is
  /// finite and the denominator positive; +inf otherwise.
  ExtendedReal lifted_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// Original objective: numerator / g(x); +inf outside the feasible set
  /// (including g(x) = 0).
  ExtendedReal objective(const Eigen::VectorXd& x) const;

  /// A dual point y in the subdifferential of g at x, so that
  /// dual_denominator(x, y) = g(x). Throws when g(x) = 0.
  Eigen::VectorXd initial_dual(const Eigen::VectorXd& x) const;

 private:
  BlockPartition partition_;
  std::shared_ptr<const SeparableTerm> f_;
  std::shared_ptr<const SmoothTerm> h_;
  std::shared_ptr<const DenominatorConjugate> gconj_;
};

/// Inner product accumulated block by block in partition order. This is the
/// summation order used by every objective evaluation in the library.
double block_inner(const BlockPartition& partition, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b);

}  // namespace fracprox

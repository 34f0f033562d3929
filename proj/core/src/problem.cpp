// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/problem.hpp"

#include <stdexcept>
#include <utility>

namespace fracprox {

namespace {

// Fallback incremental evaluator: keeps a copy of the point and answers every
// query through the plain oracles. Correct for any smooth term, quadratic
// cost; the structured terms override this.
class GenericEvaluator final : public SmoothTerm::Evaluator {
 public:
  explicit GenericEvaluator(const SmoothTerm& h) : h_(h) {}

  void reset(const Eigen::VectorXd& x) override {
    x_ = x;
    value_ = h_.value(x_);
  }

  double value() const override { return value_; }

  Eigen::VectorXd partial_gradient(Eigen::Index offset, Eigen::Index len) const override {
    return h_.partial_gradient(x_, offset, len);
  }

  double value_with_block(Eigen::Index offset,
                          const Eigen::Ref<const Eigen::VectorXd>& zi) const override {
    Eigen::VectorXd cand = x_;
    cand.segment(offset, zi.size()) = zi;
    return h_.value(cand);
  }

  void commit_block(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& zi) override {
    x_.segment(offset, zi.size()) = zi;
    value_ = h_.value(x_);
  }

 private:
  const SmoothTerm& h_;
  Eigen::VectorXd x_;
  double value_ = 0.0;
};

}  // namespace

std::unique_ptr<SmoothTerm::Evaluator> SmoothTerm::make_evaluator() const {
  return std::make_unique<GenericEvaluator>(*this);
}

FractionalProblem::FractionalProblem(BlockPartition partition,
                                     std::shared_ptr<const SeparableTerm> f,
                                     std::shared_ptr<const SmoothTerm> h,
                                     std::shared_ptr<const DenominatorConjugate> gconj)
    : partition_(std::move(partition)), f_(std::move(f)), h_(std::move(h)),
      gconj_(std::move(gconj)) {
  if (!f_ || !h_ || !gconj_) {
    throw std::invalid_argument("FractionalProblem: null term");
  }
}

double block_inner(const BlockPartition& partition, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (int i = 0; i < partition.count(); ++i) {
    acc += a.segment(partition.offset(i), partition.size(i))
               .dot(b.segment(partition.offset(i), partition.size(i)));
  }
  return acc;
}

ExtendedReal FractionalProblem::numerator(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("numerator: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < partition_.count(); ++i) {
    const ExtendedReal fi = f_->value(partition_.offset(i), x.segment(partition_.offset(i), partition_.size(i)));
    if (!fi.is_finite()) return ExtendedReal::pos_inf();
    acc += fi.value();
  }
  return ExtendedReal::finite(acc + h_->value(x));
}

ExtendedReal FractionalProblem::dual_denominator(const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& y) const {
  if (x.size() != dimension() || y.size() != dimension()) {
    throw std::invalid_argument("dual_denominator: dimension mismatch");
  }
  const ExtendedReal gstar = gconj_->conj_value(y);
  if (!gstar.is_finite()) return ExtendedReal::neg_inf();
  return ExtendedReal::finite(block_inner(partition_, x, y) - gstar.value());
}

ExtendedReal FractionalProblem::lifted_objective(const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& y) const {
  const ExtendedReal den = dual_denominator(x, y);
  if (!den.is_finite() || den.value() <= 0.0) return ExtendedReal::pos_inf();
  const ExtendedReal num = numerator(x);
  if (!num.is_finite()) return ExtendedReal::pos_inf();
  return ExtendedReal::finite(num.value() / den.value());
}

ExtendedReal FractionalProblem::objective(const Eigen::VectorXd& x) const {
  const ExtendedReal num = numerator(x);
  if (!num.is_finite()) return ExtendedReal::pos_inf();
  const double g = gconj_->primal_value(x);
  if (g == 0.0) return ExtendedReal::pos_inf();
  return ExtendedReal::finite(num.value() / g);
}

Eigen::VectorXd FractionalProblem::initial_dual(const Eigen::VectorXd& x) const {
  if (gconj_->primal_value(x) <= 0.0) {
    throw std::domain_error("initial_dual: g(x) must be positive");
  }
  return gconj_->subgradient(x);
}

}  // namespace fracprox

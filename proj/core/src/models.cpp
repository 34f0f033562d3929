// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fracprox/criticality.hpp"
#include "fracprox/prox.hpp"

namespace fracprox {

namespace {

// Feasibility slack for the indicator conjugates. Prox outputs land in the
// domain up to roundoff; a strict test would bounce them to +inf.
constexpr double kDomSlack = 1e-9;

}  // namespace

ExtendedReal L1BoxTerm::value(Eigen::Index offset,
                              const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (xi[i] < box_.lower[offset + i] || xi[i] > box_.upper[offset + i]) {
      return ExtendedReal::pos_inf();
    }
    acc += std::abs(xi[i]);
  }
  return ExtendedReal::finite(acc);
}

void L1BoxTerm::prox(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& v, double alpha,
                     Eigen::Ref<Eigen::VectorXd> out) const {
  prox_l1_box(v, alpha, box_.lower.segment(offset, v.size()),
              box_.upper.segment(offset, v.size()), out);
}

bool L1BoxTerm::in_domain(Eigen::Index offset,
                          const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  return box_.contains(xi, offset);
}

// ---------------------------------------------------------------------------

LeastSquaresTerm::LeastSquaresTerm(std::shared_ptr<const Eigen::MatrixXd> A, Eigen::VectorXd b,
                                   double lambda)
    : A_(std::move(A)), b_(std::move(b)), lambda_(lambda) {
  if (!A_ || A_->rows() != b_.size()) throw std::invalid_argument("LeastSquaresTerm: bad shapes");
  if (lambda_ <= 0.0) throw std::invalid_argument("LeastSquaresTerm: lambda must be > 0");
}

double LeastSquaresTerm::value(const Eigen::VectorXd& x) const {
  return 0.5 * lambda_ * ((*A_) * x - b_).squaredNorm();
}

Eigen::VectorXd LeastSquaresTerm::gradient(const Eigen::VectorXd& x) const {
  return lambda_ * (A_->transpose() * ((*A_) * x - b_));
}

Eigen::VectorXd LeastSquaresTerm::partial_gradient(const Eigen::VectorXd& x, Eigen::Index offset,
                                                   Eigen::Index len) const {
  return lambda_ * (A_->middleCols(offset, len).transpose() * ((*A_) * x - b_));
}

namespace {

class LeastSquaresEvaluator final : public SmoothTerm::Evaluator {
 public:
  LeastSquaresEvaluator(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda)
      : A_(A), b_(b), lambda_(lambda), update_(A.rows()) {}

  void reset(const Eigen::VectorXd& x) override {
    x_ = x;
    residual_.noalias() = A_ * x_;
    residual_ -= b_;
  }

  double value() const override { return 0.5 * lambda_ * residual_.squaredNorm(); }

  Eigen::VectorXd partial_gradient(Eigen::Index offset, Eigen::Index len) const override {
    return lambda_ * (A_.middleCols(offset, len).transpose() * residual_);
  }

  double value_with_block(Eigen::Index offset,
                          const Eigen::Ref<const Eigen::VectorXd>& zi) const override {
    update_.noalias() = A_.middleCols(offset, zi.size()) * (zi - x_.segment(offset, zi.size()));
    return 0.5 * lambda_ * (residual_ + update_).squaredNorm();
  }

  void commit_block(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& zi) override {
    update_.noalias() = A_.middleCols(offset, zi.size()) * (zi - x_.segment(offset, zi.size()));
    residual_ += update_;
    x_.segment(offset, zi.size()) = zi;
  }

 private:
  const Eigen::MatrixXd& A_;
  const Eigen::VectorXd& b_;
  double lambda_;
  Eigen::VectorXd x_;
  Eigen::VectorXd residual_;
  mutable Eigen::VectorXd update_;
};

}  // namespace

std::unique_ptr<SmoothTerm::Evaluator> LeastSquaresTerm::make_evaluator() const {
  return std::make_unique<LeastSquaresEvaluator>(*A_, b_, lambda_);
}

// ---------------------------------------------------------------------------

ScaledLeastSquaresTerm::ScaledLeastSquaresTerm(std::shared_ptr<const Eigen::MatrixXd> A,
                                               Eigen::VectorXd b, double lambda)
    : A_(std::move(A)), b_(std::move(b)), lambda_(lambda) {
  if (!A_ || A_->rows() != b_.size()) {
    throw std::invalid_argument("ScaledLeastSquaresTerm: bad shapes");
  }
  if (lambda_ <= 0.0) throw std::invalid_argument("ScaledLeastSquaresTerm: lambda must be > 0");
}

double ScaledLeastSquaresTerm::value(const Eigen::VectorXd& x) const {
  return 0.5 * lambda_ * x.norm() * ((*A_) * x - b_).squaredNorm();
}

Eigen::VectorXd ScaledLeastSquaresTerm::gradient(const Eigen::VectorXd& x) const {
  const double nx = x.norm();
  if (nx == 0.0) throw std::domain_error("ScaledLeastSquaresTerm: gradient undefined at 0");
  const Eigen::VectorXd r = (*A_) * x - b_;
  return (0.5 * lambda_ * r.squaredNorm() / nx) * x + (lambda_ * nx) * (A_->transpose() * r);
}

Eigen::VectorXd ScaledLeastSquaresTerm::partial_gradient(const Eigen::VectorXd& x,
                                                         Eigen::Index offset,
                                                         Eigen::Index len) const {
  const double nx = x.norm();
  if (nx == 0.0) throw std::domain_error("ScaledLeastSquaresTerm: gradient undefined at 0");
  const Eigen::VectorXd r = (*A_) * x - b_;
  return (0.5 * lambda_ * r.squaredNorm() / nx) * x.segment(offset, len) +
         (lambda_ * nx) * (A_->middleCols(offset, len).transpose() * r);
}

namespace {

class ScaledLeastSquaresEvaluator final : public SmoothTerm::Evaluator {
 public:
  ScaledLeastSquaresEvaluator(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda)
      : A_(A), b_(b), lambda_(lambda), update_(A.rows()) {}

  void reset(const Eigen::VectorXd& x) override {
    x_ = x;
    residual_.noalias() = A_ * x_;
    residual_ -= b_;
    x_sq_ = x_.squaredNorm();
  }

  double value() const override {
    return 0.5 * lambda_ * std::sqrt(x_sq_) * residual_.squaredNorm();
  }

  Eigen::VectorXd partial_gradient(Eigen::Index offset, Eigen::Index len) const override {
    const double nx = std::sqrt(x_sq_);
    if (nx == 0.0) throw std::domain_error("ScaledLeastSquaresTerm: gradient undefined at 0");
    return (0.5 * lambda_ * residual_.squaredNorm() / nx) * x_.segment(offset, len) +
           (lambda_ * nx) * (A_.middleCols(offset, len).transpose() * residual_);
  }

  double value_with_block(Eigen::Index offset,
                          const Eigen::Ref<const Eigen::VectorXd>& zi) const override {
    const auto len = zi.size();
    update_.noalias() = A_.middleCols(offset, len) * (zi - x_.segment(offset, len));
    const double x_sq_new =
        x_sq_ + (zi.squaredNorm() - x_.segment(offset, len).squaredNorm());
    return 0.5 * lambda_ * std::sqrt(std::max(x_sq_new, 0.0)) *
           (residual_ + update_).squaredNorm();
  }

  void commit_block(Eigen::Index offset, const Eigen::Ref<const Eigen::VectorXd>& zi) override {
    const auto len = zi.size();
    update_.noalias() = A_.middleCols(offset, len) * (zi - x_.segment(offset, len));
    residual_ += update_;
    x_sq_ = x_sq_ + (zi.squaredNorm() - x_.segment(offset, len).squaredNorm());
    x_.segment(offset, len) = zi;
  }

 private:
  const Eigen::MatrixXd& A_;
  const Eigen::VectorXd& b_;
  double lambda_;
  Eigen::VectorXd x_;
  Eigen::VectorXd residual_;
  double x_sq_ = 0.0;
  mutable Eigen::VectorXd update_;
};

}  // namespace

std::unique_ptr<SmoothTerm::Evaluator> ScaledLeastSquaresTerm::make_evaluator() const {
  return std::make_unique<ScaledLeastSquaresEvaluator>(*A_, b_, lambda_);
}

// ---------------------------------------------------------------------------

ExtendedReal EuclideanNormDenominator::conj_value(const Eigen::VectorXd& y) const {
  return y.norm() <= 1.0 + 1e-12 ? ExtendedReal::finite(0.0) : ExtendedReal::pos_inf();
}

Eigen::VectorXd EuclideanNormDenominator::conj_prox(const Eigen::VectorXd& z,
                                                    double /*alpha*/) const {
  return project_l2_ball(z);
}

double EuclideanNormDenominator::primal_value(const Eigen::VectorXd& x) const { return x.norm(); }

Eigen::VectorXd EuclideanNormDenominator::subgradient(const Eigen::VectorXd& x) const {
  const double nx = x.norm();
  if (nx == 0.0) {
    throw std::domain_error("EuclideanNormDenominator: subgradient requested at 0");
  }
  return x / nx;
}

double EuclideanNormDenominator::dual_subdiff_distance(const Eigen::VectorXd& x,
                                                       const Eigen::VectorXd& y) const {
  return l2_conj_subdiff_distance(x, y);
}

// ---------------------------------------------------------------------------

TopKNormDenominator::TopKNormDenominator(int k) : k_(k) {
  if (k_ < 1) throw std::invalid_argument("TopKNormDenominator: k must be >= 1");
}

ExtendedReal TopKNormDenominator::conj_value(const Eigen::VectorXd& y) const {
  const double kd = static_cast<double>(k_);
  if (y.lpNorm<Eigen::Infinity>() <= 1.0 + kDomSlack &&
      y.lpNorm<1>() <= kd * (1.0 + kDomSlack)) {
    return ExtendedReal::finite(0.0);
  }
  return ExtendedReal::pos_inf();
}

Eigen::VectorXd TopKNormDenominator::conj_prox(const Eigen::VectorXd& z, double alpha) const {
  const int k = k_;
  return prox_conj_via_moreau(
      z, alpha, [k](const Eigen::VectorXd& u, double t) { return prox_knorm(u, t, k); });
}

double TopKNormDenominator::primal_value(const Eigen::VectorXd& x) const {
  return knorm(x, std::min<int>(k_, static_cast<int>(x.size())));
}

Eigen::VectorXd TopKNormDenominator::subgradient(const Eigen::VectorXd& x) const {
  const Eigen::Index n = x.size();
  const int k = std::min<int>(k_, static_cast<int>(n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&x](Eigen::Index a, Eigen::Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index idx = order[static_cast<std::size_t>(i)];
    y[idx] = x[idx] > 0.0 ? 1.0 : (x[idx] < 0.0 ? -1.0 : 0.0);
  }
  return y;
}

// ---------------------------------------------------------------------------

double spectral_norm(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double sigma = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd w = A.transpose() * (A * v);
    const double norm_w = w.norm();
    if (norm_w == 0.0) return 0.0;
    const double sigma_new = std::sqrt(norm_w);
    v = w / norm_w;
    if (std::abs(sigma_new - sigma) <= 1e-10 * sigma_new) return sigma_new;
    sigma = sigma_new;
  }
  return sigma;
}

FractionalProblem make_problem(std::shared_ptr<const Instance> inst, int blocks) {
  if (!inst) throw std::invalid_argument("make_problem: null instance");
  // Aliasing pointer: the problem keeps the instance alive, no matrix copy.
  auto A = std::shared_ptr<const Eigen::MatrixXd>(inst, &inst->A);
  auto f = std::make_shared<L1BoxTerm>(inst->box);
  std::shared_ptr<const SmoothTerm> h;
  std::shared_ptr<const DenominatorConjugate> g;
  if (inst->model == Model::L1SK) {
    h = std::make_shared<LeastSquaresTerm>(A, inst->b, inst->lambda);
    g = std::make_shared<TopKNormDenominator>(inst->k_norm);
  } else {
    h = std::make_shared<ScaledLeastSquaresTerm>(A, inst->b, inst->lambda);
    g = std::make_shared<EuclideanNormDenominator>();
  }
  return FractionalProblem(BlockPartition::uniform(inst->cols(), blocks), std::move(f),
                           std::move(h), std::move(g));
}

SolverConfig default_config(const Instance& inst) {
  SolverConfig cfg;
  cfg.memory = 2;
  cfg.sigma = 1e-6;
  cfg.gamma = 0.5;
  cfg.alpha_y = 1000.0;
  cfg.alpha_max = 1e8;
  if (inst.model == Model::L1SK) {
    const double norm_a = spectral_norm(inst.A);
    cfg.bb_floor = 1.99 / (inst.lambda * norm_a * norm_a);
    cfg.bb_init = cfg.bb_floor;
  } else {
    cfg.bb_floor = 1e-8;
    cfg.bb_init = 1.0;
  }
  cfg.alpha_lo = cfg.bb_floor;
  return cfg;
}

StoppingRule default_stop(std::shared_ptr<const Instance> inst) {
  if (!inst) throw std::invalid_argument("default_stop: null instance");
  if (inst->model == Model::L1SK) {
    return relerr_stop(inst->x_true, 1e-3);
  }
  auto fn = [inst](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double scale = std::sqrt(x.squaredNorm() + y.squaredNorm());
    return dist_subdiff_q_l1l2(x, y, inst->A, inst->b, inst->lambda, inst->box) / scale;
  };
  return residual_stop(std::move(fn), 1e-7);
}

}  // namespace fracprox

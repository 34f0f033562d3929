// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fracprox {

BoxBounds::BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("BoxBounds: bound dimensions differ");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw std::invalid_argument("BoxBounds: bounds must be finite with lower <= upper");
    }
  }
}

BoxBounds BoxBounds::symmetric(Eigen::Index n, double radius) {
  return BoxBounds(Eigen::VectorXd::Constant(n, -radius), Eigen::VectorXd::Constant(n, radius));
}

bool BoxBounds::contains(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index offset) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[offset + i] || x[i] > upper[offset + i]) return false;
  }
  return true;
}

void prox_l1_box(const Eigen::Ref<const Eigen::VectorXd>& v, double alpha,
                 const Eigen::Ref<const Eigen::VectorXd>& lower,
                 const Eigen::Ref<const Eigen::VectorXd>& upper,
                 Eigen::Ref<Eigen::VectorXd> out) {
  if (alpha <= 0.0) throw std::invalid_argument("prox_l1_box: alpha must be > 0");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = std::clamp(soft_threshold(v[i], alpha), lower[i], upper[i]);
  }
}

Eigen::VectorXd prox_l1_box(const Eigen::VectorXd& v, double alpha, const BoxBounds& box) {
  Eigen::VectorXd out(v.size());
  prox_l1_box(v, alpha, box.lower, box.upper, out);
  return out;
}

Eigen::VectorXd project_l2_ball(const Eigen::VectorXd& z) {
  const double norm = z.norm();
  if (norm <= 1.0) return z;
  return z / norm;
}

double knorm(const Eigen::VectorXd& x, int k) {
  const Eigen::Index n = x.size();
  if (k < 1 || k > n) throw std::invalid_argument("knorm: need 1 <= k <= n");
  std::vector<double> mags(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(), std::greater<double>());
  std::sort(mags.begin(), mags.begin() + k, std::greater<double>());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += mags[static_cast<std::size_t>(i)];
  return sum;
}

Eigen::VectorXd prox_knorm(const Eigen::VectorXd& z, double beta, int k) {
  const Eigen::Index n = z.size();
  if (k < 1 || k > n) throw std::invalid_argument("prox_knorm: need 1 <= k <= n");
  if (beta <= 0.0) throw std::invalid_argument("prox_knorm: beta must be > 0");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&z](Eigen::Index a, Eigen::Index b) { return std::abs(z[a]) > std::abs(z[b]); });

  // Pool adjacent violators on sorted |z| minus the weight pattern. Each
  // stack block carries the running average of its pooled entries; the final
  // averages are non-increasing by construction and are clipped at zero.
  struct Block {
    Eigen::Index first;
    Eigen::Index last;
    double sum;
    double avg;
  };
  std::vector<Block> stack;
  stack.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double weight = i < k ? beta : 0.0;
    const double s = std::abs(z[order[static_cast<std::size_t>(i)]]) - weight;
    stack.push_back({i, i, s, s});
    while (stack.size() > 1 && stack[stack.size() - 2].avg <= stack.back().avg) {
      Block top = stack.back();
      stack.pop_back();
      Block& merged = stack.back();
      merged.last = top.last;
      merged.sum += top.sum;
      merged.avg = merged.sum / static_cast<double>(merged.last - merged.first + 1);
    }
  }

  Eigen::VectorXd out(n);
  for (const Block& blk : stack) {
    const double v = std::max(blk.avg, 0.0);
    for (Eigen::Index i = blk.first; i <= blk.last; ++i) {
      const Eigen::Index idx = order[static_cast<std::size_t>(i)];
      out[idx] = z[idx] >= 0.0 ? v : -v;
    }
  }
  return out;
}

Eigen::VectorXd prox_conj_via_moreau(const Eigen::VectorXd& z, double alpha,
                                     const ScaledProx& primal_prox) {
  if (alpha <= 0.0) throw std::invalid_argument("prox_conj_via_moreau: alpha must be > 0");
  return z - alpha * primal_prox(z / alpha, 1.0 / alpha);
}

double brute_prox_grid_step(const Eigen::VectorXd& z, double alpha) {
  const double lo = z.minCoeff() - 2.0 * alpha - 1.0;
  const double hi = z.maxCoeff() + 2.0 * alpha + 1.0;
  return (hi - lo) / 400.0;
}

Eigen::VectorXd brute_prox_oracle(const Eigen::VectorXd& z, double alpha,
                                  const std::function<double(const Eigen::VectorXd&)>& objective) {
  const Eigen::Index dim = z.size();
  if (dim < 1 || dim > 3) {
    throw std::invalid_argument("brute_prox_oracle: dimension must be 1..3");
  }
  if (alpha <= 0.0) throw std::invalid_argument("brute_prox_oracle: alpha must be > 0");

  constexpr int kPoints = 401;
  const double lo = z.minCoeff() - 2.0 * alpha - 1.0;
  const double step = brute_prox_grid_step(z, alpha);
  const double half_inv_alpha = 0.5 / alpha;

  std::vector<double> axis(kPoints);
  for (int i = 0; i < kPoints; ++i) axis[static_cast<std::size_t>(i)] = lo + step * i;

  Eigen::VectorXd w(dim), best(dim);
  double best_val = std::numeric_limits<double>::infinity();
  const int ny = dim >= 2 ? kPoints : 1;
  const int nz = dim >= 3 ? kPoints : 1;
  for (int a = 0; a < kPoints; ++a) {
    w[0] = axis[static_cast<std::size_t>(a)];
    for (int b = 0; b < ny; ++b) {
      if (dim >= 2) w[1] = axis[static_cast<std::size_t>(b)];
      for (int c = 0; c < nz; ++c) {
        if (dim >= 3) w[2] = axis[static_cast<std::size_t>(c)];
        const double val = objective(w) + half_inv_alpha * (w - z).squaredNorm();
        if (val < best_val) {
          best_val = val;
          best = w;
        }
      }
    }
  }
  if (!std::isfinite(best_val)) {
    throw std::invalid_argument(
        "brute_prox_oracle: objective infinite on the whole grid (domain outside the span?)");
  }
  return best;
}

}  // namespace fracprox

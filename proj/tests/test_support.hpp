// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

// Shared helpers for the test suites. Everything here is an independent
// route to some quantity the library also computes; none of it calls the
// code path it is used to check.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "fracprox/random.hpp"

namespace testsupport {

/// Euclidean projection onto the l1 ball of the given radius by
/// water-filling: sort magnitudes, find the largest k with
/// mu_k = (sum_{i<=k} |v|_(i) - radius) / k below |v|_(k), shrink by mu_k.
inline Eigen::VectorXd project_l1_ball_waterfill(const Eigen::VectorXd& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  const Eigen::Index n = v.size();
  std::vector<double> mags(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cumsum = 0.0;
  double mu = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += mags[static_cast<std::size_t>(k)];
    const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
    if (candidate < mags[static_cast<std::size_t>(k)]) mu = candidate;
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::abs(v[i]) - mu;
    out[i] = m > 0.0 ? (v[i] > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

/// Central finite difference of a scalar function along direction d.
template <typename F>
double finite_diff_directional(F&& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                               double eps) {
  return (fn(x + eps * d) - fn(x - eps * d)) / (2.0 * eps);
}

/// Least-squares line fit y ~ a + b x; returns R^2.
inline double linear_fit_r2(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = intercept + slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  return ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
}

/// Sum of the k largest |x_i| straight from a sorted copy.
inline double topk_sum_sorted(const Eigen::VectorXd& x, int k) {
  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += mags[static_cast<std::size_t>(i)];
  return s;
}

/// Random vector with entries uniform on [-scale, scale).
inline Eigen::VectorXd random_vector(fracprox::Rng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.uniform_symmetric();
  return v;
}

/// Random point of the l2 unit ball (interior biased).
inline Eigen::VectorXd random_in_l2_ball(fracprox::Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v = random_vector(rng, n);
  const double norm = v.norm();
  if (norm > 0.0) v *= rng.uniform() / std::max(norm, 1.0);
  return v;
}

/// Random point of {|y|_inf <= 1, |y|_1 <= k}.
inline Eigen::VectorXd random_in_knorm_dual_ball(fracprox::Rng& rng, Eigen::Index n, int k) {
  Eigen::VectorXd v = random_vector(rng, n);
  const double l1 = v.lpNorm<1>();
  if (l1 > static_cast<double>(k)) v *= rng.uniform() * static_cast<double>(k) / l1;
  return v;
}

}  // namespace testsupport

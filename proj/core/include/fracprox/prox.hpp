// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <functional>

namespace fracprox {

/// Componentwise box constraint lower <= x <= upper with finite bounds.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxBounds() = default;
  BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi);

  /// Symmetric box [-radius, radius]^n.
  static BoxBounds symmetric(Eigen::Index n, double radius);

  Eigen::Index dimension() const { return lower.size(); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index offset = 0) const;
};

/// Scalar soft threshold sign(v) * max(|v| - alpha, 0).
inline double soft_threshold(double v, double alpha) {
  const double m = std::abs(v) - alpha;
  return m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
}

/// Proximity operator of alpha*|.|_1 plus the indicator of a box, evaluated
/// componentwise as threshold-then-clamp. In one dimension the objective is
/// convex with a piecewise-linear derivative, which makes this exact.
void prox_l1_box(const Eigen::Ref<const Eigen::VectorXd>& v, double alpha,
                 const Eigen::Ref<const Eigen::VectorXd>& lower,
                 const Eigen::Ref<const Eigen::VectorXd>& upper,
                 Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd prox_l1_box(const Eigen::VectorXd& v, double alpha, const BoxBounds& box);

/// Euclidean projection onto the closed l2 unit ball. For g = |.|_2 this is
/// prox of alpha*g^* for every alpha > 0: g^* is a ball indicator, so the
/// step size drops out.
Eigen::VectorXd project_l2_ball(const Eigen::VectorXd& z);

/// Sum of the K largest absolute entries (the vector K-norm).
double knorm(const Eigen::VectorXd& x, int k);

/// Proximity operator of beta * |.|_(K), the K-norm scaled by beta > 0.
///
/// The K-norm is the sorted weighted l1 norm with weights
/// (beta,...,beta,0,...,0), beta in the first K slots. The prox is computed
/// by a stack-based pool-adjacent-violators pass over |z| sorted descending
/// (stable, so ties keep their original order), restoring signs and the
/// permutation afterwards. O(n log n).
Eigen::VectorXd prox_knorm(const Eigen::VectorXd& z, double beta, int k);

/// prox_{t*g}(u) for the scaled primal function; the scale is the second
/// argument.
using ScaledProx = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

/// Conjugate prox through the Moreau decomposition:
///   prox_{alpha g^*}(z) = z - alpha * prox_{g/alpha}(z / alpha).
Eigen::VectorXd prox_conj_via_moreau(const Eigen::VectorXd& z, double alpha,
                                     const ScaledProx& primal_prox);

/// Brute-force prox ground truth for tests: minimizes
/// objective(w) + |w - z|^2 / (2 alpha) over a dense grid of 401 points per
/// axis spanning [min(z) - 2 alpha - 1, max(z) + 2 alpha + 1]. Only
/// dimensions 1..3 are accepted; accuracy is two grid steps.
Eigen::VectorXd brute_prox_oracle(const Eigen::VectorXd& z, double alpha,
                                  const std::function<double(const Eigen::VectorXd&)>& objective);

/// Grid spacing used by brute_prox_oracle for the given input.
double brute_prox_grid_step(const Eigen::VectorXd& z, double alpha);

}  // namespace fracprox

// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fracprox/prox.hpp"

namespace fracprox {

/// Which concrete recovery model an instance belongs to.
enum class Model { L1L2, L1SK };

const char* model_name(Model m);
Model model_from_name(const std::string& name);

/// One generated experiment instance: sensing matrix, measurements, ground
/// truth, box and model parameters, plus the seed it was generated from.
struct Instance {
  Model model = Model::L1SK;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd x_true;
  BoxBounds box;
  double lambda = 0.0;
  double coherence = 1.0;       // D
  Eigen::Index sparsity = 0;    // r
  int k_norm = 0;               // K; meaningful for the L1/SK model only
  std::uint64_t seed = 0;

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
};

/// Oversampled DCT sensing matrix: column j (1-based) is
/// cos(2 pi w j / D) / sqrt(m) with one frequency vector w drawn uniformly
/// from [0,1]^m. Larger D makes adjacent columns more coherent.
Eigen::MatrixXd dct_matrix(Eigen::Index m, Eigen::Index n, double coherence, std::uint64_t seed);

/// r support indices in {0,...,n-1} with pairwise gaps >= ceil(2 D), drawn
/// uniformly over all feasible supports via the gap transform. Rejects
/// infeasible (n, r, D).
std::vector<Eigen::Index> sparse_support(Eigen::Index n, Eigen::Index r, double coherence,
                                         std::uint64_t seed);

/// +-1 entries on the support (fair coin), zero elsewhere.
Eigen::VectorXd two_point_signal(Eigen::Index n, std::span<const Eigen::Index> support,
                                 std::uint64_t seed);

/// Entries s * 10^(3u) on the support with s a fair sign and u ~ U[0,1), so
/// the dynamic range approaches 1000. Zero elsewhere.
Eigen::VectorXd dynamic_range_signal(Eigen::Index n, std::span<const Eigen::Index> support,
                                     std::uint64_t seed);

/// L1/SK instance with exact measurements b = A x_true and box [-2, 2]^n.
/// The ground truth is a critical point by construction; this is checked at
/// build time through the fixed-point residual (tolerance 1e-6) and a
/// failure throws.
Instance make_l1sk_instance(Eigen::Index m, Eigen::Index n, Eigen::Index r, double coherence,
                            double lambda, int k, std::uint64_t seed);

/// L1/L2 instance with box [-1000, 1000]^n and b chosen so the ground truth
/// is a critical point: b = A x_true - rho where rho is the minimum-norm
/// solution of the support-restricted stationarity system. Off-support dual
/// feasibility and the subdifferential-distance certificate (tolerance 1e-8)
/// are verified; on failure the instance is resampled with a shifted seed,
/// up to 100 attempts.
Instance make_l1l2_instance(Eigen::Index m, Eigen::Index n, Eigen::Index r, double coherence,
                            double lambda, std::uint64_t seed);

/// Experiment starting point. L1/SK: ground truth plus a uniform [-0.2, 0.2]
/// perturbation, clamped into the box. L1/L2: the one-sparse point built
/// from the first column not orthogonal to b, which keeps the initial
/// objective below the level where the feasible set could close in on g = 0.
Eigen::VectorXd initial_point(const Instance& inst, std::uint64_t seed);

/// Flat binary container (all header fields little-endian 64-bit): magic,
/// version, model tag, m, n, r, D, lambda, K, seed; then row-major A, b,
/// x_true, box lower, box upper as 64-bit floats. A key=value manifest is
/// written next to the file for human inspection.
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

/// Path of the manifest that accompanies an instance file.
std::string manifest_path(const std::string& instance_path);

}  // namespace fracprox

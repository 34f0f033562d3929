// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/instance.hpp"

#include <Eigen/Cholesky>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fracprox/criticality.hpp"
#include "fracprox/models.hpp"
#include "fracprox/random.hpp"

static_assert(std::endian::native == std::endian::little,
              "instance container assumes a little-endian host");

namespace fracprox {

namespace {

// Sub-seed tags so the matrix, support, signal and initial-point streams are
// independent for a given instance seed.
enum : std::uint64_t {
  kSeedMatrix = 1,
  kSeedSupport = 2,
  kSeedSignal = 3,
};

Eigen::Index separation_gap(double coherence) {
  if (coherence <= 0.0) throw std::invalid_argument("separation: coherence must be > 0");
  return static_cast<Eigen::Index>(std::ceil(2.0 * coherence));
}

}  // namespace

const char* model_name(Model m) { return m == Model::L1SK ? "l1sk" : "l1l2"; }

Model model_from_name(const std::string& name) {
  if (name == "l1sk") return Model::L1SK;
  if (name == "l1l2") return Model::L1L2;
  throw std::invalid_argument("unknown model '" + name + "'");
}

Eigen::MatrixXd dct_matrix(Eigen::Index m, Eigen::Index n, double coherence, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("dct_matrix: need m, n >= 1");
  if (coherence <= 0.0) throw std::invalid_argument("dct_matrix: coherence must be > 0");
  Rng rng(seed);
  Eigen::VectorXd omega(m);
  for (Eigen::Index i = 0; i < m; ++i) omega[i] = rng.uniform();
  Eigen::MatrixXd A(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double freq = two_pi * static_cast<double>(j + 1) / coherence;
    for (Eigen::Index i = 0; i < m; ++i) {
      A(i, j) = scale * std::cos(freq * omega[i]);
    }
  }
  return A;
}

std::vector<Eigen::Index> sparse_support(Eigen::Index n, Eigen::Index r, double coherence,
                                         std::uint64_t seed) {
  if (r < 1 || n < 1) throw std::invalid_argument("sparse_support: need n, r >= 1");
  const Eigen::Index gap = separation_gap(coherence);
  if (r * gap > n) {
    throw std::invalid_argument("sparse_support: r * ceil(2D) exceeds n");
  }
  // Gap transform: sorted distinct draws from a shrunk range, re-inflated so
  // consecutive indices end up at least `gap` apart. This is a bijection
  // between subsets of the shrunk range and feasible supports, so the draw
  // is uniform over feasible supports.
  const Eigen::Index shrunk = n - (r - 1) * (gap - 1);
  Rng rng(seed);
  std::vector<Eigen::Index> support = rng.sample_sorted_distinct(shrunk, r);
  for (Eigen::Index i = 0; i < r; ++i) support[static_cast<std::size_t>(i)] += i * (gap - 1);
  return support;
}

Eigen::VectorXd two_point_signal(Eigen::Index n, std::span<const Eigen::Index> support,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index idx : support) x[idx] = rng.sign();
  return x;
}

Eigen::VectorXd dynamic_range_signal(Eigen::Index n, std::span<const Eigen::Index> support,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index idx : support) {
    const double s = rng.sign();
    const double u = rng.uniform();
    x[idx] = s * std::pow(10.0, 3.0 * u);
  }
  return x;
}

Instance make_l1sk_instance(Eigen::Index m, Eigen::Index n, Eigen::Index r, double coherence,
                            double lambda, int k, std::uint64_t seed) {
  if (lambda <= 0.0) throw std::invalid_argument("make_l1sk_instance: lambda must be > 0");
  if (k < 1 || k > n) throw std::invalid_argument("make_l1sk_instance: need 1 <= K <= n");
  Instance inst;
  inst.model = Model::L1SK;
  inst.A = dct_matrix(m, n, coherence, mix_seed(seed, kSeedMatrix));
  const auto support = sparse_support(n, r, coherence, mix_seed(seed, kSeedSupport));
  inst.x_true = two_point_signal(n, support, mix_seed(seed, kSeedSignal));
  inst.b = inst.A * inst.x_true;
  inst.box = BoxBounds::symmetric(n, 2.0);
  inst.lambda = lambda;
  inst.coherence = coherence;
  inst.sparsity = r;
  inst.k_norm = k;
  inst.seed = seed;

  // The exact measurements make the ground truth a critical point; check it
  // instead of assuming it.
  auto shared = std::make_shared<const Instance>(inst);
  const FractionalProblem problem = make_problem(shared, 1);
  const Eigen::VectorXd y = problem.initial_dual(inst.x_true);
  const double res = fixed_point_residual(problem, inst.x_true, y, 1.0);
  if (res > 1e-6) {
    throw std::runtime_error("make_l1sk_instance: criticality certificate failed, residual " +
                             std::to_string(res));
  }
  return inst;
}

Instance make_l1l2_instance(Eigen::Index m, Eigen::Index n, Eigen::Index r, double coherence,
                            double lambda, std::uint64_t seed) {
  if (lambda <= 0.0) throw std::invalid_argument("make_l1l2_instance: lambda must be > 0");
  if (r > m) throw std::invalid_argument("make_l1l2_instance: need r <= m");

  constexpr int kMaxAttempts = 100;
  std::string attempts;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t eff_seed = attempt == 0 ? seed : mix_seed(seed, 1000 + attempt);
    Instance inst;
    inst.model = Model::L1L2;
    inst.A = dct_matrix(m, n, coherence, mix_seed(eff_seed, kSeedMatrix));
    const auto support = sparse_support(n, r, coherence, mix_seed(eff_seed, kSeedSupport));
    inst.x_true = dynamic_range_signal(n, support, mix_seed(eff_seed, kSeedSignal));
    inst.box = BoxBounds::symmetric(n, 1000.0);
    inst.lambda = lambda;
    inst.coherence = coherence;
    inst.sparsity = r;
    inst.k_norm = 0;
    inst.seed = seed;

    // Stationarity at the ground truth pins the support components of
    // A^T rho, where rho is the planted residual A x_true - b:
    //   lambda a_j' rho = (|x|_1 / |x|_2^3) x_j - sign(x_j) / |x|_2.
    // Take the minimum-norm rho through the support-column Gram system and
    // keep the instance only if the off-support multipliers stay dual
    // feasible.
    const double norm_x = inst.x_true.norm();
    const double norm_x1 = inst.x_true.lpNorm<1>();
    Eigen::MatrixXd As(m, r);
    Eigen::VectorXd c(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      const Eigen::Index j = support[static_cast<std::size_t>(i)];
      As.col(i) = inst.A.col(j);
      const double sign_j = inst.x_true[j] > 0.0 ? 1.0 : -1.0;
      c[i] = (norm_x1 / (norm_x * norm_x * norm_x) * inst.x_true[j] - sign_j / norm_x) / lambda;
    }
    const Eigen::MatrixXd gram = As.transpose() * As;
    const Eigen::VectorXd rho = As * gram.ldlt().solve(c);
    inst.b = inst.A * inst.x_true - rho;

    const Eigen::VectorXd corr = lambda * (inst.A.transpose() * rho);
    bool feasible = true;
    std::size_t next_support = 0;
    const double bound = 1.0 / norm_x + 1e-12;
    for (Eigen::Index j = 0; j < n && feasible; ++j) {
      if (next_support < support.size() && support[next_support] == j) {
        ++next_support;
        continue;
      }
      feasible = std::abs(corr[j]) <= bound;
    }
    if (feasible) {
      const Eigen::VectorXd y = inst.x_true / norm_x;
      const double cert =
          dist_subdiff_q_l1l2(inst.x_true, y, inst.A, inst.b, lambda, inst.box);
      if (cert <= 1e-8) return inst;
    }
    attempts += (attempts.empty() ? "" : ", ") + std::to_string(eff_seed);
  }
  throw std::runtime_error("make_l1l2_instance: no certified instance after 100 attempts (seeds " +
                           attempts + ")");
}

Eigen::VectorXd initial_point(const Instance& inst, std::uint64_t seed) {
  const Eigen::Index n = inst.cols();
  if (inst.model == Model::L1SK) {
    Rng rng(seed);
    Eigen::VectorXd x0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = inst.x_true[i] + 0.2 * rng.uniform_symmetric();
      x0[i] = std::clamp(v, inst.box.lower[i], inst.box.upper[i]);
    }
    return x0;
  }
  // One-sparse point from the first column with a_j' b != 0, scaled by its
  // column correlation and capped at the box. Keeps the initial objective
  // below 1 + (lambda/2) |b|^2, which closes the sublevel set away from 0;
  // that level condition is asserted here rather than assumed.
  for (Eigen::Index j = 0; j < n; ++j) {
    const double corr = inst.A.col(j).dot(inst.b);
    if (corr != 0.0) {
      const double mag = std::min(std::abs(corr) / inst.A.col(j).squaredNorm(), inst.box.upper[j]);
      Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
      x0[j] = corr > 0.0 ? mag : -mag;
      const double f0 = 1.0 + 0.5 * inst.lambda * (mag * mag * inst.A.col(j).squaredNorm() -
                                                   2.0 * mag * std::abs(corr) +
                                                   inst.b.squaredNorm());
      if (!(f0 < 1.0 + 0.5 * inst.lambda * inst.b.squaredNorm())) {
        throw std::runtime_error("initial_point: level condition failed");
      }
      return x0;
    }
  }
  throw std::runtime_error("initial_point: b is orthogonal to every column");
}

namespace {

constexpr std::uint64_t kMagic = 0x31584f5250415246ull;  // "FRAPROX1"
constexpr std::uint64_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double)) * v.size());
}

void get_vector(std::istream& is, Eigen::VectorXd& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double)) * v.size());
}

}  // namespace

std::string manifest_path(const std::string& instance_path) { return instance_path + ".manifest"; }

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_instance: cannot open " + path);
  put_u64(os, kMagic);
  put_u64(os, kVersion);
  put_u64(os, inst.model == Model::L1L2 ? 1 : 2);
  put_u64(os, static_cast<std::uint64_t>(inst.rows()));
  put_u64(os, static_cast<std::uint64_t>(inst.cols()));
  put_u64(os, static_cast<std::uint64_t>(inst.sparsity));
  put_f64(os, inst.coherence);
  put_f64(os, inst.lambda);
  put_u64(os, static_cast<std::uint64_t>(inst.k_norm));
  put_u64(os, inst.seed);
  // Row-major matrix payload.
  for (Eigen::Index i = 0; i < inst.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.cols(); ++j) put_f64(os, inst.A(i, j));
  }
  put_vector(os, inst.b);
  put_vector(os, inst.x_true);
  put_vector(os, inst.box.lower);
  put_vector(os, inst.box.upper);
  if (!os) throw std::runtime_error("save_instance: write failed for " + path);

  std::ofstream manifest(manifest_path(path), std::ios::trunc);
  manifest << "model=" << model_name(inst.model) << "\n"
           << "m=" << inst.rows() << "\n"
           << "n=" << inst.cols() << "\n"
           << "r=" << inst.sparsity << "\n"
           << "D=" << inst.coherence << "\n"
           << "lambda=" << inst.lambda << "\n"
           << "K=" << inst.k_norm << "\n"
           << "seed=" << inst.seed << "\n";
}

Instance load_instance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_instance: cannot open " + path);
  if (get_u64(is) != kMagic) throw std::runtime_error("load_instance: bad magic in " + path);
  if (get_u64(is) != kVersion) throw std::runtime_error("load_instance: unsupported version");
  const std::uint64_t tag = get_u64(is);
  Instance inst;
  inst.model = tag == 1 ? Model::L1L2 : Model::L1SK;
  const auto m = static_cast<Eigen::Index>(get_u64(is));
  const auto n = static_cast<Eigen::Index>(get_u64(is));
  inst.sparsity = static_cast<Eigen::Index>(get_u64(is));
  inst.coherence = get_f64(is);
  inst.lambda = get_f64(is);
  inst.k_norm = static_cast<int>(get_u64(is));
  inst.seed = get_u64(is);
  inst.A.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) inst.A(i, j) = get_f64(is);
  }
  inst.b.resize(m);
  inst.x_true.resize(n);
  inst.box.lower.resize(n);
  inst.box.upper.resize(n);
  get_vector(is, inst.b);
  get_vector(is, inst.x_true);
  get_vector(is, inst.box.lower);
  get_vector(is, inst.box.upper);
  if (!is) throw std::runtime_error("load_instance: truncated file " + path);
  return inst;
}

}  // namespace fracprox

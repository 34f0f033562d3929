// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "fracprox/criticality.hpp"
#include "fracprox/instance.hpp"
#include "fracprox/models.hpp"
#include "fracprox/random.hpp"

using namespace fracprox;

TEST_CASE("dct_matrix: entry bounds and determinism") {
  const Eigen::MatrixXd a1 = dct_matrix(16, 40, 3.0, 99);
  const Eigen::MatrixXd a2 = dct_matrix(16, 40, 3.0, 99);
  CHECK(a1 == a2);
  CHECK(a1.cwiseAbs().maxCoeff() <= 1.0 / 4.0 + 1e-15);
  CHECK(dct_matrix(16, 40, 3.0, 100) != a1);
  CHECK_THROWS_AS(dct_matrix(0, 4, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(dct_matrix(4, 4, 0.0, 1), std::invalid_argument);
}

TEST_CASE("dct_matrix: adjacent-column coherence grows with D") {
  double mean_d1 = 0.0;
  double mean_d10 = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    for (const double d : {1.0, 10.0}) {
      const Eigen::MatrixXd a = dct_matrix(48, 30, d, 1000 + static_cast<std::uint64_t>(s));
      double acc = 0.0;
      for (Eigen::Index j = 0; j + 1 < a.cols(); ++j) {
        acc += std::abs(a.col(j).dot(a.col(j + 1))) / (a.col(j).norm() * a.col(j + 1).norm());
      }
      acc /= static_cast<double>(a.cols() - 1);
      (d == 1.0 ? mean_d1 : mean_d10) += acc / seeds;
    }
  }
  CHECK(mean_d10 > mean_d1);
}

TEST_CASE("sparse_support: separation constraint and edge cases") {
  for (int s = 0; s < 100; ++s) {
    const auto supp = sparse_support(10, 2, 2.0, static_cast<std::uint64_t>(s));
    REQUIRE(supp.size() == 2);
    CHECK(supp[1] - supp[0] >= 4);
    CHECK(supp[1] < 10);
  }
  CHECK(sparse_support(10, 1, 3.0, 5).size() == 1);
  CHECK_THROWS_AS(sparse_support(10, 3, 2.0, 1), std::invalid_argument);
}

TEST_CASE("sparse_support: every feasible configuration appears") {
  // n = 8, r = 2, D = 1: gap 2, so the feasible pairs are exactly those with
  // index difference >= 2. There are C(7,2) = 21 of them.
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (int s = 0; s < 100000; ++s) {
    const auto supp = sparse_support(8, 2, 1.0, static_cast<std::uint64_t>(s));
    CHECK(supp[1] - supp[0] >= 2);
    seen.emplace(supp[0], supp[1]);
  }
  CHECK(seen.size() == 21);
}

TEST_CASE("sparse_support: separation holds across random shapes") {
  Rng rng(7);
  for (int trial = 0; trial < 10000; ++trial) {
    const double d = 0.5 + 2.5 * rng.uniform();
    const auto gap = static_cast<Eigen::Index>(std::ceil(2.0 * d));
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.uniform_int(4));
    const Eigen::Index n = r * gap + static_cast<Eigen::Index>(rng.uniform_int(30));
    const auto supp = sparse_support(n, r, d, rng.next_u64());
    for (std::size_t i = 1; i < supp.size(); ++i) CHECK(supp[i] - supp[i - 1] >= gap);
  }
}

TEST_CASE("two_point_signal: support pattern and sign balance") {
  const auto supp = sparse_support(200, 20, 2.0, 3);
  const Eigen::VectorXd x1 = two_point_signal(200, supp, 17);
  CHECK(x1 == two_point_signal(200, supp, 17));
  int nnz = 0;
  for (Eigen::Index i = 0; i < x1.size(); ++i) {
    if (x1[i] != 0.0) {
      CHECK(std::abs(x1[i]) == 1.0);
      ++nnz;
    }
  }
  CHECK(nnz == 20);

  long plus = 0, total = 0;
  for (int s = 0; s < 500; ++s) {
    const Eigen::VectorXd x = two_point_signal(200, supp, static_cast<std::uint64_t>(s));
    for (Eigen::Index idx : supp) {
      total += 1;
      if (x[idx] > 0) ++plus;
    }
  }
  CHECK(std::abs(static_cast<double>(plus) / static_cast<double>(total) - 0.5) < 0.02);
}

TEST_CASE("dynamic_range_signal: magnitudes and range growth") {
  const auto small_supp = sparse_support(400, 5, 2.0, 4);
  const auto big_supp = sparse_support(400, 100, 1.0, 4);
  double mean_ratio_small = 0.0;
  double mean_ratio_big = 0.0;
  for (int s = 0; s < 50; ++s) {
    for (const auto* supp : {&small_supp, &big_supp}) {
      const Eigen::VectorXd x = dynamic_range_signal(400, *supp, static_cast<std::uint64_t>(s));
      double lo = 1e18, hi = 0.0;
      Eigen::Index nnz = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
          ++nnz;
          const double mag = std::abs(x[i]);
          CHECK(mag >= 1.0);
          CHECK(mag < 1000.0);
          lo = std::min(lo, mag);
          hi = std::max(hi, mag);
        }
      }
      CHECK(nnz == static_cast<Eigen::Index>(supp->size()));
      (supp == &small_supp ? mean_ratio_small : mean_ratio_big) += hi / lo / 50.0;
    }
  }
  CHECK(mean_ratio_big > mean_ratio_small);
  CHECK(mean_ratio_big > 100.0);  // approaches the nominal dynamic range
}

TEST_CASE("make_l1sk_instance: exact measurements and certificate") {
  const Instance inst = make_l1sk_instance(32, 160, 6, 2.0, 200.0, 6, 11);
  CHECK((inst.A * inst.x_true - inst.b).norm() == 0.0);
  CHECK(inst.box.upper[0] == 2.0);
  CHECK(inst.box.lower[0] == -2.0);

  auto shared = std::make_shared<const Instance>(inst);
  const FractionalProblem p = make_problem(shared, 1);
  const double res = fixed_point_residual(p, inst.x_true, p.initial_dual(inst.x_true), 1.0);
  CHECK(res <= 1e-6);

  // Construction-time certificate across many seeds at high coherence.
  for (std::uint64_t s = 0; s < 50; ++s) {
    CHECK_NOTHROW(make_l1sk_instance(24, 120, 4, 10.0, 200.0, 4, s));
  }
}

TEST_CASE("make_l1l2_instance: certificate, level condition, one-sparse start") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Instance inst = make_l1l2_instance(48, 240, 6, 1.0, 2e-4, s);
    const Eigen::VectorXd y = inst.x_true / inst.x_true.norm();
    CHECK(dist_subdiff_q_l1l2(inst.x_true, y, inst.A, inst.b, inst.lambda, inst.box) <= 1e-8);

    auto shared = std::make_shared<const Instance>(inst);
    const FractionalProblem p = make_problem(shared, 1);
    CHECK(p.objective(inst.x_true).is_finite());

    const Eigen::VectorXd x0 = initial_point(inst, mix_seed(s, 4));
    Eigen::Index nnz = 0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      if (x0[i] != 0.0) ++nnz;
    }
    CHECK(nnz == 1);
    CHECK(p.objective(x0).value() < 1.0 + 0.5 * inst.lambda * inst.b.squaredNorm());
  }
  // The level condition alone, over many more instances.
  for (std::uint64_t s = 100; s < 150; ++s) {
    const Instance inst = make_l1l2_instance(32, 120, 4, 1.0, 2e-4, s);
    const Eigen::VectorXd x0 = initial_point(inst, mix_seed(s, 4));
    const double f0 = x0.lpNorm<1>() / x0.norm() +
                      0.5 * inst.lambda * (inst.A * x0 - inst.b).squaredNorm();
    CHECK(f0 < 1.0 + 0.5 * inst.lambda * inst.b.squaredNorm());
  }
}

TEST_CASE("initial_point: L1/SK perturbation stays within 0.2 and the box") {
  const Instance inst = make_l1sk_instance(24, 120, 4, 2.0, 200.0, 4, 13);
  const Eigen::VectorXd x0 = initial_point(inst, 5);
  CHECK((x0 - inst.x_true).lpNorm<Eigen::Infinity>() <= 0.2);
  CHECK(inst.box.contains(x0));
  CHECK(x0 == initial_point(inst, 5));
  CHECK(x0 != initial_point(inst, 6));
}

TEST_CASE("instance generation is bitwise deterministic") {
  const Instance a = make_l1sk_instance(24, 120, 4, 3.0, 200.0, 4, 77);
  const Instance b = make_l1sk_instance(24, 120, 4, 3.0, 200.0, 4, 77);
  CHECK(a.A == b.A);
  CHECK(a.b == b.b);
  CHECK(a.x_true == b.x_true);

  const Instance c = make_l1l2_instance(32, 120, 4, 1.0, 2e-4, 31);
  const Instance d = make_l1l2_instance(32, 120, 4, 1.0, 2e-4, 31);
  CHECK(c.A == d.A);
  CHECK(c.b == d.b);
  CHECK(c.x_true == d.x_true);
}

TEST_CASE("save/load round trip is exact and writes a manifest") {
  const Instance inst = make_l1sk_instance(16, 80, 3, 2.0, 200.0, 3, 41);
  const std::string path = (std::filesystem::temp_directory_path() / "fracprox_rt.inst").string();
  save_instance(inst, path);
  const Instance back = load_instance(path);
  CHECK(back.model == inst.model);
  CHECK(back.A == inst.A);
  CHECK(back.b == inst.b);
  CHECK(back.x_true == inst.x_true);
  CHECK(back.box.lower == inst.box.lower);
  CHECK(back.box.upper == inst.box.upper);
  CHECK(back.lambda == inst.lambda);
  CHECK(back.coherence == inst.coherence);
  CHECK(back.sparsity == inst.sparsity);
  CHECK(back.k_norm == inst.k_norm);
  CHECK(back.seed == inst.seed);

  std::ifstream manifest(manifest_path(path));
  REQUIRE(manifest.good());
  std::string line;
  std::getline(manifest, line);
  CHECK(line == "model=l1sk");

  std::remove(path.c_str());
  std::remove(manifest_path(path).c_str());
  CHECK_THROWS_AS(load_instance(path), std::runtime_error);
}

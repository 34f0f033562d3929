// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <memory>

#include "fracprox/criticality.hpp"
#include "fracprox/instance.hpp"
#include "fracprox/models.hpp"
#include "fracprox/random.hpp"
#include "fracprox/solver.hpp"
#include "test_support.hpp"

using namespace fracprox;
using testsupport::random_vector;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

std::shared_ptr<const Instance> small_l1sk(std::uint64_t seed = 9) {
  return std::make_shared<const Instance>(make_l1sk_instance(32, 160, 6, 2.0, 200.0, 6, seed));
}

// Random point of dom(Q) for a problem: box point plus a dual point reached
// through the conjugate prox, resampled until the pairing is positive.
struct DomainSample {
  Eigen::VectorXd x, y;
};
DomainSample sample_domain(Rng& rng, const Instance& inst, const FractionalProblem& p) {
  for (;;) {
    Eigen::VectorXd x(inst.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = inst.box.lower[i] + rng.uniform() * (inst.box.upper[i] - inst.box.lower[i]);
    }
    if (x.norm() == 0.0) continue;
    const Eigen::VectorXd raw = random_vector(rng, inst.cols(), 2.0);
    const Eigen::VectorXd mixed = 0.5 * (raw + p.initial_dual(x));
    const Eigen::VectorXd y = p.gconj().conj_prox(mixed, 1.0);
    const ExtendedReal eta = p.dual_denominator(x, y);
    if (eta.is_finite() && eta.value() > 1e-6) return {x, y};
  }
}

}  // namespace

TEST_CASE("nonmonotone_reference: window maxima and tie ages") {
  const double w1[] = {5.0};
  CHECK(nonmonotone_reference(w1).value == 5.0);
  CHECK(nonmonotone_reference(w1).age == 0);

  const double w2[] = {5.0, 3.0, 4.0};
  CHECK(nonmonotone_reference(w2).value == 5.0);
  CHECK(nonmonotone_reference(w2).age == 2);

  const double w3[] = {4.0, 4.0, 3.0};
  CHECK(nonmonotone_reference(w3).value == 4.0);
  CHECK(nonmonotone_reference(w3).age == 1);  // ties resolve to the later index
}

TEST_CASE("bb_stepsize: ratio, fallback, clamping") {
  CHECK(bb_stepsize(vec({1.0, 0.0}), vec({2.0, 0.0}), 1e-8, 1e8, 7.0) == doctest::Approx(0.5));
  CHECK(bb_stepsize(vec({1.0, 0.0}), vec({0.0, 5.0}), 1e-8, 1e8, 7.0) == 7.0);
  CHECK(bb_stepsize(vec({1.0}), vec({1e-30}), 1e-8, 1e8, 3.0) == 3.0);
  CHECK(bb_stepsize(vec({10.0}), vec({1e-6}), 1e-8, 1e2, 1.0) == 1e2);
  CHECK(bb_stepsize(vec({1e-5}), vec({1.0}), 1e-3, 1e8, 1.0) == 1e-3);
}

TEST_CASE("schedule_next: cyclic order and randomized frequencies") {
  Rng rng(1);
  const int n_blocks = 8;
  for (long t = 0; t < 10; ++t) {
    CHECK(schedule_next(t, Schedule::Cyclic, n_blocks, rng, {}) ==
          static_cast<int>(t % (n_blocks + 1)));
  }
  CHECK(schedule_next(5 * (n_blocks + 1), Schedule::Cyclic, n_blocks, rng, {}) == 0);

  // Uniform randomized draw: all frequencies land within 1% of 1/(N+1).
  std::vector<long> counts(n_blocks + 1, 0);
  const long draws = 1000000;
  for (long t = 0; t < draws; ++t) {
    counts[static_cast<std::size_t>(schedule_next(t, Schedule::Randomized, n_blocks, rng, {}))]++;
  }
  const double expected = static_cast<double>(draws) / (n_blocks + 1);
  double chi_sq = 0.0;
  for (long c : counts) {
    CHECK(std::abs(static_cast<double>(c) / expected - 1.0) < 0.01);
    chi_sq += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi_sq < 26.12);  // chi-square 0.001 quantile, 8 dof

  // Explicit distribution path.
  const std::vector<double> probs = {0.5, 0.25, 0.25};
  long zero = 0;
  for (long t = 0; t < 100000; ++t) {
    if (schedule_next(t, Schedule::Randomized, 2, rng, probs) == 0) ++zero;
  }
  CHECK(std::abs(zero / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("step_y: projection case and second-step fixed point") {
  const BlockPartition part = BlockPartition::uniform(2, 1);
  class Zero final : public SeparableTerm {
   public:
    ExtendedReal value(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>&) const override {
      return ExtendedReal::finite(0.0);
    }
    void prox(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>& v, double,
              Eigen::Ref<Eigen::VectorXd> out) const override {
      out = v;
    }
    bool in_domain(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>&) const override {
      return true;
    }
  };
  class ZeroH final : public SmoothTerm {
   public:
    double value(const Eigen::VectorXd&) const override { return 0.0; }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
      return Eigen::VectorXd::Zero(x.size());
    }
  };
  const FractionalProblem p(part, std::make_shared<Zero>(), std::make_shared<ZeroH>(),
                            std::make_shared<EuclideanNormDenominator>());

  const Eigen::VectorXd x = vec({1.0, 0.0});
  const Eigen::VectorXd y0 = vec({0.0, 0.0});
  const Eigen::VectorXd y1 = step_y(p, x, y0, 1.0);
  CHECK(y1[0] == doctest::Approx(1.0));
  CHECK(y1[1] == doctest::Approx(0.0));
  CHECK(p.dual_denominator(x, y0).value() == doctest::Approx(0.0));
  CHECK(p.dual_denominator(x, y1).value() == doctest::Approx(1.0));  // reaches g(x)

  // The canonical dual point is a fixed point of the dual step.
  const Eigen::VectorXd yd = p.initial_dual(x);
  const Eigen::VectorXd y2 = step_y(p, x, yd, 3.7);
  CHECK((y2 - yd).norm() <= 1e-14);
}

TEST_CASE("step_y: prox inequalities hold on random domain points") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const DomainSample s = sample_domain(rng, *inst, p);
    const double alpha = std::pow(10.0, 3.0 * rng.uniform() - 1.0);
    const Eigen::VectorXd yp = step_y(p, s.x, s.y, alpha);
    const double eta_before = p.dual_denominator(s.x, s.y).value();
    const double eta_after = p.dual_denominator(s.x, yp).value();
    const double gain = (s.y - yp).squaredNorm() / alpha;
    const double g = p.gconj().primal_value(s.x);
    CHECK(eta_before + gain <= eta_after + 1e-10 * (1.0 + std::abs(eta_after)));
    CHECK(eta_after <= g + 1e-10 * (1.0 + std::abs(g)));
  }
}

TEST_CASE("step_x_block: gradient cancellation leaves the prox of the block") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  Rng rng(19);
  Eigen::VectorXd x(inst->cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 0.05 * rng.uniform_symmetric();

  const int block = 1;
  const Eigen::Index off = p.partition().offset(block);
  const Eigen::Index len = p.partition().size(block);
  // Choose y so that q * y_i equals the partial gradient: the prox argument
  // collapses to x_i.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(inst->cols());
  y.segment(off, len) = p.h().partial_gradient(x, off, len);
  const double alpha = 0.2;
  const Eigen::VectorXd zi = step_x_block(p, x, y, block, alpha, 1.0);
  // Entries sit inside the soft-threshold dead zone, so the block shrinks
  // to zero.
  CHECK(zi.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("step_x_block: ground truth is a fixed point at every step size") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  const Eigen::VectorXd y = p.initial_dual(inst->x_true);
  const double q = p.lifted_objective(inst->x_true, y).value();
  for (const double alpha : {0.25, 1.0, 13.0}) {
    for (int block = 0; block < 4; ++block) {
      const Eigen::VectorXd zi = step_x_block(p, inst->x_true, y, block, alpha, q);
      const Eigen::Index off = p.partition().offset(block);
      const Eigen::Index len = p.partition().size(block);
      CHECK((zi - inst->x_true.segment(off, len)).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("step_x_block: single-coordinate blocks match the grid oracle") {
  auto inst = std::make_shared<const Instance>(make_l1sk_instance(8, 6, 1, 1.0, 5.0, 1, 3));
  const FractionalProblem p = make_problem(inst, 6);  // one coordinate per block
  Rng rng(29);
  int verified = 0;
  for (int attempt = 0; attempt < 20000 && verified < 25; ++attempt) {
    const DomainSample s = sample_domain(rng, *inst, p);
    const double q = std::min(p.lifted_objective(s.x, s.y).value(), 1.5);
    const double alpha = 0.1 + rng.uniform();
    const int block = static_cast<int>(rng.uniform_int(6));
    const Eigen::Index off = p.partition().offset(block);

    const Eigen::VectorXd arg = vec({s.x[off] - alpha * p.h().partial_gradient(s.x, off, 1)[0] +
                                     alpha * q * s.y[off]});
    // The oracle grid is anchored at the prox argument; skip draws whose
    // clamped solution cannot lie on it.
    if (std::abs(arg[0]) > 2.0 * alpha + 0.9) continue;
    const Eigen::VectorXd zi = step_x_block(p, s.x, s.y, block, alpha, q);

    const double lo = inst->box.lower[off];
    const double hi = inst->box.upper[off];
    const auto objective = [lo, hi](const Eigen::VectorXd& w) {
      if (w[0] < lo || w[0] > hi) return std::numeric_limits<double>::infinity();
      return std::abs(w[0]);
    };
    const Eigen::VectorXd ref = brute_prox_oracle(arg, alpha, objective);
    CHECK(std::abs(zi[0] - ref[0]) <= 2.0 * brute_prox_grid_step(arg, alpha));
    ++verified;
  }
  CHECK(verified >= 10);
}

TEST_CASE("line_search_x: immediate acceptance and stationary acceptance") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  const Eigen::VectorXd x0 = initial_point(*inst, 77);
  const Eigen::VectorXd y0 = p.initial_dual(x0);
  const double f0 = p.objective(x0).value();

  // A conservative step passes on the first try.
  const SolverConfig cfg = default_config(*inst);
  const LineSearchResult r1 = line_search_x(p, x0, y0, 0, cfg.bb_floor, 1e-6, 0.5, f0);
  CHECK(r1.backtracks == 0);
  CHECK(r1.alpha == cfg.bb_floor);

  // At the ground truth the candidate equals the point: accepted untouched.
  const Eigen::VectorXd yt = p.initial_dual(inst->x_true);
  const double qt = p.lifted_objective(inst->x_true, yt).value();
  const LineSearchResult r2 = line_search_x(p, inst->x_true, yt, 1, 1.0, 1e-6, 0.5, qt);
  CHECK(r2.backtracks == 0);
  CHECK((r2.x_new - inst->x_true).norm() <= 1e-12);
}

TEST_CASE("line_search_x: inconsistent oracles hit the diagnostic cap") {
  // A separable term whose prox leaves its own domain can never pass the
  // acceptance test.
  class Broken final : public SeparableTerm {
   public:
    ExtendedReal value(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>& xi) const override {
      return xi.lpNorm<Eigen::Infinity>() <= 1.0 ? ExtendedReal::finite(0.0)
                                                 : ExtendedReal::pos_inf();
    }
    void prox(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>& v, double,
              Eigen::Ref<Eigen::VectorXd> out) const override {
      out = v.array() + 1000.0;  // always lands outside the domain
    }
    bool in_domain(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>& xi) const override {
      return xi.lpNorm<Eigen::Infinity>() <= 1.0;
    }
  };
  class ZeroH final : public SmoothTerm {
   public:
    double value(const Eigen::VectorXd&) const override { return 0.0; }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
      return Eigen::VectorXd::Zero(x.size());
    }
  };
  const FractionalProblem p(BlockPartition::uniform(2, 1), std::make_shared<Broken>(),
                            std::make_shared<ZeroH>(),
                            std::make_shared<EuclideanNormDenominator>());
  const Eigen::VectorXd x = vec({1.0, 0.0});
  CHECK_THROWS_AS(line_search_x(p, x, p.initial_dual(x), 0, 1.0, 1e-6, 0.5, 1.0),
                  std::runtime_error);
}

TEST_CASE("solve: critical start stops within one epoch") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  SolverConfig cfg = default_config(*inst);
  cfg.stop = fixed_point_stop(1e-7);
  const SolveReport rep = solve(p, inst->x_true, cfg);
  CHECK(rep.termination == Termination::ResidualMet);
  CHECK(rep.epochs == 0);
  CHECK(rep.final_residual <= 1e-7);
}

TEST_CASE("solve: descent invariants on a full run") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 8);
  SolverConfig cfg = default_config(*inst);
  cfg.stop = relerr_stop(inst->x_true, 1e-3);
  cfg.max_epochs = 2000;
  const Eigen::VectorXd x0 = initial_point(*inst, mix_seed(inst->seed, 4));
  const SolveReport rep = solve(p, x0, cfg);

  CHECK(rep.termination == Termination::RelErrMet);
  REQUIRE(!rep.q_trace.empty());
  // Reference sequence never increases; raw values never exceed the start.
  for (std::size_t i = 1; i < rep.q_trace.size(); ++i) {
    CHECK(rep.q_trace[i].q_ref <= rep.q_trace[i - 1].q_ref);
  }
  for (const QTraceEntry& e : rep.q_trace) {
    CHECK(e.q <= rep.q_trace[0].q);
    CHECK(e.q <= e.q_ref);
  }
  // The start value is the plain objective at x0.
  CHECK(rep.q_trace[0].q == doctest::Approx(p.objective(x0).value()).epsilon(1e-10));
  // Positive accepted steps, dual steps exactly at the configured value.
  for (const StepTraceEntry& e : rep.step_trace) {
    CHECK(e.alpha > 0.0);
    if (e.block == 0) CHECK(e.alpha == cfg.alpha_y);
  }
  // Steps vanish: the displacement energy of the last tenth of the trace is
  // under 1% of the first tenth.
  REQUIRE(rep.step_trace.size() == rep.q_trace.size());
  const std::size_t decile = rep.step_trace.size() / 10;
  REQUIRE(decile >= 1);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < decile; ++i) {
    head += rep.step_trace[i].dx_sq + rep.q_trace[i].q_ref * rep.step_trace[i].dy_sq;
    const std::size_t j = rep.step_trace.size() - 1 - i;
    tail += rep.step_trace[j].dx_sq + rep.q_trace[j].q_ref * rep.step_trace[j].dy_sq;
  }
  CHECK(tail < 0.01 * head);
}

TEST_CASE("solve: monotone variant decreases the raw objective") {
  auto inst = small_l1sk(123);
  const FractionalProblem p = make_problem(inst, 8);
  SolverConfig cfg = default_config(*inst);
  cfg.memory = 0;
  cfg.stop = relerr_stop(inst->x_true, 1e-3);
  cfg.max_epochs = 5000;
  const SolveReport rep = solve(p, initial_point(*inst, 5), cfg);
  CHECK(rep.termination == Termination::RelErrMet);
  for (std::size_t i = 1; i < rep.q_trace.size(); ++i) {
    CHECK(rep.q_trace[i].q <= rep.q_trace[i - 1].q);
  }
}

TEST_CASE("solve: identical seed and config reproduce the report bitwise") {
  auto inst = small_l1sk(55);
  const FractionalProblem p = make_problem(inst, 6);
  SolverConfig cfg = default_config(*inst);
  cfg.schedule = Schedule::Randomized;
  cfg.seed = 99;
  cfg.stop = relerr_stop(inst->x_true, 1e-3);
  cfg.max_epochs = 3000;
  const Eigen::VectorXd x0 = initial_point(*inst, 8);
  const SolveReport a = solve(p, x0, cfg);
  const SolveReport b = solve(p, x0, cfg);
  REQUIRE(a.q_trace.size() == b.q_trace.size());
  for (std::size_t i = 0; i < a.q_trace.size(); ++i) {
    CHECK(a.q_trace[i].q == b.q_trace[i].q);
    CHECK(a.q_trace[i].q_ref == b.q_trace[i].q_ref);
  }
  CHECK(a.final_x == b.final_x);
  CHECK(a.final_y == b.final_y);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("solve: randomized schedule converges too") {
  auto inst = small_l1sk(31);
  const FractionalProblem p = make_problem(inst, 8);
  SolverConfig cfg = default_config(*inst);
  cfg.schedule = Schedule::Randomized;
  cfg.seed = 7;
  cfg.stop = relerr_stop(inst->x_true, 1e-3);
  cfg.max_epochs = 5000;
  const SolveReport rep = solve(p, initial_point(*inst, 2), cfg);
  CHECK(rep.termination == Termination::RelErrMet);
  for (std::size_t i = 1; i < rep.q_trace.size(); ++i) {
    CHECK(rep.q_trace[i].q_ref <= rep.q_trace[i - 1].q_ref);
  }
}

TEST_CASE("solve: rejects bad inputs") {
  auto inst = small_l1sk();
  const FractionalProblem p = make_problem(inst, 4);
  SolverConfig cfg = default_config(*inst);
  cfg.stop = relerr_stop(inst->x_true, 1e-3);

  Eigen::VectorXd outside = inst->x_true;
  outside[0] = inst->box.upper[0] + 1.0;
  CHECK_THROWS_AS(solve(p, outside, cfg), std::invalid_argument);

  SolverConfig bad = cfg;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(solve(p, inst->x_true, bad), std::invalid_argument);
  bad = cfg;
  bad.alpha_y = bad.alpha_max * 10.0;
  CHECK_THROWS_AS(solve(p, inst->x_true, bad), std::invalid_argument);
  bad = cfg;
  bad.schedule = Schedule::Randomized;
  bad.probabilities = {0.5, 0.5};  // wrong arity for 4 blocks + dual
  CHECK_THROWS_AS(solve(p, inst->x_true, bad), std::invalid_argument);
}

TEST_CASE("solve: trace matches a plain reference implementation") {
  // Reference loop built only from the pure single-step operations; the
  // production loop uses incremental caches. Two epochs on a small instance
  // must agree on schedule, backtracks, steps and objective values.
  auto inst = small_l1sk(47);
  const int blocks = 4;
  const FractionalProblem p = make_problem(inst, blocks);
  SolverConfig cfg = default_config(*inst);
  cfg.stop = relerr_stop(inst->x_true, 1e-12);  // never fires
  cfg.max_epochs = 2;
  const Eigen::VectorXd x0 = initial_point(*inst, 21);
  const SolveReport rep = solve(p, x0, cfg);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = p.initial_dual(x0);
  std::deque<double> window;
  double alpha_bb = cfg.bb_init;
  std::size_t idx = 0;
  for (long t = 0; t < rep.iterations; ++t) {
    const double q_t = p.lifted_objective(x, y).value();
    window.push_back(q_t);
    if (static_cast<int>(window.size()) > cfg.memory + 1) window.pop_front();
    double q_ref = window[0];
    for (double v : window) q_ref = std::max(q_ref, v);

    REQUIRE(idx < rep.q_trace.size());
    CHECK(rep.q_trace[idx].q == doctest::Approx(q_t).epsilon(1e-9));
    CHECK(rep.q_trace[idx].q_ref == doctest::Approx(q_ref).epsilon(1e-9));

    const int pick = static_cast<int>(t % (blocks + 1));
    CHECK(rep.step_trace[idx].block == pick);
    if (pick == 0) {
      y = step_y(p, x, y, cfg.alpha_y);
    } else {
      const int bi = pick - 1;
      const Eigen::Index off = p.partition().offset(bi);
      const Eigen::Index len = p.partition().size(bi);
      const Eigen::VectorXd grad_before = p.h().partial_gradient(x, off, len);
      const LineSearchResult ls =
          line_search_x(p, x, y, bi, alpha_bb, cfg.sigma, cfg.gamma, q_ref);
      CHECK(rep.step_trace[idx].backtracks == ls.backtracks);
      CHECK(rep.step_trace[idx].alpha == doctest::Approx(ls.alpha).epsilon(1e-9));
      const Eigen::VectorXd grad_after = p.h().partial_gradient(ls.x_new, off, len);
      const Eigen::VectorXd dz = ls.x_new.segment(off, len) - x.segment(off, len);
      alpha_bb = bb_stepsize(dz, grad_after - grad_before, cfg.bb_floor, cfg.alpha_max, alpha_bb);
      x = ls.x_new;
    }
    ++idx;
  }
  CHECK((x - rep.final_x).lpNorm<Eigen::Infinity>() <= 1e-9);
}

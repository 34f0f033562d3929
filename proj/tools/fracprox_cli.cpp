// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <memory>

#include "fracprox/criticality.hpp"
#include "fracprox/experiment.hpp"
#include "fracprox/instance.hpp"
#include "fracprox/models.hpp"
#include "fracprox/random.hpp"
#include "fracprox/solver.hpp"

namespace {

using namespace fracprox;

struct GenArgs {
  std::string model = "l1sk";
  long m = 640, n = 5400, r = 100;
  double coherence = 1.0;
  double lambda = 200.0;
  int k = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a) {
  Instance inst;
  if (model_from_name(a.model) == Model::L1SK) {
    const int k = a.k > 0 ? a.k : static_cast<int>(a.r);
    inst = make_l1sk_instance(a.m, a.n, a.r, a.coherence, a.lambda, k, a.seed);
  } else {
    inst = make_l1l2_instance(a.m, a.n, a.r, a.coherence, a.lambda, a.seed);
  }
  save_instance(inst, a.out);
  std::cout << "wrote " << a.out << " (" << model_name(inst.model) << ", m=" << inst.rows()
            << ", n=" << inst.cols() << ", r=" << inst.sparsity << ", D=" << inst.coherence
            << ", seed=" << inst.seed << ")\n";
  return 0;
}

struct SolveArgs {
  std::string file;
  std::string algo = "cmpga";
  int blocks = 8;
  int memory = 2;
  double sigma = 1e-6;
  double gamma = 0.5;
  double alpha_y = 1000.0;
  double alpha_cap = 1e8;
  std::uint64_t seed = 0;
  long max_epochs = 20000;
  std::string stop;  // relerr | residual; empty = model default
  double tol = 0.0;
};

int run_solve(const SolveArgs& a) {
  auto inst = std::make_shared<const Instance>(load_instance(a.file));
  const FractionalProblem problem = make_problem(inst, a.blocks);

  SolverConfig cfg = default_config(*inst);
  cfg.memory = a.memory;
  cfg.sigma = a.sigma;
  cfg.gamma = a.gamma;
  cfg.alpha_y = a.alpha_y;
  cfg.alpha_max = a.alpha_cap;
  cfg.seed = a.seed;
  cfg.max_epochs = a.max_epochs;
  if (a.algo == "cmpga") {
    cfg.schedule = Schedule::Cyclic;
  } else if (a.algo == "rmpga") {
    cfg.schedule = Schedule::Randomized;
  } else {
    throw ConfigError("unknown algorithm '" + a.algo + "'");
  }
  if (a.stop.empty()) {
    cfg.stop = default_stop(inst);
  } else if (a.stop == "relerr") {
    cfg.stop = relerr_stop(inst->x_true, a.tol > 0.0 ? a.tol : 1e-3);
  } else if (a.stop == "residual") {
    // The L1/L2 model has a closed-form subdifferential distance; other
    // models fall back to the generic prox fixed-point residual.
    if (inst->model == Model::L1L2) {
      cfg.stop = default_stop(inst);
      if (a.tol > 0.0) cfg.stop.tol = a.tol;
    } else {
      cfg.stop = fixed_point_stop(a.tol > 0.0 ? a.tol : 1e-5);
    }
  } else {
    throw ConfigError("stop must be relerr or residual");
  }
  if (a.tol > 0.0) cfg.stop.tol = a.tol;

  const Eigen::VectorXd x0 = initial_point(*inst, mix_seed(inst->seed, 4));
  const SolveReport rep = solve(problem, x0, cfg);

  std::printf("termination      %s\n", termination_name(rep.termination));
  std::printf("epochs           %ld\n", rep.epochs);
  std::printf("iterations       %ld\n", rep.iterations);
  std::printf("objective        %.17g\n", rep.final_objective);
  std::printf("stop criterion   %.17g\n", rep.final_residual);
  std::printf("wall time (s)    %.6f\n", rep.wall_time_sec);
  return rep.termination == Termination::MaxEpochs ? 1 : 0;
}

struct BenchArgs {
  std::string config;
  std::string out;
  int jobs = 1;
};

int run_bench(const BenchArgs& a) {
  ExperimentSpec spec = parse_experiment_file(a.config);
  if (!a.out.empty()) spec.output_path = a.out;
  if (spec.output_path.empty()) throw ConfigError("no output path (set --out or out= in config)");

  std::vector<ResultRow> rows = run_experiment(spec, a.jobs);
  const std::vector<ResultRow> means = aggregate(rows);
  rows.insert(rows.end(), means.begin(), means.end());
  write_csv_file(rows, spec.output_path);
  std::cout << "wrote " << spec.output_path << " (" << rows.size() - means.size()
            << " instance rows, " << means.size() << " aggregate rows)\n";
  return has_error_rows(rows) ? 1 : 0;
}

int run_verify(const std::string& file) {
  int failures = 0;
  auto check = [&failures](bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : "  ",
                detail.c_str());
    if (!ok) ++failures;
  };

  auto inst = std::make_shared<const Instance>(load_instance(file));
  const Eigen::Index n = inst->cols();

  // Support separation.
  {
    Eigen::Index min_gap = n;
    Eigen::Index prev = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (inst->x_true[j] != 0.0) {
        if (prev >= 0) min_gap = std::min(min_gap, j - prev);
        prev = j;
      }
    }
    const auto gap = static_cast<Eigen::Index>(std::ceil(2.0 * inst->coherence));
    check(inst->sparsity <= 1 || min_gap >= gap, "support-separation",
          "min gap " + std::to_string(min_gap));
  }

  // Criticality certificate at the ground truth.
  const FractionalProblem problem = make_problem(inst, 1);
  if (inst->model == Model::L1SK) {
    check((inst->A * inst->x_true - inst->b).norm() == 0.0, "exact-measurements", "");
    const Eigen::VectorXd y = problem.initial_dual(inst->x_true);
    const double res = fixed_point_residual(problem, inst->x_true, y, 1.0);
    check(res <= 1e-6, "criticality-certificate", "residual " + std::to_string(res));
  } else {
    const Eigen::VectorXd y = inst->x_true / inst->x_true.norm();
    const double cert = dist_subdiff_q_l1l2(inst->x_true, y, inst->A, inst->b, inst->lambda,
                                            inst->box);
    check(cert <= 1e-8, "criticality-certificate", "distance " + std::to_string(cert));
    const Eigen::VectorXd x0 = initial_point(*inst, mix_seed(inst->seed, 4));
    const double f0 = problem.objective(x0).value();
    const double level = 1.0 + 0.5 * inst->lambda * inst->b.squaredNorm();
    check(f0 < level, "initial-level-condition", "");
  }

  // Short solve: descent, bounded values, positive steps.
  {
    auto cfg = default_config(*inst);
    cfg.stop = relerr_stop(inst->x_true, 1e-3);
    cfg.max_epochs = 10;
    const Eigen::VectorXd x0 = initial_point(*inst, mix_seed(inst->seed, 4));
    const SolveReport rep = solve(make_problem(inst, 8 <= n ? 8 : 1), x0, cfg);
    bool descent = true;
    for (std::size_t i = 1; i < rep.q_trace.size(); ++i) {
      descent = descent && rep.q_trace[i].q_ref <= rep.q_trace[i - 1].q_ref;
    }
    check(descent, "reference-descent", "");
    bool bounded = true;
    for (const QTraceEntry& e : rep.q_trace) bounded = bounded && e.q <= rep.q_trace[0].q;
    check(bounded, "value-bounded-by-start", "");
    double min_alpha = cfg.alpha_max;
    for (const StepTraceEntry& e : rep.step_trace) min_alpha = std::min(min_alpha, e.alpha);
    check(min_alpha > 0.0, "step-floor", "min step " + std::to_string(min_alpha));
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-program solver and experiment driver"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "Generate an instance file");
  cmd_gen->add_option("--model", gen.model, "l1sk or l1l2")->check(CLI::IsMember({"l1sk", "l1l2"}));
  cmd_gen->add_option("--m", gen.m, "rows");
  cmd_gen->add_option("--n", gen.n, "columns");
  cmd_gen->add_option("--r", gen.r, "sparsity");
  cmd_gen->add_option("--D", gen.coherence, "coherence parameter");
  cmd_gen->add_option("--lambda", gen.lambda, "data-fit weight");
  cmd_gen->add_option("--K", gen.k, "K-norm order (default: r)");
  cmd_gen->add_option("--seed", gen.seed, "instance seed");
  cmd_gen->add_option("--out", gen.out, "output path")->required();

  SolveArgs sol;
  auto* cmd_solve = app.add_subcommand("solve", "Solve one instance file");
  cmd_solve->add_option("file", sol.file, "instance file")->required();
  cmd_solve->add_option("--algo", sol.algo, "cmpga or rmpga")
      ->check(CLI::IsMember({"cmpga", "rmpga"}));
  cmd_solve->add_option("--blocks", sol.blocks, "number of primal blocks");
  cmd_solve->add_option("--memory", sol.memory, "line-search look-back window");
  cmd_solve->add_option("--sigma", sol.sigma, "acceptance decrease weight");
  cmd_solve->add_option("--gamma", sol.gamma, "backtracking shrink factor");
  cmd_solve->add_option("--alpha-y", sol.alpha_y, "dual prox step");
  cmd_solve->add_option("--alpha-cap", sol.alpha_cap, "step upper bound");
  cmd_solve->add_option("--seed", sol.seed, "solver seed (randomized schedule)");
  cmd_solve->add_option("--max-epochs", sol.max_epochs, "epoch cap");
  cmd_solve->add_option("--stop", sol.stop, "relerr or residual (default: model rule)")
      ->check(CLI::IsMember({"relerr", "residual"}));
  cmd_solve->add_option("--tol", sol.tol, "stopping tolerance");

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "Run a batch experiment from a config file");
  cmd_bench->add_option("config", bench.config, "key=value experiment config")->required();
  cmd_bench->add_option("--out", bench.out, "CSV output path");
  cmd_bench->add_option("--jobs", bench.jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string verify_file;
  auto* cmd_verify = app.add_subcommand("verify", "Run the invariant suite on an instance file");
  cmd_verify->add_option("file", verify_file, "instance file")->required();

  try {
    app.parse(argc, argv);
    if (*cmd_gen) return run_gen(gen);
    if (*cmd_solve) return run_solve(sol);
    if (*cmd_bench) return run_bench(bench);
    if (*cmd_verify) return run_verify(verify_file);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (const fracprox::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

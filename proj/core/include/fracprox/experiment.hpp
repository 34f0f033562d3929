// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracprox/instance.hpp"
#include "fracprox/solver.hpp"

namespace fracprox {

/// Raised on malformed experiment configs; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridCell {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  double coherence = 1.0;  // D
  double lambda = 0.0;
  int k_norm = 0;  // 0 = default to r (L1/SK only)
};

struct AlgoSpec {
  Schedule schedule = Schedule::Cyclic;
  int blocks = 1;
  int memory = 2;

  std::string name() const;
};

/// A batch: every grid cell x algorithm x instance. Instance seeds derive
/// from base_seed and the (cell, instance) pair, so any cell is reproducible
/// in isolation and all algorithms see identical instances.
struct ExperimentSpec {
  Model model = Model::L1SK;
  std::vector<GridCell> grid;
  std::vector<AlgoSpec> algorithms;
  int instances_per_cell = 50;
  std::uint64_t base_seed = 0;
  std::string output_path;

  // Solver knobs shared by every run; step floors are model-derived.
  double sigma = 1e-6;
  double gamma = 0.5;
  double alpha_y = 1000.0;
  double alpha_max = 1e8;
  long max_epochs = 20000;
  bool stop_relerr = true;  // false = residual rule
  double tol = 0.0;         // 0 = rule default (1e-3 relerr, 1e-7 residual)
};

ExperimentSpec parse_experiment_file(const std::string& path);
ExperimentSpec parse_experiment(std::istream& is, const std::string& origin);

void validate(const ExperimentSpec& spec);

/// Instance seed for a (cell, instance) slot under a base seed.
std::uint64_t derive_instance_seed(std::uint64_t base_seed, std::size_t cell, int instance);

struct ResultRow {
  bool aggregate = false;
  Model model = Model::L1SK;
  GridCell cell;
  AlgoSpec algo;
  std::uint64_t seed = 0;    // instance rows only
  double epochs = 0.0;
  double wall_time_sec = 0.0;
  double final_objective = 0.0;
  std::string termination;   // solver outcome, "Error", or "Mean"
  double final_residual = 0.0;
  double success_rate = 0.0; // aggregate rows only
};

/// Runs the whole batch on `jobs` workers. Per-instance failures become rows
/// with termination "Error" and never abort the batch. Rows come back in
/// (cell, algorithm, instance) order regardless of completion order.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// Per-(cell, algorithm) means over non-error rows plus the success rate.
std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows);

/// CSV with one header row; floats carry 17 significant digits. Aggregate
/// rows are tagged in the leading column.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& os);
void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path);

bool has_error_rows(const std::vector<ResultRow>& rows);

}  // namespace fracprox

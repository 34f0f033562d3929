// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "fracprox/criticality.hpp"
#include "fracprox/problem.hpp"
#include "fracprox/random.hpp"

namespace fracprox {

/// Block selection order. Cyclic visits the dual block then every primal
/// block in turn; Randomized draws each iteration from a fixed distribution
/// over the dual block and the N primal blocks.
enum class Schedule { Cyclic, Randomized };

struct SolverConfig {
  int memory = 2;            // line-search window looks back this many iterations
  double sigma = 1e-6;       // quadratic decrease weight in the acceptance test
  double gamma = 0.5;        // backtracking shrink factor, in (0, 1)
  double alpha_lo = 1e-8;    // lower step bound for the dual step
  double alpha_max = 1e8;    // upper step bound everywhere
  double alpha_y = 1000.0;   // fixed dual prox step, in [alpha_lo, alpha_max]
  double bb_floor = 1e-8;    // spectral step clip floor (model-specific)
  double bb_init = 1.0;      // first primal trial step
  Schedule schedule = Schedule::Cyclic;
  std::vector<double> probabilities;  // Randomized; empty means uniform
  std::uint64_t seed = 0;
  long max_epochs = 100000;
  StoppingRule stop;
};

void validate(const SolverConfig& config, int num_blocks);

/// Working state of one solve: primal/dual point, the sliding window of
/// lifted-objective values feeding the nonmonotone reference, and the
/// spectral step memory. Because consecutive iterates differ in exactly one
/// block, the spectral ratio only needs the moved block's displacement and
/// gradient change, which the loop tracks instead of full previous vectors.
struct IterateState {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::deque<double> q_window;
  long t = 0;
  double alpha_bb = 1.0;
};

enum class Termination { ResidualMet, RelErrMet, MaxEpochs };

const char* termination_name(Termination t);

struct QTraceEntry {
  long t;
  double q;      // lifted objective at the iterate
  double q_ref;  // window maximum used as the line-search reference
};

struct StepTraceEntry {
  long t;
  int block;      // 0 = dual step, 1..N = primal block
  double alpha;   // accepted step
  int backtracks;
  double dx_sq;   // squared displacement of the primal point
  double dy_sq;   // squared displacement of the dual point
};

struct EpochCheckEntry {
  long epoch;
  double value;  // stop-criterion value at the epoch's first iterate
};

struct SolveReport {
  long iterations = 0;
  long epochs = 0;
  std::vector<QTraceEntry> q_trace;
  std::vector<StepTraceEntry> step_trace;
  std::vector<EpochCheckEntry> check_trace;
  Termination termination = Termination::MaxEpochs;
  double wall_time_sec = 0.0;  // excludes stop-rule evaluation
  Eigen::VectorXd final_x;
  Eigen::VectorXd final_y;
  double final_objective = 0.0;
  double final_residual = 0.0;  // last stop-criterion value
};

/// Maximum over the window of trailing objective values (oldest first) and
/// the age of the latest iterate attaining it: age 0 is the newest entry, so
/// the attaining iteration index is t - age.
struct NonmonotoneRef {
  double value;
  int age;
};
NonmonotoneRef nonmonotone_reference(std::span<const double> window);

/// Spectral (Barzilai-Borwein) trial step |dx|^2 / |<dx, dgrad>| clamped to
/// [floor, cap]; falls back to the previous step when the curvature pairing
/// is below 1e-12 in magnitude.
double bb_stepsize(const Eigen::Ref<const Eigen::VectorXd>& dx,
                   const Eigen::Ref<const Eigen::VectorXd>& dgrad, double floor, double cap,
                   double alpha_prev);

/// Index in {0,...,N} for iteration t. 0 selects the dual step.
int schedule_next(long t, Schedule mode, int num_blocks, Rng& rng,
                  std::span<const double> probabilities);

/// Dual update y+ = prox_{alpha g*}(y + alpha x). Never decreases the dual
/// denominator: <x,y> - g*(y) + |y - y+|^2 / alpha <= <x,y+> - g*(y+) <= g(x).
Eigen::VectorXd step_y(const FractionalProblem& problem, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, double alpha);

/// Candidate update of one primal block:
/// prox_{alpha f_i}(x_i - alpha grad_i h(x) + alpha q y_i).
Eigen::VectorXd step_x_block(const FractionalProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, int block, double alpha, double q);

struct LineSearchResult {
  Eigen::VectorXd x_new;  // full point with the block replaced
  double alpha;
  int backtracks;
};

/// Backtracking on one primal block: halves alpha by gamma until
///   numerator(candidate) + (sigma/2) |candidate - x|^2
///     <= q_ref * dual_denominator(candidate, y).
/// Finite under the standing assumptions; more than 1e4 backtracks means a
/// model oracle is inconsistent and raises.
LineSearchResult line_search_x(const FractionalProblem& problem, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, int block, double alpha_init,
                               double sigma, double gamma, double q_ref);

/// Runs the multi-proximity gradient iteration from x0 until the stopping
/// rule fires or max_epochs elapse. The recorded reference sequence q_ref is
/// non-increasing and every recorded q is bounded by the initial objective;
/// identical config and seed reproduce the report bit for bit (wall time
/// aside).
SolveReport solve(const FractionalProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& config);

}  // namespace fracprox

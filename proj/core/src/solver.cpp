// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace fracprox {

namespace {

constexpr int kBacktrackCap = 10000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Separable part of the numerator, accumulated in block order. Throws the
// block index into the message on a domain violation so a broken prox is
// diagnosable.
double separable_sum(const FractionalProblem& p, const Eigen::VectorXd& x) {
  const BlockPartition& part = p.partition();
  double acc = 0.0;
  for (int i = 0; i < part.count(); ++i) {
    const ExtendedReal fi = p.f().value(part.offset(i), x.segment(part.offset(i), part.size(i)));
    if (!fi.is_finite()) {
      throw std::runtime_error("solve: iterate left dom(f) at block " + std::to_string(i));
    }
    acc += fi.value();
  }
  return acc;
}

// Separable sum with one block replaced, same accumulation order as
// separable_sum so an accepted candidate reproduces it bit for bit.
bool separable_sum_sub(const FractionalProblem& p, const Eigen::VectorXd& x, int block,
                       const Eigen::VectorXd& zi, double& out) {
  const BlockPartition& part = p.partition();
  double acc = 0.0;
  for (int i = 0; i < part.count(); ++i) {
    const ExtendedReal fi =
        i == block ? p.f().value(part.offset(i), zi)
                   : p.f().value(part.offset(i), x.segment(part.offset(i), part.size(i)));
    if (!fi.is_finite()) return false;
    acc += fi.value();
  }
  out = acc;
  return true;
}

double evaluate_stop(const StoppingRule& rule, const FractionalProblem& p,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  switch (rule.kind) {
    case StopKind::RelErr:
      return rel_err(x, rule.target);
    case StopKind::SubdiffResidual:
      return rule.residual(x, y);
    case StopKind::FixedPointResidual:
      return fixed_point_residual(p, x, y, 1.0);
  }
  throw std::logic_error("evaluate_stop: unknown rule");
}

}  // namespace

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::ResidualMet: return "ResidualMet";
    case Termination::RelErrMet: return "RelErrMet";
    case Termination::MaxEpochs: return "MaxEpochs";
  }
  return "Unknown";
}

void validate(const SolverConfig& c, int num_blocks) {
  if (c.memory < 0) throw std::invalid_argument("SolverConfig: memory must be >= 0");
  if (c.sigma <= 0.0) throw std::invalid_argument("SolverConfig: sigma must be > 0");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) {
    throw std::invalid_argument("SolverConfig: gamma must be in (0, 1)");
  }
  if (!(c.alpha_lo > 0.0 && c.alpha_lo <= c.alpha_max)) {
    throw std::invalid_argument("SolverConfig: need 0 < alpha_lo <= alpha_max");
  }
  if (!(c.alpha_y >= c.alpha_lo && c.alpha_y <= c.alpha_max)) {
    throw std::invalid_argument("SolverConfig: alpha_y must lie in [alpha_lo, alpha_max]");
  }
  if (!(c.bb_floor > 0.0 && c.bb_floor <= c.alpha_max)) {
    throw std::invalid_argument("SolverConfig: need 0 < bb_floor <= alpha_max");
  }
  if (!(c.bb_init >= c.bb_floor && c.bb_init <= c.alpha_max)) {
    throw std::invalid_argument("SolverConfig: bb_init must lie in [bb_floor, alpha_max]");
  }
  if (c.max_epochs < 0) throw std::invalid_argument("SolverConfig: max_epochs must be >= 0");
  if (c.schedule == Schedule::Randomized && !c.probabilities.empty()) {
    if (static_cast<int>(c.probabilities.size()) != num_blocks + 1) {
      throw std::invalid_argument("SolverConfig: need one probability per block plus the dual");
    }
    double sum = 0.0;
    for (double pr : c.probabilities) {
      if (!(pr > 0.0)) throw std::invalid_argument("SolverConfig: probabilities must be > 0");
      sum += pr;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("SolverConfig: probabilities must sum to 1");
    }
  }
}

NonmonotoneRef nonmonotone_reference(std::span<const double> window) {
  if (window.empty()) throw std::invalid_argument("nonmonotone_reference: empty window");
  double best = window[0];
  std::size_t best_idx = 0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (window[i] >= best) {  // ties resolve to the latest attaining index
      best = window[i];
      best_idx = i;
    }
  }
  return {best, static_cast<int>(window.size() - 1 - best_idx)};
}

double bb_stepsize(const Eigen::Ref<const Eigen::VectorXd>& dx,
                   const Eigen::Ref<const Eigen::VectorXd>& dgrad, double floor, double cap,
                   double alpha_prev) {
  if (floor > cap) throw std::invalid_argument("bb_stepsize: floor must be <= cap");
  const double pairing = std::abs(dx.dot(dgrad));
  if (pairing < 1e-12) return alpha_prev;
  return std::clamp(dx.squaredNorm() / pairing, floor, cap);
}

int schedule_next(long t, Schedule mode, int num_blocks, Rng& rng,
                  std::span<const double> probabilities) {
  if (mode == Schedule::Cyclic) {
    return static_cast<int>(t % (num_blocks + 1));
  }
  if (probabilities.empty()) {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_blocks + 1)));
  }
  const double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i <= num_blocks; ++i) {
    cum += probabilities[static_cast<std::size_t>(i)];
    if (u < cum) return i;
  }
  return num_blocks;
}

Eigen::VectorXd step_y(const FractionalProblem& problem, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("step_y: alpha must be > 0");
  return problem.gconj().conj_prox(y + alpha * x, alpha);
}

Eigen::VectorXd step_x_block(const FractionalProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, int block, double alpha, double q) {
  if (alpha <= 0.0) throw std::invalid_argument("step_x_block: alpha must be > 0");
  const BlockPartition& part = problem.partition();
  const Eigen::Index off = part.offset(block);
  const Eigen::Index len = part.size(block);
  const Eigen::VectorXd grad = problem.h().partial_gradient(x, off, len);
  const Eigen::VectorXd arg =
      x.segment(off, len) - alpha * grad + (alpha * q) * y.segment(off, len);
  Eigen::VectorXd zi(len);
  problem.f().prox(off, arg, alpha, zi);
  return zi;
}

LineSearchResult line_search_x(const FractionalProblem& problem, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, int block, double alpha_init,
                               double sigma, double gamma, double q_ref) {
  const BlockPartition& part = problem.partition();
  const Eigen::Index off = part.offset(block);
  const Eigen::Index len = part.size(block);

  // The prox argument carries the objective at the current point; only the
  // acceptance test compares against the (possibly larger) reference.
  const ExtendedReal q_cur = problem.lifted_objective(x, y);
  if (!q_cur.is_finite()) {
    throw std::invalid_argument("line_search_x: point outside dom(Q)");
  }

  double alpha = alpha_init;
  int backtracks = 0;
  Eigen::VectorXd cand = x;
  for (;;) {
    cand.segment(off, len) = step_x_block(problem, x, y, block, alpha, q_cur.value());
    const double dx_sq = (cand.segment(off, len) - x.segment(off, len)).squaredNorm();
    if (dx_sq == 0.0) {
      // Stationary candidate: the inequality collapses to Q(x,y) <= ref,
      // which is the caller's precondition; re-deriving it numerically can
      // miss by an ulp and stall the search.
      return {std::move(cand), alpha, backtracks};
    }
    const ExtendedReal zeta = problem.numerator(cand);
    const ExtendedReal eta = problem.dual_denominator(cand, y);
    if (zeta.is_finite() && eta.is_finite() && eta.value() > 0.0 &&
        zeta.value() / eta.value() <= q_ref &&
        zeta.value() + 0.5 * sigma * dx_sq <= q_ref * eta.value()) {
      return {std::move(cand), alpha, backtracks};
    }
    alpha *= gamma;
    if (++backtracks > kBacktrackCap || alpha == 0.0) {
      throw std::runtime_error("line_search_x: backtrack cap exceeded (inconsistent oracles)");
    }
  }
}

SolveReport solve(const FractionalProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& config) {
  const BlockPartition& part = problem.partition();
  const int num_blocks = part.count();
  validate(config, num_blocks);
  if (x0.size() != problem.dimension()) {
    throw std::invalid_argument("solve: initial point has wrong dimension");
  }
  if (!problem.objective(x0).is_finite()) {
    throw std::invalid_argument("solve: initial point has infinite objective");
  }

  IterateState st;
  st.x = x0;
  st.y = problem.initial_dual(st.x);
  st.alpha_bb = config.bb_init;
  Rng rng(config.seed);

  auto heval = problem.h().make_evaluator();
  heval->reset(st.x);

  // g^*(y) stays finite along the trajectory: the dual prox maps into
  // dom(g^*). Tracked as a scalar so the dual denominator is one subtraction.
  double gstar = 0.0;
  {
    const ExtendedReal gs = problem.gconj().conj_value(st.y);
    if (!gs.is_finite()) throw std::runtime_error("solve: initial dual outside dom(g*)");
    gstar = gs.value();
  }
  // Numerator and dual denominator of the current iterate, carried as state.
  // Both are refreshed through the accepted-candidate values, never by
  // re-evaluating the same point through a rebuilt cache: a rebuild moves a
  // recorded value by a few ulps, which is enough to break the exact
  // monotonicity of the reference sequence on flat stretches.
  double eta_state = block_inner(part, st.x, st.y) - gstar;
  double zeta_state = separable_sum(problem, st.x) + heval->value();

  SolveReport rep;
  Termination term = Termination::MaxEpochs;
  double last_check = std::numeric_limits<double>::quiet_NaN();
  const auto t_start = Clock::now();
  double stop_seconds = 0.0;

  for (;;) {
    if (st.t % (num_blocks + 1) == 0) {
      const long epoch = st.t / (num_blocks + 1);
      // Rebuilding the residual cache once per epoch bounds error
      // accumulation in the incremental column updates; it feeds the next
      // gradients and candidate values, while the carried numerator
      // re-synchronizes at the next accepted step.
      heval->reset(st.x);

      const auto t_check = Clock::now();
      last_check = evaluate_stop(config.stop, problem, st.x, st.y);
      stop_seconds += seconds_since(t_check);
      rep.check_trace.push_back({epoch, last_check});
      if (last_check < config.stop.tol) {
        term = config.stop.kind == StopKind::RelErr ? Termination::RelErrMet
                                                    : Termination::ResidualMet;
        break;
      }
      if (epoch >= config.max_epochs) {
        term = Termination::MaxEpochs;
        break;
      }
    }

    if (zeta_state < -1e-10 * (1.0 + std::abs(zeta_state))) {
      throw std::runtime_error("solve: numerator became negative on the trajectory");
    }
    if (!(eta_state > 0.0)) {
      throw std::runtime_error("solve: dual denominator lost positivity");
    }
    const double q_t = zeta_state / eta_state;
    st.q_window.push_back(q_t);
    if (static_cast<int>(st.q_window.size()) > config.memory + 1) st.q_window.pop_front();
    double q_ref = st.q_window[0];
    for (double v : st.q_window) q_ref = std::max(q_ref, v);
    rep.q_trace.push_back({st.t, q_t, q_ref});

    const int pick = schedule_next(st.t, config.schedule, num_blocks, rng, config.probabilities);
    if (pick == 0) {
      const Eigen::VectorXd y_new = problem.gconj().conj_prox(st.y + config.alpha_y * st.x,
                                                              config.alpha_y);
      const ExtendedReal gs = problem.gconj().conj_value(y_new);
      if (!gs.is_finite()) throw std::runtime_error("solve: dual prox output outside dom(g*)");
      const double dy_sq = (y_new - st.y).squaredNorm();
      // The dual prox cannot decrease the dual denominator (it gains at
      // least |dy|^2 / alpha), so the incremental update is clamped at zero
      // rather than letting roundoff in the pairing push it downward.
      const double delta =
          std::max(block_inner(part, st.x, y_new - st.y) - (gs.value() - gstar), 0.0);
      eta_state += delta;
      st.y = y_new;
      gstar = gs.value();
      rep.step_trace.push_back({st.t, 0, config.alpha_y, 0, 0.0, dy_sq});
      // x unchanged: spectral memory carries over.
    } else {
      const int bi = pick - 1;
      const Eigen::Index off = part.offset(bi);
      const Eigen::Index len = part.size(bi);
      const Eigen::VectorXd grad_i = heval->partial_gradient(off, len);

      double alpha = st.alpha_bb;
      int backtracks = 0;
      Eigen::VectorXd zi(len);
      double zeta_cand = 0.0;
      double eta_cand = 0.0;
      double dx_sq = 0.0;
      for (;;) {
        const Eigen::VectorXd arg =
            st.x.segment(off, len) - alpha * grad_i + (alpha * q_t) * st.y.segment(off, len);
        problem.f().prox(off, arg, alpha, zi);
        dx_sq = (zi - st.x.segment(off, len)).squaredNorm();
        bool ok;
        if (dx_sq == 0.0) {
          // Stationary candidate: the acceptance inequality collapses to
          // q <= ref, which holds by the window construction; evaluating it
          // through rebuilt caches can miss by an ulp and stall.
          ok = true;
          zeta_cand = zeta_state;
          eta_cand = eta_state;
        } else {
          ok = separable_sum_sub(problem, st.x, bi, zi, zeta_cand);
          if (ok) {
            zeta_cand += heval->value_with_block(off, zi);
            eta_cand = eta_state + (zi - st.x.segment(off, len)).dot(st.y.segment(off, len));
            // The ratio clause restates the acceptance inequality in the
            // form the next iteration records, so the reference sequence
            // stays monotone in floating point as well as exactly.
            ok = eta_cand > 0.0 && zeta_cand / eta_cand <= q_ref &&
                 zeta_cand + 0.5 * config.sigma * dx_sq <= q_ref * eta_cand;
          }
        }
        if (ok) break;
        alpha *= config.gamma;
        if (++backtracks > kBacktrackCap || alpha == 0.0) {
          throw std::runtime_error("solve: backtrack cap exceeded (inconsistent oracles)");
        }
      }

      if (dx_sq > 0.0) {
        heval->commit_block(off, zi);
        const Eigen::VectorXd grad_new = heval->partial_gradient(off, len);
        const Eigen::VectorXd dz = zi - st.x.segment(off, len);
        st.x.segment(off, len) = zi;
        zeta_state = zeta_cand;
        eta_state = eta_cand;
        st.alpha_bb = bb_stepsize(dz, grad_new - grad_i, config.bb_floor, config.alpha_max,
                                  st.alpha_bb);
      }
      rep.step_trace.push_back({st.t, pick, alpha, backtracks, dx_sq, 0.0});
    }
    ++st.t;
  }

  rep.iterations = st.t;
  rep.epochs = st.t / (num_blocks + 1);
  rep.termination = term;
  rep.final_x = std::move(st.x);
  rep.final_y = std::move(st.y);
  rep.final_objective = problem.objective(rep.final_x).value();
  rep.final_residual = last_check;
  rep.wall_time_sec = seconds_since(t_start) - stop_seconds;
  return rep;
}

}  // namespace fracprox

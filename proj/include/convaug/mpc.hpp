#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "convaug/core.hpp"
#include "convaug/learned.hpp"
#include "convaug/problems.hpp"

namespace convaug {

struct ClosedLoopConfig {
  std::size_t steps = 30;
  /// Optimizer iterations per loop step.
  std::size_t budget = 100;
  double noise_std = 0.05;
  double x0_std = 0.5;
  std::uint64_t seed = 0;
  /// Start each solve from the previous solution instead of zero.
  bool warm_start = false;

  void validate() const;
};

/// Returns the stacked input estimate after exactly `budget` iterations
/// from `start` on the condensed QP.
using MpcSolver = std::function<Vector(const QuadraticProblem& qp, const Polytope& box,
                                       const Vector& start, std::size_t budget)>;

struct ClosedLoopRun {
  std::uint64_t seed = 0;
  /// x_0 .. x_N.
  std::vector<Vector> states;
  /// Applied inputs u_0 .. u_{N-1}.
  std::vector<Vector> inputs;
  /// x_t'Q x_t + u_t'R u_t.
  std::vector<double> stage_costs;
  double cumulative_cost = 0.0;
  /// max_t (|u_t|_inf - bound), clipped at 0.
  double max_input_violation = 0.0;
};

/// Receding-horizon loop from x0. Throws Diverged carrying the loop step
/// when the solver produces a non-finite input.
ClosedLoopRun closed_loop_sim(const MpcProblem& mpc, const MpcSolver& solver, const ClosedLoopConfig& cfg,
                              const Vector& x0);
/// Same, with x0 ~ N(0, x0_std^2 I) drawn from cfg.seed.
ClosedLoopRun closed_loop_sim(const MpcProblem& mpc, const MpcSolver& solver, const ClosedLoopConfig& cfg);

Vector sample_initial_state(const MpcProblem& mpc, double std, std::uint64_t seed);

/// 1 / lambda_max of the condensed Hessian.
double mpc_step_size(const MpcProblem& mpc);

/// Projected gradient with step eta (1 / beta when eta <= 0).
MpcSolver pgd_solver(double eta = 0.0);
/// Exact solution of the condensed QP (active set); ignores the budget.
MpcSolver exact_solver();
/// Projected gradient augmented by a learned unit every `period` steps, with
/// feasibility correction onto the box.
MpcSolver augmented_solver(std::shared_ptr<const LearnedModel> model, std::size_t period = 1,
                           double eta = 0.0);

/// Projected-gradient baseline on one condensed QP (fixed point computed exactly).
BaselineSpec mpc_baseline(const QuadraticProblem& qp, const Polytope& box, double eta = 0.0);

struct ClosedLoopSummary {
  std::size_t runs = 0;
  double mean = 0.0;
  double p90 = 0.0;
  /// Mean and 90th percentile of the running cumulative cost per loop step.
  std::vector<double> mean_curve;
  std::vector<double> p90_curve;
};

/// Runs seeds seed_root-derived streams 0..count-1 concurrently; run i uses
/// the same x0 and noise for every solver.
std::vector<ClosedLoopRun> closed_loop_batch(const MpcProblem& mpc, const MpcSolver& solver,
                                             const ClosedLoopConfig& cfg, std::size_t count);
ClosedLoopSummary summarize(const std::vector<ClosedLoopRun>& runs);

/// Linear-interpolation percentile (q in [0, 100]).
double percentile(std::vector<double> values, double q);

}  // namespace convaug

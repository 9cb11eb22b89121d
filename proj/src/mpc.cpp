#include "convaug/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/parallel.hpp"
#include "convaug/qp.hpp"
#include "convaug/rng.hpp"

namespace convaug {

void ClosedLoopConfig::validate() const {
  if (budget < 1) throw InvalidArgument("closed loop: budget must be >= 1");
  if (!(noise_std >= 0.0)) throw InvalidArgument("closed loop: noise std must be >= 0");
  if (!(x0_std >= 0.0)) throw InvalidArgument("closed loop: initial-state std must be >= 0");
}

Vector sample_initial_state(const MpcProblem& mpc, double std, std::uint64_t seed) {
  Rng rng(seed, "mpc/x0");
  return rng.normal_vector(mpc.state_dim(), std);
}

ClosedLoopRun closed_loop_sim(const MpcProblem& mpc, const MpcSolver& solver, const ClosedLoopConfig& cfg,
                              const Vector& x0) {
  cfg.validate();
  if (x0.size() != mpc.state_dim()) throw InvalidArgument("closed loop: x0 has the wrong size");
  const Eigen::Index m = mpc.input_dim();
  const Eigen::Index stacked = m * mpc.horizon;
  ClosedLoopRun run;
  run.seed = cfg.seed;
  run.states.push_back(x0);
  Vector start = Vector::Zero(stacked);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const Vector& x = run.states.back();
    auto [qp, box] = build_stacked_mpc(mpc, x);
    Vector u_all;
    try {
      u_all = solver(qp, box, cfg.warm_start ? start : Vector::Zero(stacked), cfg.budget);
    } catch (const Diverged& e) {
      std::ostringstream os;
      os << "closed loop: solver diverged at loop step " << t << " (" << e.what() << ")";
      throw Diverged(os.str(), t);
    }
    if (u_all.size() != stacked || !all_finite(u_all)) {
      std::ostringstream os;
      os << "closed loop: solver returned an invalid input at loop step " << t;
      throw Diverged(os.str(), t);
    }
    if (cfg.warm_start) start = u_all;
    const Vector u = u_all.head(m);
    run.max_input_violation =
        std::max(run.max_input_violation, u.cwiseAbs().maxCoeff() - mpc.input_bound);
    const double stage = x.dot(mpc.Q * x) + u.dot(mpc.R * u);
    run.stage_costs.push_back(stage);
    run.cumulative_cost += stage;
    run.inputs.push_back(u);
    Vector next = mpc.dyn_A * x + mpc.dyn_B * u;
    if (cfg.noise_std > 0.0) {
      Rng rng(cfg.seed, "mpc/noise", t);
      next += rng.normal_vector(next.size(), cfg.noise_std);
    }
    run.states.push_back(std::move(next));
  }
  run.max_input_violation = std::max(0.0, run.max_input_violation);
  return run;
}

ClosedLoopRun closed_loop_sim(const MpcProblem& mpc, const MpcSolver& solver, const ClosedLoopConfig& cfg) {
  return closed_loop_sim(mpc, solver, cfg, sample_initial_state(mpc, cfg.x0_std, cfg.seed));
}

double mpc_step_size(const MpcProblem& mpc) {
  return 1.0 / curvature_constants(mpc.condensed_hessian()).beta;
}

MpcSolver pgd_solver(double eta) {
  return [eta](const QuadraticProblem& qp, const Polytope& box, const Vector& start, std::size_t budget) {
    const double step = eta > 0.0 ? eta : 1.0 / qp.beta;
    Vector u = start;
    for (std::size_t k = 0; k < budget; ++k) u = project_polytope(u - step * qp.gradient(u), box);
    return u;
  };
}

MpcSolver exact_solver() {
  return [](const QuadraticProblem& qp, const Polytope& box, const Vector&, std::size_t) {
    return constrained_minimizer(qp, box);
  };
}

BaselineSpec mpc_baseline(const QuadraticProblem& qp, const Polytope& box, double eta) {
  return projected_gradient(qp, box, eta > 0.0 ? eta : 1.0 / qp.beta);
}

MpcSolver augmented_solver(std::shared_ptr<const LearnedModel> model, std::size_t period, double eta) {
  if (!model) throw InvalidArgument("augmented solver: model is null");
  return [model, period, eta](const QuadraticProblem& qp, const Polytope& box, const Vector& start,
                              std::size_t budget) {
    TrainingInstance inst{mpc_baseline(qp, box, eta), qp, start, box};
    const AugmentedRun run = learned_rollout(model, inst, budget, period);
    return run.outputs.back();
  };
}

std::vector<ClosedLoopRun> closed_loop_batch(const MpcProblem& mpc, const MpcSolver& solver,
                                             const ClosedLoopConfig& cfg, std::size_t count) {
  std::vector<ClosedLoopRun> runs(count);
  parallel_for(count, [&](std::size_t i) {
    ClosedLoopConfig local = cfg;
    local.seed = derive_seed(cfg.seed, "mpc/run", i);
    runs[i] = closed_loop_sim(mpc, solver, local);
  });
  return runs;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientData("percentile: no values");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ClosedLoopSummary summarize(const std::vector<ClosedLoopRun>& runs) {
  ClosedLoopSummary out;
  out.runs = runs.size();
  if (runs.empty()) return out;
  std::vector<double> totals;
  for (const auto& r : runs) totals.push_back(r.cumulative_cost);
  double sum = 0.0;
  for (double v : totals) sum += v;
  out.mean = sum / static_cast<double>(totals.size());
  out.p90 = percentile(totals, 90.0);
  const std::size_t steps = runs.front().stage_costs.size();
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> running;
    for (const auto& r : runs) {
      double acc = 0.0;
      for (std::size_t s = 0; s <= t && s < r.stage_costs.size(); ++s) acc += r.stage_costs[s];
      running.push_back(acc);
    }
    double m = 0.0;
    for (double v : running) m += v;
    out.mean_curve.push_back(m / static_cast<double>(running.size()));
    out.p90_curve.push_back(percentile(running, 90.0));
  }
  return out;
}

}  // namespace convaug

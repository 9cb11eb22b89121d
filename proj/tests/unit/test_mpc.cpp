#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <memory>

#include "convaug/experiments.hpp"
#include "convaug/mpc.hpp"
#include "convaug/qp.hpp"

using namespace convaug;

TEST_CASE("noise-free loop from the origin costs nothing") {
  const MpcProblem mpc = double_integrator_mpc();
  ClosedLoopConfig cfg;
  cfg.noise_std = 0.0;
  cfg.steps = 10;
  cfg.budget = 20;
  const ClosedLoopRun run = closed_loop_sim(mpc, pgd_solver(), cfg, Vector::Zero(2));
  CHECK(run.cumulative_cost == 0.0);
  CHECK(run.states.size() == 11);
  CHECK(run.inputs.size() == 10);
}

TEST_CASE("applied inputs are feasible for every solver") {
  const MpcProblem mpc = double_integrator_mpc();
  ClosedLoopConfig cfg;
  cfg.steps = 8;
  cfg.budget = 30;
  cfg.seed = 3;
  ModelShape shape;
  shape.target_rate = 0.9999;
  LearnedModel m = LearnedModel::initialize(shape, 2);
  m.magnitude.passthrough.setConstant(5.0);
  auto model = std::make_shared<LearnedModel>(m);
  for (const MpcSolver& solver : {pgd_solver(), exact_solver(), augmented_solver(model)}) {
    const ClosedLoopRun run = closed_loop_sim(mpc, solver, cfg);
    CHECK(run.max_input_violation <= 1e-10);
    for (const Vector& u : run.inputs) CHECK(u.cwiseAbs().maxCoeff() <= mpc.input_bound + 1e-10);
  }
}

TEST_CASE("noise-free exact MPC regulates the state") {
  const MpcProblem mpc = double_integrator_mpc();
  ClosedLoopConfig cfg;
  cfg.noise_std = 0.0;
  cfg.steps = 25;
  Vector x0(2);
  x0 << 0.3, -0.2;
  const ClosedLoopRun run = closed_loop_sim(mpc, exact_solver(), cfg, x0);
  CHECK(run.states.back().norm() < 0.5 * x0.norm());
  CHECK(run.cumulative_cost > 0.0);
}

TEST_CASE("percentile interpolates linearly") {
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 50.0) == doctest::Approx(3.0));
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 90.0) == doctest::Approx(4.6));
  CHECK(percentile({7.0}, 90.0) == doctest::Approx(7.0));
  CHECK(percentile({3.0, 1.0}, 0.0) == doctest::Approx(1.0));
  CHECK(percentile({3.0, 1.0}, 100.0) == doctest::Approx(3.0));
}

TEST_CASE("batches are deterministic and independent of the worker count") {
  const MpcProblem mpc = double_integrator_mpc();
  ClosedLoopConfig cfg;
  cfg.steps = 5;
  cfg.budget = 10;
  cfg.seed = 11;
  setenv("CONVAUG_THREADS", "1", 1);
  const auto a = closed_loop_batch(mpc, pgd_solver(), cfg, 6);
  setenv("CONVAUG_THREADS", "3", 1);
  const auto b = closed_loop_batch(mpc, pgd_solver(), cfg, 6);
  unsetenv("CONVAUG_THREADS");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cumulative_cost == b[i].cumulative_cost);
    CHECK(a[i].seed == b[i].seed);
  }
  const ClosedLoopSummary s = summarize(a);
  CHECK(s.runs == 6);
  CHECK(s.mean_curve.size() == 5);
  CHECK(s.mean_curve.back() == doctest::Approx(s.mean));
}

TEST_CASE("step size is the inverse of the condensed curvature") {
  const MpcProblem mpc = double_integrator_mpc();
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(mpc.condensed_hessian()).eigenvalues().maxCoeff();
  CHECK(mpc_step_size(mpc) == doctest::Approx(1.0 / lmax));
}

TEST_CASE("closed-loop configuration validation") {
  ClosedLoopConfig cfg;
  cfg.budget = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.budget = 3;
  cfg.noise_std = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("mpc training instances are feasible and share the box") {
  const MpcProblem mpc = double_integrator_mpc();
  const auto insts = mpc_training_instances(mpc, 3, 0.5, 1);
  REQUIRE(insts.size() == 3);
  for (const auto& inst : insts) {
    REQUIRE(inst.correction.has_value());
    CHECK(inst.correction->contains(inst.baseline.fixed_point, 1e-9));
    CHECK(inst.xi0.norm() == 0.0);
  }
  const TrainConfig cfg = mpc_train_config(mpc, MpcScenarioConfig{});
  CHECK(cfg.cost == CostId::kObjective);
  CHECK(cfg.target_rate >= insts[0].baseline.cert().gamma);
}

#include <doctest.h>

#include <cmath>
#include <memory>

#include "convaug/learned.hpp"
#include "convaug/rng.hpp"
#include "convaug/serialize.hpp"

using namespace convaug;

namespace {

TrainingInstance gd_instance(std::uint64_t seed, Eigen::Index dim = 3, double kappa = 20.0) {
  const QuadraticProblem p = random_sc_quadratic(dim, kappa, seed);
  TrainingInstance inst{gd_rsi(p), p, Vector::Zero(dim), std::nullopt};
  return inst;
}

LearnedModel randomized(const ModelShape& shape, std::uint64_t seed, double scale = 1.0) {
  LearnedModel m = LearnedModel::initialize(shape, seed);
  Rng rng(seed, "perturb");
  m.set_parameters(m.parameters() + rng.normal_vector(m.parameter_count(), scale));
  return m;
}

std::vector<Vector> emit_all(const std::shared_ptr<const LearnedModel>& model, const BaselineSpec& spec,
                             const Vector& xi0, std::size_t count) {
  LearnedGenerator gen(model);
  gen.reset(spec, xi0);
  std::vector<Vector> out;
  Vector xi = xi0;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(gen.emit(k, xi, spec));
    xi = spec.step(xi) + out.back();
  }
  return out;
}

}  // namespace

TEST_CASE("fresh model emits zero") {
  const TrainingInstance inst = gd_instance(1);
  ModelShape shape;
  auto model = std::make_shared<LearnedModel>(LearnedModel::initialize(shape, 3));
  for (const Vector& v : emit_all(model, inst.baseline, Vector::Constant(3, 1.0), 20)) CHECK(v.norm() == 0.0);
}

TEST_CASE("zero impulse gives zero output for any parameters") {
  const QuadraticProblem p = random_sc_quadratic(3, 20.0, 2);
  // x* is not zero, so use the state-only impulse with xi0 = 0.
  ModelShape shape;
  shape.impulse = ImpulseMode::kState;
  auto model = std::make_shared<LearnedModel>(randomized(shape, 5));
  for (const Vector& v : emit_all(model, gd_rsi(p), Vector::Zero(3), 30)) CHECK(v.norm() == 0.0);
}

TEST_CASE("without a readout only the first injection is non-zero") {
  const TrainingInstance inst = gd_instance(4);
  ModelShape shape;
  LearnedModel m = randomized(shape, 7);
  m.magnitude.C_re.setZero();
  m.magnitude.C_im.setZero();
  auto model = std::make_shared<LearnedModel>(m);
  const auto vs = emit_all(model, inst.baseline, Vector::Constant(3, 2.0), 10);
  CHECK(vs[0].norm() > 0.0);
  for (std::size_t k = 1; k < vs.size(); ++k) CHECK(vs[k].norm() == 0.0);
}

TEST_CASE("magnitude envelope holds for random parameters") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QuadraticProblem p = random_sc_quadratic(4, 30.0, seed + 50);
    const BaselineSpec spec = nag(p);
    ModelShape shape;
    shape.blocks = 2;
    shape.target_rate = 0.95;
    const LearnedModel m = randomized(shape, seed, 2.0);
    const double K = m.envelope_constant();
    auto model = std::make_shared<LearnedModel>(m);
    LearnedGenerator gen(model);
    Rng rng(seed);
    const Vector xi0 = rng.normal_vector(8);
    gen.reset(spec, xi0);
    const double w0 = gen.impulse_norm();
    Vector xi = xi0;
    for (std::size_t k = 0; k < 200; ++k) {
      const Vector v = gen.emit(k, xi, spec);
      CHECK(v.norm() <= K * std::pow(0.95, static_cast<double>(k)) * w0 * (1 + 1e-9));
      xi = spec.step(xi);
    }
  }
}

TEST_CASE("eigenvalue moduli stay below the target rate") {
  ModelShape shape;
  shape.target_rate = 0.95;
  LearnedModel m = LearnedModel::initialize(shape, 1);
  m.magnitude.raw_modulus.setConstant(60.0);
  for (std::size_t j = 0; j < m.magnitude.modes(); ++j) {
    CHECK(std::abs(m.magnitude.eigenvalue(j)) <= 0.95);
    CHECK(m.magnitude.normalizer(j) > 0.0);
  }
}

TEST_CASE("fitted decay of a trained-like readout stays within the target rate") {
  const QuadraticProblem p = random_sc_quadratic(3, 10.0, 9);
  const BaselineSpec spec = gd_rsi(p);
  ModelShape shape;
  shape.target_rate = 0.95;
  auto model = std::make_shared<LearnedModel>(randomized(shape, 13, 1.5));
  const auto vs = emit_all(model, spec, Vector::Constant(3, 1.0), 400);
  // Log-linear slope over the tail.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 200; k < 400; ++k) {
    if (!(vs[k].norm() > 1e-300)) continue;
    const double x = static_cast<double>(k), y = std::log(vs[k].norm());
    sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
  }
  if (n > 10) {
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::exp(slope) <= 0.955);
  }
}

TEST_CASE("direction output lies strictly inside (-1, 1)") {
  ModelShape shape;
  LearnedModel m = randomized(shape, 21, 5.0);
  Rng rng(3);
  Matrix state = Matrix::Zero(static_cast<Eigen::Index>(m.direction.hidden()), 6);
  for (int i = 0; i < 20; ++i) {
    const Matrix f = rng.normal_matrix(static_cast<Eigen::Index>(m.direction.in_features()), 6, 100.0);
    const Matrix d = m.direction.step(f, state);
    CHECK(d.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("parameter vector round trip") {
  ModelShape shape;
  shape.blocks = 2;
  const LearnedModel m = randomized(shape, 8);
  LearnedModel copy = LearnedModel::initialize(shape, 99);
  copy.set_parameters(m.parameters());
  CHECK((copy.parameters() - m.parameters()).norm() == 0.0);
  CHECK(copy.envelope_constant() == doctest::Approx(m.envelope_constant()));
  CHECK_THROWS_AS(copy.set_parameters(Vector::Zero(3)), InvalidArgument);
}

TEST_CASE("checkpoint round trip reproduces outputs") {
  const TrainingInstance inst = gd_instance(12);
  ModelShape shape;
  LearnedModel m = randomized(shape, 4);
  m.direction.feature_mean = Vector::Constant(m.direction.feature_mean.size(), 0.3);
  const LearnedModel back = model_from_json(Json::parse(to_json(m).dump()));
  const auto a = emit_all(std::make_shared<LearnedModel>(m), inst.baseline, Vector::Ones(3), 15);
  const auto b = emit_all(std::make_shared<LearnedModel>(back), inst.baseline, Vector::Ones(3), 15);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK((a[k] - b[k]).norm() == 0.0);
}

TEST_CASE("emit must follow reset order") {
  const TrainingInstance inst = gd_instance(2);
  auto model = std::make_shared<LearnedModel>(LearnedModel::initialize(ModelShape{}, 1));
  LearnedGenerator gen(model);
  gen.reset(inst.baseline, inst.xi0);
  CHECK_THROWS_AS(gen.emit(1, inst.xi0, inst.baseline), InvalidArgument);
  ModelShape two;
  two.blocks = 2;
  LearnedGenerator wrong(std::make_shared<LearnedModel>(LearnedModel::initialize(two, 1)));
  CHECK_THROWS_AS(wrong.reset(inst.baseline, inst.xi0), InvalidArgument);
}

TEST_CASE("algorithm cost on a one-dimensional regression") {
  Matrix A(1, 1);
  A << 1.0;
  Vector b(1);
  b << 1.0;
  QuadraticProblem p = make_quadratic(2.0 * A.transpose() * A, -2.0 * A.transpose() * b, 1.0, "regression");
  p.design = A;
  p.target = b;
  AugmentedRun run;
  run.outputs = {Vector::Zero(1), Vector::Ones(1)};
  CHECK(algo_cost(run, p, CostId::kResidual) == doctest::Approx(1.0));
  CHECK(algo_cost(run, p, CostId::kObjective) == doctest::Approx(1.0));
  run.outputs = {p.x_star};
  CHECK(algo_cost(run, p, CostId::kResidual) == doctest::Approx(0.0));
  QuadraticProblem plain = random_sc_quadratic(2, 3.0, 1);
  CHECK_THROWS_AS(algo_cost(run, plain, CostId::kResidual), InvalidArgument);
}

TEST_CASE("zero-epoch training matches the baseline cost") {
  std::vector<TrainingInstance> insts;
  for (std::uint64_t s = 0; s < 4; ++s) insts.push_back(gd_instance(s));
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.rollout_steps = 60;
  cfg.cost = CostId::kObjective;
  cfg.target_rate = 0.999;
  const TrainResult r = train(insts, cfg);
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].mean_cost == doctest::Approx(r.baseline_mean_cost).epsilon(1e-12));
}

TEST_CASE("training improves on a small family and tracks the best cost") {
  std::vector<TrainingInstance> insts;
  for (std::uint64_t s = 0; s < 8; ++s) insts.push_back(gd_instance(100 + s, 2, 10.0));
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.rollout_steps = 80;
  cfg.cost = CostId::kObjective;
  cfg.hidden = 4;
  cfg.target_rate = 0.999;
  cfg.seed = 5;
  const TrainResult r = train(insts, cfg);
  REQUIRE(r.log.size() == 26);
  for (std::size_t e = 1; e < r.log.size(); ++e) CHECK(r.log[e].best_cost <= r.log[e - 1].best_cost);
  CHECK(r.best_mean_cost < r.baseline_mean_cost);
  // The returned model reproduces the reported best cost.
  std::vector<double> base;
  for (const auto& inst : insts) base.push_back(baseline_cost(inst, cfg));
  CHECK(mean_cost(std::make_shared<LearnedModel>(r.model), insts, cfg, base) ==
        doctest::Approx(r.best_mean_cost).epsilon(1e-12));
}

TEST_CASE("diverging rollouts are charged the penalty") {
  const TrainingInstance inst = gd_instance(3);
  TrainConfig cfg;
  cfg.rollout_steps = 40;
  cfg.cost = CostId::kObjective;
  cfg.divergence_penalty = 2.0;
  ModelShape shape;
  LearnedModel m = randomized(shape, 2);
  m.magnitude.passthrough.setConstant(1e300);
  m.magnitude.C_re.setConstant(1e300);
  const double cost = instance_cost(std::make_shared<LearnedModel>(m), inst, cfg, 10.0);
  CHECK(cost == doctest::Approx(30.0));
}

TEST_CASE("training validates its configuration") {
  std::vector<TrainingInstance> insts{gd_instance(1)};
  TrainConfig cfg;
  cfg.rollout_steps = 10;
  cfg.cost = CostId::kObjective;
  cfg.target_rate = 0.5;  // faster than the baseline
  CHECK_THROWS_AS(train(insts, cfg), InvalidArgument);
  cfg.target_rate = 0.999;
  cfg.population = 3;
  CHECK_THROWS_AS(train(insts, cfg), InvalidArgument);
  cfg.population = 4;
  cfg.optimizer = "lbfgs";
  CHECK_THROWS_AS(train(insts, cfg), InvalidArgument);
  CHECK_THROWS_AS(train(std::vector<TrainingInstance>{}, cfg), InvalidArgument);
}

TEST_CASE("projected training rollouts stay feasible") {
  const QuadraticProblem p = random_sc_quadratic(3, 10.0, 31);
  const double bound = 0.5 * p.x_star.cwiseAbs().maxCoeff();
  const Polytope box = Polytope::box(3, bound);
  TrainingInstance inst{projected_gradient(p, box, 1.0 / p.beta), p, Vector::Zero(3), box};
  ModelShape shape;
  auto model = std::make_shared<LearnedModel>(randomized(shape, 17, 3.0));
  const AugmentedRun run = learned_rollout(model, inst, 200, 1);
  for (const Vector& x : run.outputs) CHECK(box.contains(x, 1e-10));
}

TEST_CASE("string conversions") {
  CHECK(impulse_mode_from_string(to_string(ImpulseMode::kState)) == ImpulseMode::kState);
  CHECK(impulse_mode_from_string(to_string(ImpulseMode::kStateAndGradient)) == ImpulseMode::kStateAndGradient);
  CHECK(cost_id_from_string("residual") == CostId::kResidual);
  CHECK(cost_id_from_string("objective") == CostId::kObjective);
  CHECK_THROWS_AS(cost_id_from_string("loss"), InvalidArgument);
  const TrainConfig ref = reference_regression_config();
  CHECK(ref.samples == 1024);
  CHECK(ref.rollout_steps == 10000);
}

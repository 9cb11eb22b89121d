#include "convaug/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "convaug/parallel.hpp"
#include "convaug/rng.hpp"

namespace convaug {

RegressionFamily::RegressionFamily(const RegressionFamilyConfig& cfg)
    : cfg_(cfg), base_(synthetic_base_matrix(cfg.dim, cfg.kappa, derive_seed(cfg.seed, "regression/base"))) {}

QuadraticProblem RegressionFamily::sample(std::string_view split, std::size_t index) const {
  return sample_regression_instance(base_, cfg_.noise_std_A, cfg_.b_mean, cfg_.noise_std_b,
                                    derive_seed(cfg_.seed, split, index));
}

TrainingInstance nag_instance(const QuadraticProblem& problem, std::size_t steps) {
  NagOptions opts;
  opts.poly_constant = 1.0;
  BaselineSpec spec = nag(problem, opts);
  const Vector xi0 = spec.lift(Vector::Zero(problem.dim()));
  NoPerturbation none;
  const AugmentedRun run = run_augmented(spec, none, xi0, steps);
  const double gamma = spec.cert().gamma;
  const double c = fit_certificate_constant(run.distances, RateCertificate::pexp(1.0, gamma));
  spec.certificate = RateCertificate::pexp(std::max(1.0, c), gamma);
  return {std::move(spec), problem, xi0, std::nullopt};
}

RegressionScenario make_regression_scenario(const RegressionFamily& family,
                                            const RegressionScenarioConfig& cfg) {
  RegressionScenario out;
  out.train.resize(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t i) {
    out.train[i] = nag_instance(family.sample("train", i), cfg.steps);
  });
  double c = 1.0, gamma = 0.0;
  for (const auto& inst : out.train) {
    c = std::max(c, inst.baseline.cert().p(0.0));
    gamma = std::max(gamma, inst.baseline.cert().gamma);
  }
  out.family_cert = RateCertificate::pexp(c, gamma);
  const double tau = cfg.tau > 0.0 ? cfg.tau : 0.5 * (1.0 + 1.0 / gamma);
  out.period = min_injection_period(out.family_cert, tau);
  out.target_rate = degraded_rate(out.family_cert, out.period).rho;

  TrainConfig& tc = out.cfg;
  tc.samples = cfg.samples;
  tc.rollout_steps = cfg.steps;
  tc.epochs = cfg.epochs;
  tc.seed = derive_seed(cfg.seed, "regression/train");
  tc.target_rate = out.target_rate;
  tc.cost = CostId::kResidual;
  tc.injection_period = out.period;
  return out;
}

InjectionEnvelopeResult learned_envelope_check(const std::shared_ptr<const LearnedModel>& model,
                                               const TrainingInstance& instance, std::size_t period,
                                               std::size_t steps) {
  InjectionEnvelopeResult out;
  out.cert = instance.baseline.cert();
  out.rho = out.cert.p(static_cast<double>(period)) * std::pow(out.cert.gamma, static_cast<double>(period));
  out.w_constant = model->envelope_constant() *
                   impulse_matrix(instance.baseline, instance.xi0, model->shape).norm();
  out.run = learned_rollout(model, instance, steps, period);
  out.check = check_injection_envelope(out.run.distances, out.cert, period, out.w_constant,
                                       model->shape.target_rate);
  return out;
}

std::vector<TrainingInstance> mpc_training_instances(const MpcProblem& mpc, std::size_t count,
                                                     double x0_std, std::uint64_t seed) {
  std::vector<TrainingInstance> out(count);
  parallel_for(count, [&](std::size_t i) {
    const Vector x0 = sample_initial_state(mpc, x0_std, derive_seed(seed, "mpc/train", i));
    auto [qp, box] = build_stacked_mpc(mpc, x0);
    BaselineSpec spec = mpc_baseline(qp, box);
    const Vector u0 = Vector::Zero(qp.dim());
    out[i] = TrainingInstance{std::move(spec), std::move(qp), u0, box};
  });
  return out;
}

TrainConfig mpc_train_config(const MpcProblem& mpc, const MpcScenarioConfig& cfg) {
  const Curvature curv = curvature_constants(mpc.condensed_hessian());
  TrainConfig tc;
  tc.samples = cfg.samples;
  tc.rollout_steps = cfg.budget;
  tc.epochs = cfg.epochs;
  tc.seed = derive_seed(cfg.seed, "mpc/learn");
  tc.cost = CostId::kObjective;
  tc.injection_period = cfg.period;
  const double gamma = 1.0 - curv.mu / curv.beta;
  tc.target_rate = std::pow(gamma, static_cast<double>(cfg.period));
  return tc;
}

}  // namespace convaug

#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/learned.hpp"
#include "convaug/mpc.hpp"
#include "convaug/problems.hpp"
#include "convaug/verify.hpp"

namespace convaug {

struct RegressionFamilyConfig {
  Eigen::Index dim = 30;
  /// cond(A'A) of the base matrix.
  double kappa = 1e4;
  double noise_std_A = 0.01;
  double b_mean = 0.5;
  double noise_std_b = 0.2;
  std::uint64_t seed = 0;
};

/// |Ax - b|^2 instances around one fixed ill-conditioned base matrix.
class RegressionFamily {
 public:
  explicit RegressionFamily(const RegressionFamilyConfig& cfg);
  /// Instance `index` of a named split ("train", "test", ...).
  QuadraticProblem sample(std::string_view split, std::size_t index) const;
  const Matrix& base() const { return base_; }
  const RegressionFamilyConfig& config() const { return cfg_; }

 private:
  RegressionFamilyConfig cfg_;
  Matrix base_;
};

/// NAG on the instance with a certificate constant fitted to its own
/// unperturbed trajectory from x = 0 over `steps` iterations.
TrainingInstance nag_instance(const QuadraticProblem& problem, std::size_t steps);

struct RegressionScenarioConfig {
  RegressionFamilyConfig family;
  std::size_t samples = 32;
  std::size_t steps = 500;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  /// Rate inflation for choosing the injection period; 0 selects the
  /// midpoint of (1, 1/gamma).
  double tau = 0.0;
};

struct RegressionScenario {
  std::vector<TrainingInstance> train;
  /// Largest fitted constant and rate over the training set.
  RateCertificate family_cert;
  std::size_t period = 1;
  /// Per-injection magnitude rate, p(N) gamma^N of the family certificate.
  double target_rate = 0.0;
  TrainConfig cfg;
};

RegressionScenario make_regression_scenario(const RegressionFamily& family,
                                            const RegressionScenarioConfig& cfg);

struct InjectionEnvelopeResult {
  EnvelopeCheck check;
  RateCertificate cert;
  double rho = 0.0;
  /// K |W_0|: bound on the first auxiliary signal.
  double w_constant = 0.0;
  AugmentedRun run;
};

/// Runs the learned unit on the instance and checks the distance trace
/// against the explicit sparse-injection envelope with w_k <= K |W_0| rate^k.
InjectionEnvelopeResult learned_envelope_check(const std::shared_ptr<const LearnedModel>& model,
                                               const TrainingInstance& instance, std::size_t period,
                                               std::size_t steps);

struct MpcScenarioConfig {
  std::size_t samples = 32;
  std::size_t budget = 100;
  std::size_t epochs = 50;
  double x0_std = 0.5;
  std::uint64_t seed = 0;
  std::size_t period = 1;
};

/// Condensed QPs for initial states x0 ~ N(0, x0_std^2 I), solved by
/// projected gradient from u = 0 with the box as correction set.
std::vector<TrainingInstance> mpc_training_instances(const MpcProblem& mpc, std::size_t count,
                                                     double x0_std, std::uint64_t seed);

/// Training configuration for the MPC unit: objective cost summed over the
/// budget, magnitude rate equal to the projected-gradient rate.
TrainConfig mpc_train_config(const MpcProblem& mpc, const MpcScenarioConfig& cfg);

}  // namespace convaug

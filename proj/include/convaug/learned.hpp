#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/core.hpp"
#include "convaug/problems.hpp"

namespace convaug {

/// What the magnitude unit is driven by at k = 0.
enum class ImpulseMode {
  /// w_0 = xi_0.
  kState,
  /// w_0 = [xi_0; grad F(phi(xi_0)) / beta]; lets the magnitude react to the
  /// problem when the solver is cold-started at zero.
  kStateAndGradient,
};

std::string to_string(ImpulseMode mode);
ImpulseMode impulse_mode_from_string(const std::string& name);

/// Stable diagonal linear recurrence driven by a single impulse:
///   zeta_0 = 0,  zeta_{k+1} = Lambda zeta_k + Gamma(Lambda) B w_k,
///   M_k = Re(C zeta_k) + F w_k,   w_0 = impulse, w_k = 0 for k >= 1.
/// Applied coordinate-wise with weights shared across decision coordinates.
/// Mode moduli are target_rate * sigmoid(raw) < target_rate for any raw, so
/// |M_k| <= K target_rate^k |w_0| for every parameter value.
class MagnitudeUnit {
 public:
  MagnitudeUnit() = default;
  MagnitudeUnit(std::size_t modes, std::size_t in_features, std::size_t out_features,
                double target_rate);

  std::size_t modes() const { return static_cast<std::size_t>(raw_modulus.size()); }
  std::size_t in_features() const { return static_cast<std::size_t>(B_re.cols()); }
  std::size_t out_features() const { return static_cast<std::size_t>(C_re.rows()); }

  std::complex<double> eigenvalue(std::size_t j) const;
  /// Gamma(Lambda)_j = sqrt(1 - |lambda_j|^2).
  double normalizer(std::size_t j) const;
  /// K with |M_k|_F <= K target_rate^k |W_0|_F for all k.
  double envelope_constant() const;

  std::size_t parameter_count() const;
  void write_parameters(std::vector<double>& out) const;
  void read_parameters(const double*& in);

  double target_rate = 0.9;
  Vector raw_modulus;
  Vector phase;
  Matrix B_re, B_im;
  Matrix C_re, C_im;
  Matrix passthrough;
};

/// Gated recurrent cell applied coordinate-wise, squashed through tanh so
/// every output component lies in (-1, 1).
class DirectionUnit {
 public:
  DirectionUnit() = default;
  DirectionUnit(std::size_t in_features, std::size_t hidden, std::size_t out_features);

  std::size_t in_features() const { return static_cast<std::size_t>(W_z.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(W_z.rows()); }
  std::size_t out_features() const { return static_cast<std::size_t>(W_o.rows()); }

  /// One recurrent step on a batch of coordinates (features x coords);
  /// updates `state` (hidden x coords) and returns outputs (out x coords).
  Matrix step(const Matrix& features, Matrix& state) const;

  std::size_t parameter_count() const;
  void write_parameters(std::vector<double>& out) const;
  void read_parameters(const double*& in);

  Matrix W_z, W_r, W_h;
  Matrix U_z, U_r, U_h;
  Vector b_z, b_r, b_h;
  Matrix W_o;
  Vector b_o;
  /// Frozen feature standardization (not trained).
  Vector feature_mean;
  Vector feature_scale;
};

struct ModelShape {
  /// State blocks per decision coordinate (1 for GD/prox/PGD, 2 for NAG).
  std::size_t blocks = 1;
  std::size_t modes = 4;
  std::size_t hidden = 8;
  double target_rate = 0.9;
  ImpulseMode impulse = ImpulseMode::kStateAndGradient;
};

/// v = M .* D with M from the magnitude unit and D from the direction unit.
struct LearnedModel {
  ModelShape shape;
  MagnitudeUnit magnitude;
  DirectionUnit direction;

  /// Random recurrent weights, zero readout and passthrough (so v == 0).
  static LearnedModel initialize(const ModelShape& shape, std::uint64_t seed);

  std::size_t parameter_count() const;
  Vector parameters() const;
  void set_parameters(const Vector& theta);
  double envelope_constant() const { return magnitude.envelope_constant(); }
};

/// Per-coordinate direction features [state blocks..., grad_i / beta, F].
Matrix direction_features(const BaselineSpec& baseline, const Vector& state, std::size_t blocks);

/// Impulse w_0 arranged as (in_features x decision_dim).
Matrix impulse_matrix(const BaselineSpec& baseline, const Vector& xi0, const ModelShape& shape);

/// Runs the learned unit as an injection generator.
class LearnedGenerator final : public Generator {
 public:
  explicit LearnedGenerator(std::shared_ptr<const LearnedModel> model);
  void reset(const BaselineSpec& baseline, const Vector& xi0) override;
  /// v_k = M_k(F, xi_0) .* D_k(F, xi_{k:0}); throws on non-finite features.
  Vector emit(std::size_t k, const Vector& state, const BaselineSpec& baseline) override;
  std::string kind() const override { return "learned"; }
  std::unique_ptr<Generator> clone() const override;

  /// |W_0|_F of the current rollout; |v_k| <= K target_rate^k impulse_norm().
  double impulse_norm() const { return impulse_.norm(); }

 private:
  std::shared_ptr<const LearnedModel> model_;
  Matrix impulse_;
  Eigen::MatrixXcd zeta_;
  Matrix hidden_;
  std::size_t next_index_ = 0;
};

enum class CostId { kResidual, kObjective };
std::string to_string(CostId id);
CostId cost_id_from_string(const std::string& name);

/// Residual: sum_t |A x_t - b|^2 (regression instances). Objective: sum_t F(x_t).
double algo_cost(const AugmentedRun& run, const QuadraticProblem& problem, CostId id);

struct TrainingInstance {
  BaselineSpec baseline;
  QuadraticProblem problem;
  Vector xi0;
  /// Feasibility correction for projected baselines.
  std::optional<Polytope> correction;
};

struct TrainConfig {
  std::size_t samples = 32;
  std::size_t rollout_steps = 500;
  std::size_t epochs = 50;
  /// "adam" or "sgd".
  std::string optimizer = "adam";
  double learning_rate = 0.02;
  std::uint64_t seed = 0;
  /// Per injection index when injecting sparsely; target_rate^(1/period)
  /// must be at least the baseline rate.
  double target_rate = 0.9;
  CostId cost = CostId::kResidual;
  /// Antithetic evolution strategies: population members (pairs = population / 2).
  std::size_t population = 16;
  double sigma = 0.05;
  std::size_t injection_period = 1;
  /// Diverged rollouts cost baseline * (1 + penalty).
  double divergence_penalty = 1.0;
  std::size_t modes = 4;
  std::size_t hidden = 8;
  ImpulseMode impulse = ImpulseMode::kStateAndGradient;
};

/// Large-scale regression preset: 1024 instances, 10^4-step rollouts, Adam
/// at 1e-3 for 100 epochs. Far beyond a desk-scale budget; kept as a named
/// configuration only.
TrainConfig reference_regression_config();

struct EpochLog {
  std::size_t epoch = 0;
  double mean_cost = 0.0;
  double best_cost = 0.0;
  double envelope_constant = 0.0;
};

struct TrainResult {
  LearnedModel model;
  std::vector<EpochLog> log;
  double baseline_mean_cost = 0.0;
  double best_mean_cost = 0.0;
};

/// Rollout of one instance with the learned unit injected every
/// cfg.injection_period steps (with feasibility correction when set).
AugmentedRun learned_rollout(const std::shared_ptr<const LearnedModel>& model,
                             const TrainingInstance& instance, std::size_t steps,
                             std::size_t period);

/// Cost of one instance, or baseline * (1 + penalty) when the rollout diverges.
double instance_cost(const std::shared_ptr<const LearnedModel>& model,
                     const TrainingInstance& instance, const TrainConfig& cfg,
                     double baseline_cost);

double baseline_cost(const TrainingInstance& instance, const TrainConfig& cfg);

/// Fits the frozen feature standardization from unperturbed rollouts.
void fit_feature_normalization(LearnedModel& model, const std::vector<TrainingInstance>& instances,
                               const TrainConfig& cfg);

/// Empirical algorithm-cost minimization with antithetic ES. Keeps the best
/// parameters seen, so the returned mean cost never exceeds the v == 0 cost.
TrainResult train(const std::vector<TrainingInstance>& instances, const TrainConfig& cfg);
TrainResult train(const std::function<TrainingInstance(std::size_t)>& sampler, const TrainConfig& cfg);

double mean_cost(const std::shared_ptr<const LearnedModel>& model,
                 const std::vector<TrainingInstance>& instances, const TrainConfig& cfg,
                 const std::vector<double>& baseline_costs);

}  // namespace convaug

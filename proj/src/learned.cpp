#include "convaug/learned.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "convaug/parallel.hpp"
#include "convaug/rng.hpp"

namespace convaug {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& m) { return m.unaryExpr([](double x) { return sigmoid(x); }); }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

void write_block(const Matrix& m, std::vector<double>& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void read_block(Matrix& m, const double*& in) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = *in++;
}

void write_block(const Vector& v, std::vector<double>& out) {
  out.insert(out.end(), v.data(), v.data() + v.size());
}

void read_block(Vector& v, const double*& in) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = *in++;
}

std::size_t magnitude_inputs(const ModelShape& shape) {
  return shape.blocks + (shape.impulse == ImpulseMode::kStateAndGradient ? 1 : 0);
}

std::size_t direction_inputs(const ModelShape& shape) { return shape.blocks + 2; }

std::size_t blocks_of(const BaselineSpec& baseline) {
  if (baseline.decision_dim <= 0 || baseline.state_dim % baseline.decision_dim != 0)
    throw InvalidArgument("learned: state is not a whole number of decision blocks");
  return static_cast<std::size_t>(baseline.state_dim / baseline.decision_dim);
}

}  // namespace

std::string to_string(ImpulseMode mode) {
  return mode == ImpulseMode::kState ? "state" : "state+gradient";
}

ImpulseMode impulse_mode_from_string(const std::string& name) {
  if (name == "state") return ImpulseMode::kState;
  if (name == "state+gradient") return ImpulseMode::kStateAndGradient;
  throw InvalidArgument("unknown impulse mode '" + name + "'");
}

std::string to_string(CostId id) { return id == CostId::kResidual ? "residual" : "objective"; }

CostId cost_id_from_string(const std::string& name) {
  if (name == "residual") return CostId::kResidual;
  if (name == "objective") return CostId::kObjective;
  throw InvalidArgument("unknown algo cost '" + name + "'");
}

MagnitudeUnit::MagnitudeUnit(std::size_t modes, std::size_t in_features, std::size_t out_features,
                             double target_rate)
    : target_rate(target_rate),
      raw_modulus(Vector::Zero(modes)),
      phase(Vector::Zero(modes)),
      B_re(Matrix::Zero(modes, in_features)),
      B_im(Matrix::Zero(modes, in_features)),
      C_re(Matrix::Zero(out_features, modes)),
      C_im(Matrix::Zero(out_features, modes)),
      passthrough(Matrix::Zero(out_features, in_features)) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw InvalidArgument("magnitude: target rate must lie in (0, 1)");
}

std::complex<double> MagnitudeUnit::eigenvalue(std::size_t j) const {
  return std::polar(target_rate * sigmoid(raw_modulus[j]), phase[j]);
}

double MagnitudeUnit::normalizer(std::size_t j) const {
  const double r = std::abs(eigenvalue(j));
  return std::sqrt(std::max(0.0, 1.0 - r * r));
}

double MagnitudeUnit::envelope_constant() const {
  const std::size_t h = modes();
  Matrix readout(out_features(), 2 * h);
  readout << C_re, -C_im;
  Matrix input(2 * h, in_features());
  Vector gamma(h);
  for (std::size_t j = 0; j < h; ++j) gamma[j] = normalizer(j);
  input << gamma.asDiagonal() * B_re, gamma.asDiagonal() * B_im;
  return std::max(spectral_norm(passthrough),
                  spectral_norm(readout) * spectral_norm(input) / target_rate);
}

std::size_t MagnitudeUnit::parameter_count() const {
  return static_cast<std::size_t>(raw_modulus.size() + phase.size() + B_re.size() + B_im.size() +
                                  C_re.size() + C_im.size() + passthrough.size());
}

void MagnitudeUnit::write_parameters(std::vector<double>& out) const {
  write_block(raw_modulus, out);
  write_block(phase, out);
  write_block(B_re, out);
  write_block(B_im, out);
  write_block(C_re, out);
  write_block(C_im, out);
  write_block(passthrough, out);
}

void MagnitudeUnit::read_parameters(const double*& in) {
  read_block(raw_modulus, in);
  read_block(phase, in);
  read_block(B_re, in);
  read_block(B_im, in);
  read_block(C_re, in);
  read_block(C_im, in);
  read_block(passthrough, in);
}

DirectionUnit::DirectionUnit(std::size_t in_features, std::size_t hidden, std::size_t out_features)
    : W_z(Matrix::Zero(hidden, in_features)),
      W_r(Matrix::Zero(hidden, in_features)),
      W_h(Matrix::Zero(hidden, in_features)),
      U_z(Matrix::Zero(hidden, hidden)),
      U_r(Matrix::Zero(hidden, hidden)),
      U_h(Matrix::Zero(hidden, hidden)),
      b_z(Vector::Zero(hidden)),
      b_r(Vector::Zero(hidden)),
      b_h(Vector::Zero(hidden)),
      W_o(Matrix::Zero(out_features, hidden)),
      b_o(Vector::Zero(out_features)),
      feature_mean(Vector::Zero(in_features)),
      feature_scale(Vector::Ones(in_features)) {}

Matrix DirectionUnit::step(const Matrix& features, Matrix& state) const {
  if (features.rows() != W_z.cols()) throw InvalidArgument("direction: wrong feature count");
  if (state.rows() != W_z.rows() || state.cols() != features.cols())
    throw InvalidArgument("direction: hidden state has the wrong shape");
  const Matrix x =
      ((features.colwise() - feature_mean).array().colwise() / feature_scale.array()).matrix();
  const Matrix z = sigmoid((W_z * x + U_z * state).colwise() + b_z);
  const Matrix r = sigmoid((W_r * x + U_r * state).colwise() + b_r);
  const Matrix gated = r.cwiseProduct(state);
  const Matrix candidate = ((W_h * x + U_h * gated).colwise() + b_h).array().tanh().matrix();
  state = (Matrix::Ones(z.rows(), z.cols()) - z).cwiseProduct(state) + z.cwiseProduct(candidate);
  const double cap = std::nextafter(1.0, 0.0);
  return ((W_o * state).colwise() + b_o).unaryExpr([cap](double a) {
    return std::clamp(std::tanh(a), -cap, cap);
  });
}

std::size_t DirectionUnit::parameter_count() const {
  return static_cast<std::size_t>(W_z.size() + W_r.size() + W_h.size() + U_z.size() + U_r.size() +
                                  U_h.size() + b_z.size() + b_r.size() + b_h.size() + W_o.size() +
                                  b_o.size());
}

void DirectionUnit::write_parameters(std::vector<double>& out) const {
  for (const Matrix* m : {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h}) write_block(*m, out);
  for (const Vector* v : {&b_z, &b_r, &b_h}) write_block(*v, out);
  write_block(W_o, out);
  write_block(b_o, out);
}

void DirectionUnit::read_parameters(const double*& in) {
  for (Matrix* m : {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h}) read_block(*m, in);
  for (Vector* v : {&b_z, &b_r, &b_h}) read_block(*v, in);
  read_block(W_o, in);
  read_block(b_o, in);
}

LearnedModel LearnedModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.blocks < 1 || shape.modes < 1 || shape.hidden < 1)
    throw InvalidArgument("learned: blocks, modes and hidden size must be positive");
  LearnedModel model;
  model.shape = shape;
  const std::size_t in_mag = magnitude_inputs(shape);
  const std::size_t in_dir = direction_inputs(shape);
  model.magnitude = MagnitudeUnit(shape.modes, in_mag, shape.blocks, shape.target_rate);
  model.direction = DirectionUnit(in_dir, shape.hidden, shape.blocks);

  Rng rng(seed, "learned/init");
  MagnitudeUnit& mag = model.magnitude;
  for (std::size_t j = 0; j < shape.modes; ++j) {
    mag.raw_modulus[j] = rng.uniform(1.0, 4.0);
    mag.phase[j] = rng.uniform(0.0, std::numbers::pi / 2.0);
  }
  const double in_std = 1.0 / std::sqrt(static_cast<double>(in_mag));
  mag.B_re = rng.normal_matrix(mag.B_re.rows(), mag.B_re.cols(), in_std);
  mag.B_im = rng.normal_matrix(mag.B_im.rows(), mag.B_im.cols(), in_std);

  DirectionUnit& dir = model.direction;
  const double x_std = 1.0 / std::sqrt(static_cast<double>(in_dir));
  const double h_std = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  for (Matrix* m : {&dir.W_z, &dir.W_r, &dir.W_h}) *m = rng.normal_matrix(m->rows(), m->cols(), x_std);
  for (Matrix* m : {&dir.U_z, &dir.U_r, &dir.U_h}) *m = rng.normal_matrix(m->rows(), m->cols(), h_std);
  dir.W_o = rng.normal_matrix(dir.W_o.rows(), dir.W_o.cols(), h_std);
  return model;
}

std::size_t LearnedModel::parameter_count() const {
  return magnitude.parameter_count() + direction.parameter_count();
}

Vector LearnedModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  magnitude.write_parameters(out);
  direction.write_parameters(out);
  return Eigen::Map<const Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

void LearnedModel::set_parameters(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw InvalidArgument("learned: parameter vector has the wrong length");
  const double* in = theta.data();
  magnitude.read_parameters(in);
  direction.read_parameters(in);
}

Matrix direction_features(const BaselineSpec& baseline, const Vector& state, std::size_t blocks) {
  if (!baseline.problem) throw InvalidArgument("learned: baseline has no problem oracle");
  const Eigen::Index d = baseline.decision_dim;
  if (state.size() != static_cast<Eigen::Index>(blocks) * d)
    throw InvalidArgument("learned: state length does not match the model blocks");
  const SmoothProblem& problem = *baseline.problem;
  const Vector x = baseline.output(state);
  Matrix features(static_cast<Eigen::Index>(blocks) + 2, d);
  for (std::size_t b = 0; b < blocks; ++b)
    features.row(static_cast<Eigen::Index>(b)) = state.segment(static_cast<Eigen::Index>(b) * d, d).transpose();
  features.row(static_cast<Eigen::Index>(blocks)) = (problem.gradient(x) / problem.beta).transpose();
  features.row(static_cast<Eigen::Index>(blocks) + 1).setConstant(problem.objective(x));
  return features;
}

Matrix impulse_matrix(const BaselineSpec& baseline, const Vector& xi0, const ModelShape& shape) {
  const Eigen::Index d = baseline.decision_dim;
  const auto blocks = static_cast<Eigen::Index>(shape.blocks);
  if (xi0.size() != blocks * d) throw InvalidArgument("learned: initial state does not match the model blocks");
  Matrix w(static_cast<Eigen::Index>(magnitude_inputs(shape)), d);
  for (Eigen::Index b = 0; b < blocks; ++b) w.row(b) = xi0.segment(b * d, d).transpose();
  if (shape.impulse == ImpulseMode::kStateAndGradient) {
    if (!baseline.problem) throw InvalidArgument("learned: baseline has no problem oracle");
    const SmoothProblem& problem = *baseline.problem;
    w.row(blocks) = (problem.gradient(baseline.output(xi0)) / problem.beta).transpose();
  }
  return w;
}

LearnedGenerator::LearnedGenerator(std::shared_ptr<const LearnedModel> model) : model_(std::move(model)) {
  if (!model_) throw InvalidArgument("learned: model is null");
}

void LearnedGenerator::reset(const BaselineSpec& baseline, const Vector& xi0) {
  if (blocks_of(baseline) != model_->shape.blocks)
    throw InvalidArgument("learned: model was built for a different state layout");
  impulse_ = impulse_matrix(baseline, xi0, model_->shape);
  if (!impulse_.allFinite()) throw Diverged("learned: non-finite impulse", 0);
  const Eigen::Index d = baseline.decision_dim;
  zeta_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(model_->magnitude.modes()), d);
  hidden_ = Matrix::Zero(static_cast<Eigen::Index>(model_->direction.hidden()), d);
  next_index_ = 0;
}

Vector LearnedGenerator::emit(std::size_t k, const Vector& state, const BaselineSpec& baseline) {
  if (k != next_index_) throw InvalidArgument("learned: injections must be emitted in order after reset");
  ++next_index_;
  const MagnitudeUnit& mag = model_->magnitude;
  const Eigen::Index h = static_cast<Eigen::Index>(mag.modes());

  Matrix magnitude;
  if (k == 0) {
    magnitude = mag.passthrough * impulse_;
    const Matrix re = mag.B_re * impulse_;
    const Matrix im = mag.B_im * impulse_;
    for (Eigen::Index j = 0; j < h; ++j) {
      const double g = mag.normalizer(static_cast<std::size_t>(j));
      for (Eigen::Index i = 0; i < zeta_.cols(); ++i) zeta_(j, i) = {g * re(j, i), g * im(j, i)};
    }
  } else {
    magnitude = mag.C_re * zeta_.real() - mag.C_im * zeta_.imag();
    for (Eigen::Index j = 0; j < h; ++j) zeta_.row(j) *= mag.eigenvalue(static_cast<std::size_t>(j));
  }

  const Matrix features = direction_features(baseline, state, model_->shape.blocks);
  if (!features.allFinite()) {
    std::ostringstream os;
    os << "learned: non-finite direction features at injection " << k;
    throw Diverged(os.str(), k);
  }
  const Matrix direction = model_->direction.step(features, hidden_);
  const Matrix v = magnitude.cwiseProduct(direction);
  Vector out(v.size());
  for (Eigen::Index b = 0; b < v.rows(); ++b) out.segment(b * v.cols(), v.cols()) = v.row(b).transpose();
  return out;
}

std::unique_ptr<Generator> LearnedGenerator::clone() const {
  return std::make_unique<LearnedGenerator>(*this);
}

double algo_cost(const AugmentedRun& run, const QuadraticProblem& problem, CostId id) {
  double total = 0.0;
  if (id == CostId::kResidual) {
    if (!problem.design || !problem.target)
      throw InvalidArgument("algo cost: residual cost needs a regression instance");
    for (const Vector& x : run.outputs) total += (*problem.design * x - *problem.target).squaredNorm();
  } else {
    for (const Vector& x : run.outputs) total += problem.objective(x);
  }
  return total;
}

TrainConfig reference_regression_config() {
  TrainConfig cfg;
  cfg.samples = 1024;
  cfg.rollout_steps = 10000;
  cfg.epochs = 100;
  cfg.optimizer = "adam";
  cfg.learning_rate = 1e-3;
  cfg.cost = CostId::kResidual;
  return cfg;
}

AugmentedRun learned_rollout(const std::shared_ptr<const LearnedModel>& model,
                             const TrainingInstance& instance, std::size_t steps, std::size_t period) {
  ScheduledPerturbation source(period, std::make_unique<LearnedGenerator>(model));
  RunOptions options;
  options.correction = instance.correction;
  return run_augmented(instance.baseline, source, instance.xi0, steps, options);
}

double baseline_cost(const TrainingInstance& instance, const TrainConfig& cfg) {
  NoPerturbation none;
  RunOptions options;
  options.correction = instance.correction;
  const AugmentedRun run = run_augmented(instance.baseline, none, instance.xi0, cfg.rollout_steps, options);
  const double cost = algo_cost(run, instance.problem, cfg.cost);
  if (!std::isfinite(cost)) throw Diverged("train: baseline cost is not finite", cfg.rollout_steps);
  return cost;
}

double instance_cost(const std::shared_ptr<const LearnedModel>& model, const TrainingInstance& instance,
                     const TrainConfig& cfg, double baseline) {
  const double penalized = baseline * (1.0 + cfg.divergence_penalty);
  try {
    const AugmentedRun run = learned_rollout(model, instance, cfg.rollout_steps, cfg.injection_period);
    const double cost = algo_cost(run, instance.problem, cfg.cost);
    return std::isfinite(cost) ? cost : penalized;
  } catch (const Diverged&) {
    return penalized;
  }
}

double mean_cost(const std::shared_ptr<const LearnedModel>& model,
                 const std::vector<TrainingInstance>& instances, const TrainConfig& cfg,
                 const std::vector<double>& baseline_costs) {
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i)
    total += instance_cost(model, instances[i], cfg, baseline_costs[i]);
  return total / static_cast<double>(instances.size());
}

void fit_feature_normalization(LearnedModel& model, const std::vector<TrainingInstance>& instances,
                               const TrainConfig& cfg) {
  const std::size_t blocks = model.shape.blocks;
  const Eigen::Index nf = static_cast<Eigen::Index>(direction_inputs(model.shape));
  struct Moments {
    Vector sum;
    Vector sum_sq;
    double count = 0.0;
  };
  std::vector<Moments> parts(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    const TrainingInstance& inst = instances[i];
    NoPerturbation none;
    RunOptions options;
    options.correction = inst.correction;
    const AugmentedRun run = run_augmented(inst.baseline, none, inst.xi0, cfg.rollout_steps, options);
    Moments m{Vector::Zero(nf), Vector::Zero(nf), 0.0};
    for (std::size_t t = 0; t < cfg.rollout_steps; ++t) {
      if (!injection_index(cfg.injection_period, t)) continue;
      const Matrix f = direction_features(inst.baseline, run.states[t], blocks);
      m.sum += f.rowwise().sum();
      m.sum_sq += f.array().square().matrix().rowwise().sum();
      m.count += static_cast<double>(f.cols());
    }
    parts[i] = std::move(m);
  });
  Vector sum = Vector::Zero(nf);
  Vector sum_sq = Vector::Zero(nf);
  double count = 0.0;
  for (const Moments& m : parts) {
    sum += m.sum;
    sum_sq += m.sum_sq;
    count += m.count;
  }
  DirectionUnit& dir = model.direction;
  dir.feature_mean = Vector::Zero(nf);
  dir.feature_scale = Vector::Ones(nf);
  if (count < 1.0) return;
  for (Eigen::Index f = 0; f < nf; ++f) {
    const double mean = sum[f] / count;
    const double var = std::max(0.0, sum_sq[f] / count - mean * mean);
    const double std = std::sqrt(var);
    dir.feature_mean[f] = mean;
    dir.feature_scale[f] = std > 1e-12 * std::max(1.0, std::abs(mean)) ? std : 1.0;
  }
}

namespace {

void validate(const std::vector<TrainingInstance>& instances, const TrainConfig& cfg) {
  if (instances.empty()) throw InvalidArgument("train: no training instances");
  if (cfg.population < 2 || cfg.population % 2 != 0)
    throw InvalidArgument("train: population must be a positive even number");
  if (!(cfg.sigma > 0.0)) throw InvalidArgument("train: sigma must be positive");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("train: learning rate must be positive");
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw InvalidArgument("train: unknown optimizer '" + cfg.optimizer + "'");
  if (cfg.injection_period < 1) throw InvalidArgument("train: injection period must be >= 1");
  if (!(cfg.target_rate > 0.0 && cfg.target_rate < 1.0))
    throw InvalidArgument("train: target rate must lie in (0, 1)");
  if (cfg.divergence_penalty < 0.0) throw InvalidArgument("train: divergence penalty must be >= 0");
  const std::size_t blocks = blocks_of(instances.front().baseline);
  const double per_step = std::pow(cfg.target_rate, 1.0 / static_cast<double>(cfg.injection_period));
  for (const TrainingInstance& inst : instances) {
    if (blocks_of(inst.baseline) != blocks)
      throw InvalidArgument("train: instances mix baselines with different state layouts");
    if (inst.baseline.certificate && per_step < inst.baseline.certificate->gamma * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "train: target rate " << cfg.target_rate << " per injection is faster than the baseline rate "
         << inst.baseline.certificate->gamma;
      throw InvalidArgument(os.str());
    }
  }
}

}  // namespace

TrainResult train(const std::vector<TrainingInstance>& instances, const TrainConfig& cfg) {
  validate(instances, cfg);
  ModelShape shape;
  shape.blocks = blocks_of(instances.front().baseline);
  shape.modes = cfg.modes;
  shape.hidden = cfg.hidden;
  shape.target_rate = cfg.target_rate;
  shape.impulse = cfg.impulse;
  LearnedModel model = LearnedModel::initialize(shape, derive_seed(cfg.seed, "learned/model"));
  fit_feature_normalization(model, instances, cfg);

  std::vector<double> base(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) { base[i] = baseline_cost(instances[i], cfg); });

  TrainResult result;
  result.baseline_mean_cost = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(base.size());

  auto evaluate = [&](const Vector& theta) {
    auto m = std::make_shared<LearnedModel>(model);
    m->set_parameters(theta);
    return mean_cost(m, instances, cfg, base);
  };
  auto envelope_of = [&](const Vector& theta) {
    LearnedModel m = model;
    m.set_parameters(theta);
    return m.envelope_constant();
  };

  Vector theta = model.parameters();
  const Eigen::Index dim = theta.size();
  Vector best = theta;
  double best_cost = evaluate(theta);
  result.log.push_back({0, best_cost, best_cost, envelope_of(theta)});

  const std::size_t pairs = cfg.population / 2;
  Vector m1 = Vector::Zero(dim);
  Vector m2 = Vector::Zero(dim);
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(cfg.seed, "learned/es", epoch);
    std::vector<Vector> noise(pairs);
    for (auto& eps : noise) eps = rng.normal_vector(dim);

    std::vector<double> costs(2 * pairs);
    parallel_for(2 * pairs, [&](std::size_t i) {
      const double sign = i % 2 == 0 ? 1.0 : -1.0;
      costs[i] = evaluate(theta + sign * cfg.sigma * noise[i / 2]);
    });
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (costs[i] < best_cost) {
        best_cost = costs[i];
        best = theta + (i % 2 == 0 ? 1.0 : -1.0) * cfg.sigma * noise[i / 2];
      }
    }

    std::vector<std::size_t> order(costs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    std::vector<double> utility(costs.size());
    const double denom = static_cast<double>(costs.size() - 1);
    for (std::size_t r = 0; r < order.size(); ++r) utility[order[r]] = static_cast<double>(r) / denom - 0.5;

    Vector grad = Vector::Zero(dim);
    for (std::size_t j = 0; j < pairs; ++j) grad += (utility[2 * j] - utility[2 * j + 1]) * noise[j];
    grad /= static_cast<double>(2 * pairs) * cfg.sigma;

    if (cfg.optimizer == "adam") {
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
      theta -= cfg.learning_rate *
               ((m1 / c1).array() / ((m2 / c2).array().sqrt() + adam_eps)).matrix();
    } else {
      theta -= cfg.learning_rate * grad;
    }

    const double current = evaluate(theta);
    if (current < best_cost) {
      best_cost = current;
      best = theta;
    }
    result.log.push_back({epoch, current, best_cost, envelope_of(theta)});
  }

  model.set_parameters(best);
  result.model = std::move(model);
  result.best_mean_cost = best_cost;
  return result;
}

TrainResult train(const std::function<TrainingInstance(std::size_t)>& sampler, const TrainConfig& cfg) {
  std::vector<TrainingInstance> instances;
  instances.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) instances.push_back(sampler(i));
  return train(instances, cfg);
}

}  // namespace convaug

#include "convaug/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "convaug/rng.hpp"

namespace convaug {

DecayEnvelope DecayEnvelope::from_certificate(const RateCertificate& cert) {
  return {cert.poly_coeffs, cert.gamma};
}

double DecayEnvelope::p(double t) const {
  double acc = 0.0;
  for (auto it = poly_coeffs.rbegin(); it != poly_coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double DecayEnvelope::bound(double t) const { return p(t) * std::pow(gamma, t); }

DecayEnvelope DecayEnvelope::scaled(double factor) const {
  DecayEnvelope out = *this;
  for (double& c : out.poly_coeffs) c *= factor;
  return out;
}

void DecayEnvelope::validate() const {
  if (poly_coeffs.empty() || !(p(0.0) > 0.0)) throw InvalidArgument("envelope: p(0) must be positive");
  for (int t = 0; t < 1000; ++t)
    if (p(t + 1) < p(t)) throw InvalidArgument("envelope: p must be non-decreasing");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("envelope: gamma must lie in (0, 1)");
}

SignalFit fit_signal(std::span<const double> norms, const DecayEnvelope& envelope, double declared) {
  SignalFit fit;
  for (std::size_t t = 0; t < norms.size(); ++t) {
    const double value = norms[t];
    if (!std::isfinite(value)) {
      fit.constant = std::numeric_limits<double>::infinity();
      fit.worst_index = t;
      fit.pass = false;
      return fit;
    }
    if (value <= kConvergedFloor) continue;
    const double ratio = value / envelope.bound(static_cast<double>(t));
    if (ratio > fit.constant) {
      fit.constant = ratio;
      fit.worst_index = t;
    }
  }
  fit.pass = fit.constant <= declared * (1.0 + 1e-6);
  return fit;
}

std::vector<double> signal_norms(const std::vector<Vector>& signal) {
  std::vector<double> out;
  out.reserve(signal.size());
  for (const Vector& v : signal) out.push_back(v.norm());
  return out;
}

std::size_t min_valid_period(const RateCertificate& cert) {
  constexpr std::size_t kCap = 1000000;
  for (std::size_t n = 1; n <= kCap; ++n) {
    const double rho = cert.p(static_cast<double>(n)) * std::pow(cert.gamma, static_cast<double>(n));
    if (rho < 1.0) return n;
  }
  throw ConvergenceFailure("no injection period below 1e6 gives p(N) gamma^N < 1");
}

DegradedRate degraded_rate(const RateCertificate& cert, std::size_t period) {
  if (period < 1) throw InvalidArgument("degraded_rate: N must be >= 1");
  const double n = static_cast<double>(period);
  const double pn = cert.p(n);
  const double rho = pn * std::pow(cert.gamma, n);
  if (!(rho < 1.0)) {
    const std::size_t minimal = min_valid_period(cert);
    std::ostringstream os;
    os << "injection period " << period << " gives rho = " << rho
       << " >= 1; the smallest valid period is " << minimal;
    throw InvalidPeriod(os.str(), minimal);
  }
  const double rate = cert.monotone ? cert.gamma : std::pow(pn, 1.0 / n) * cert.gamma;
  return {rho, rate, cert.degree() + 1};
}

std::size_t min_injection_period(const RateCertificate& cert, double tau) {
  if (!(tau > 1.0) || !(tau * cert.gamma < 1.0)) {
    std::ostringstream os;
    os << "tau = " << tau << " outside (1, 1/gamma) with gamma = " << cert.gamma;
    throw InvalidArgument(os.str());
  }
  constexpr std::size_t kCap = 1000000;
  const double log_tau = std::log(tau);
  for (std::size_t n = 1; n <= kCap; ++n) {
    // p(N) < tau^N, compared in logs to avoid overflow.
    if (std::log(cert.p(static_cast<double>(n))) < static_cast<double>(n) * log_tau) return n;
  }
  throw ConvergenceFailure("min_injection_period: no N <= 1e6 satisfies p(N) < tau^N");
}

double accumulated_poly_sum(const RateCertificate& cert, std::size_t t) {
  double q = 0.0;
  for (std::size_t k = 0; k <= t; ++k) q += cert.p(static_cast<double>(k));
  return q;
}

double injection_bound(const RateCertificate& cert, std::size_t period, double dist0,
                       double w_constant, double w_rate, std::size_t t) {
  if (period < 1) throw InvalidArgument("injection_bound: N must be >= 1");
  const std::size_t k = t / period;
  const std::size_t s = t % period;
  const double n = static_cast<double>(period);
  const double rho = cert.p(n) * std::pow(cert.gamma, n);
  const double r = std::max(rho, w_rate);
  const double kk = static_cast<double>(k);
  const double at_injection =
      std::pow(rho, kk) * dist0 + (k == 0 ? 0.0 : kk * w_constant * std::pow(r, kk - 1.0));
  const double within = s == 0 ? 1.0 : cert.p(static_cast<double>(s)) * std::pow(cert.gamma, static_cast<double>(s));
  return within * at_injection;
}

double proof_envelope_constant(const RateCertificate& cert, std::size_t period) {
  const double n = static_cast<double>(period);
  const double rho = cert.p(n) * std::pow(cert.gamma, n);
  return cert.p(n - 1.0) * cert.gamma / std::pow(rho, 2.0 - 1.0 / n);
}

std::optional<std::size_t> injection_index(std::size_t period, std::size_t t) {
  if (period < 1) throw InvalidArgument("injection period must be >= 1");
  if ((t + 1) % period != 0) return std::nullopt;
  return (t + 1) / period - 1;
}

Vector sparse_inject(const InjectionSchedule& schedule, std::size_t t, Eigen::Index state_dim) {
  const auto k = injection_index(schedule.period, t);
  if (!k) return Vector::Zero(state_dim);
  return schedule.w(*k);
}

Vector DecayingNoiseGenerator::emit(std::size_t k, const Vector& state, const BaselineSpec&) {
  Rng rng(seed_, "decaying-noise", k);
  return scale_ * std::pow(rate_, static_cast<double>(k)) * rng.unit_vector(state.size());
}

ScheduledPerturbation::ScheduledPerturbation(std::size_t period, std::unique_ptr<Generator> generator)
    : period_(period), generator_(std::move(generator)) {
  if (period_ < 1) throw InvalidArgument("schedule: period must be >= 1");
  if (!generator_) throw InvalidArgument("schedule: generator is null");
}

ScheduledPerturbation::ScheduledPerturbation(const InjectionSchedule& schedule)
    : ScheduledPerturbation(schedule.period, std::make_unique<SequenceGenerator>(schedule.w)) {}

void ScheduledPerturbation::reset(const BaselineSpec& baseline, const Vector& xi0) {
  generator_->reset(baseline, xi0);
}

Vector ScheduledPerturbation::next(std::size_t t, const Vector& state, const BaselineSpec& baseline) {
  const auto k = injection_index(period_, t);
  if (!k) return Vector::Zero(state.size());
  Vector w = generator_->emit(*k, state, baseline);
  if (w.size() != state.size()) throw InvalidArgument("schedule: generator emitted a vector of the wrong size");
  return w;
}

std::string ScheduledPerturbation::kind() const {
  return generator_->kind() == "learned" ? "learned" : "schedule";
}

Vector ReplayPerturbation::next(std::size_t t, const Vector& state, const BaselineSpec&) {
  if (t >= innovations_.size()) throw InvalidArgument("replay: innovation sequence too short");
  if (innovations_[t].size() != state.size()) throw InvalidArgument("replay: innovation has wrong size");
  return innovations_[t];
}

AugmentedRun run_augmented(const BaselineSpec& baseline, PerturbationSource& source,
                           const Vector& xi0, std::size_t steps, const RunOptions& options) {
  if (xi0.size() != baseline.state_dim) throw InvalidArgument("run: initial state has wrong size");
  if (!all_finite(xi0)) throw Diverged("run: non-finite initial state", 0);
  AugmentedRun run;
  run.problem_id = options.problem_id;
  run.baseline_id = baseline.name;
  run.source_kind = source.kind();
  run.states.reserve(steps + 1);
  run.outputs.reserve(steps + 1);
  run.innovations.reserve(steps);
  run.distances.reserve(steps + 1);
  run.feasible.reserve(steps + 1);

  const std::optional<Polytope>& set =
      options.correction ? options.correction : baseline.constraints;
  auto record = [&](const Vector& state) {
    run.states.push_back(state);
    run.outputs.push_back(baseline.output(state));
    run.distances.push_back(baseline.distance(state));
    run.feasible.push_back(set ? static_cast<char>(set->contains(run.outputs.back(), options.tol)) : 1);
  };

  source.reset(baseline, xi0);
  record(xi0);
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector& current = run.states.back();
    const Vector anchor = baseline.step(current);
    Vector v = source.next(t, current, baseline);
    if (options.correction) {
      CorrectionResult fixed = feasibility_correct(v, *options.correction, anchor,
                                                   options.correction_max_iters, options.tol);
      if (fixed.warning) ++run.correction_warnings;
      v = std::move(fixed.v);
    }
    Vector next = anchor + v;
    if (!all_finite(next)) {
      std::ostringstream os;
      os << "run diverged at step " << t + 1;
      throw Diverged(os.str(), t + 1);
    }
    run.innovations.push_back(std::move(v));
    record(next);
  }
  return run;
}

std::vector<Vector> reconstruct_innovation(const BaselineSpec& baseline,
                                           const std::vector<Vector>& target) {
  if (!baseline.certificate || !baseline.certificate->monotone)
    throw PreconditionError("reconstruct: baseline '" + baseline.name +
                            "' is not monotonically linearly convergent");
  if (target.empty()) throw InvalidArgument("reconstruct: target trajectory is empty");
  std::vector<Vector> v;
  v.reserve(target.size() - 1);
  for (std::size_t t = 0; t + 1 < target.size(); ++t) {
    if (target[t].size() != baseline.state_dim || target[t + 1].size() != baseline.state_dim)
      throw InvalidArgument("reconstruct: target state length does not match the baseline");
    v.push_back(target[t + 1] - baseline.step(target[t]));
  }
  return v;
}

CorrectionResult feasibility_correct(const Vector& v, const Polytope& polytope,
                                     const Vector& anchor, std::size_t max_iters, double tol,
                                     bool require_feasible_anchor) {
  if (v.size() != polytope.dim() || anchor.size() != polytope.dim())
    throw InvalidArgument("feasibility_correct: dimension mismatch");
  if (require_feasible_anchor && !polytope.contains(anchor, tol))
    throw PreconditionError("feasibility_correct: anchor is infeasible");
  CorrectionResult out;
  Vector y = anchor + v;
  if (polytope.contains(y, tol)) {
    out.v = v;
    return out;
  }
  out.modified = true;
  if (polytope.box_bound) {
    out.v = project_box(y, *polytope.box_bound) - anchor;
    out.iterations = 1;
    return out;
  }
  const Eigen::Index m = polytope.rows();
  const std::size_t budget =
      max_iters > 0 ? max_iters : static_cast<std::size_t>(10 * m * std::max<Eigen::Index>(1, polytope.dim()));
  Vector row_norm2(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm2[i] = polytope.A.row(i).squaredNorm();
  for (std::size_t sweep = 0; sweep < budget; ++sweep) {
    out.iterations = sweep + 1;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double excess = polytope.A.row(i).dot(y) - polytope.b[i];
      if (excess > 0.0) y -= (excess / row_norm2[i]) * polytope.A.row(i).transpose();
    }
    if (polytope.contains(y, tol)) {
      out.v = y - anchor;
      return out;
    }
  }
  out.v = Vector::Zero(v.size());
  out.warning = true;
  return out;
}

BaselineSpec compose_baseline(const BaselineSpec& baseline, std::size_t period) {
  if (period < 1) throw InvalidArgument("compose: N must be >= 1");
  if (period == 1) return baseline;
  BaselineSpec out = baseline;
  out.name = baseline.name + "^" + std::to_string(period);
  auto inner = baseline.step;
  out.step = [inner, period](const Vector& x) {
    Vector y = x;
    for (std::size_t i = 0; i < period; ++i) y = inner(y);
    return y;
  };
  out.lipschitz = std::pow(baseline.lipschitz, static_cast<double>(period));
  out.certificate.reset();
  if (baseline.certificate) {
    const double n = static_cast<double>(period);
    const double rho = baseline.certificate->p(n) * std::pow(baseline.certificate->gamma, n);
    if (rho < 1.0) {
      out.certificate = RateCertificate::exp(rho);
    } else {
      std::ostringstream os;
      os << "composed rate p(N) gamma^N = " << rho << " >= 1; certificate omitted";
      out.warning = os.str();
    }
  } else {
    out.warning = "baseline carries no certificate; composed certificate omitted";
  }
  return out;
}

}  // namespace convaug

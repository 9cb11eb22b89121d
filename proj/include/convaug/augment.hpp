#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convaug/baselines.hpp"
#include "convaug/core.hpp"
#include "convaug/problems.hpp"

namespace convaug {

/// The class l_exp(m, gamma): signals with |v_t| <= p(t) gamma^t. The
/// polynomial carries the signal's scale.
struct DecayEnvelope {
  std::vector<double> poly_coeffs{1.0};
  double gamma = 0.0;

  static DecayEnvelope constant(double c, double gamma) { return {{c}, gamma}; }
  static DecayEnvelope from_certificate(const RateCertificate& cert);

  std::size_t degree() const { return poly_coeffs.empty() ? 0 : poly_coeffs.size() - 1; }
  double p(double t) const;
  double bound(double t) const;
  DecayEnvelope scaled(double factor) const;
  void validate() const;
};

/// Signal values at or below this are treated as converged.
inline constexpr double kConvergedFloor = 1e-12;

struct SignalFit {
  /// Smallest c with |v_t| <= c p(t) gamma^t over the non-converged samples.
  double constant = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

/// Fits the membership constant and accepts when it does not exceed
/// `declared` by more than a relative 1e-6.
SignalFit fit_signal(std::span<const double> norms, const DecayEnvelope& envelope,
                     double declared = 1.0);
std::vector<double> signal_norms(const std::vector<Vector>& signal);

struct DegradedRate {
  double rho;
  double rate;
  std::size_t degree;
};

/// rho = p(N) gamma^N and the degraded rate p(N)^{1/N} gamma for injection
/// every N steps. Throws InvalidPeriod (carrying the minimal valid N) when
/// rho >= 1.
DegradedRate degraded_rate(const RateCertificate& cert, std::size_t period);

/// Smallest N with p(N) gamma^N < 1.
std::size_t min_valid_period(const RateCertificate& cert);

/// Smallest N with p(N) < tau^N for tau in (1, 1/gamma). Scans up to 1e6.
std::size_t min_injection_period(const RateCertificate& cert, double tau);

/// q(t) = sum_{k=0}^{t} p(k), accumulated numerically.
double accumulated_poly_sum(const RateCertificate& cert, std::size_t t);

/// Explicit worst-case bound on dist(xi_t, Fix) for sparse injection with
/// period N and auxiliary signal |w_k| <= w_constant * w_rate^k:
///   t = Nk + s:  p(s) gamma^s (rho^k dist0 + k w_constant r^{k-1}),  r = max(rho, w_rate),
/// with p(s) gamma^s replaced by 1 when s = 0. Degree m+1 at rate r^{1/N}.
double injection_bound(const RateCertificate& cert, std::size_t period, double dist0,
                        double w_constant, double w_rate, std::size_t t);

/// Constant p(N-1) gamma / rho^{2 - 1/N} that multiplies q(t/N) in the
/// general-case bound; recorded for comparison with fitted constants.
double proof_envelope_constant(const RateCertificate& cert, std::size_t period);

/// A pure injection schedule: v_t = w_{(t+1)/N - 1} when (t+1) mod N == 0.
struct InjectionSchedule {
  std::size_t period = 1;
  std::function<Vector(std::size_t)> w;
};

/// Index k of the auxiliary signal injected at step t, if any.
std::optional<std::size_t> injection_index(std::size_t period, std::size_t t);
Vector sparse_inject(const InjectionSchedule& schedule, std::size_t t, Eigen::Index state_dim);

/// Produces the auxiliary signal w_k. Stateful generators (learned units)
/// see the state at the injection step.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual void reset(const BaselineSpec& /*baseline*/, const Vector& /*xi0*/) {}
  virtual Vector emit(std::size_t k, const Vector& state, const BaselineSpec& baseline) = 0;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<Generator> clone() const = 0;
};

/// w_k from a pure function of k.
class SequenceGenerator final : public Generator {
 public:
  explicit SequenceGenerator(std::function<Vector(std::size_t)> w) : w_(std::move(w)) {}
  Vector emit(std::size_t k, const Vector&, const BaselineSpec&) override { return w_(k); }
  std::string kind() const override { return "sequence"; }
  std::unique_ptr<Generator> clone() const override { return std::make_unique<SequenceGenerator>(*this); }

 private:
  std::function<Vector(std::size_t)> w_;
};

/// w_k = scale * rate^k * u_k with u_k uniform on the unit sphere.
class DecayingNoiseGenerator final : public Generator {
 public:
  DecayingNoiseGenerator(double scale, double rate, std::uint64_t seed)
      : scale_(scale), rate_(rate), seed_(seed) {}
  Vector emit(std::size_t k, const Vector& state, const BaselineSpec&) override;
  std::string kind() const override { return "decaying-noise"; }
  std::unique_ptr<Generator> clone() const override { return std::make_unique<DecayingNoiseGenerator>(*this); }

 private:
  double scale_;
  double rate_;
  std::uint64_t seed_;
};

/// Source of the innovation v_t in xi_{t+1} = pi(xi_t) + v_t.
class PerturbationSource {
 public:
  virtual ~PerturbationSource() = default;
  virtual void reset(const BaselineSpec& /*baseline*/, const Vector& /*xi0*/) {}
  virtual Vector next(std::size_t t, const Vector& state, const BaselineSpec& baseline) = 0;
  /// One of "none", "schedule", "learned", "replay".
  virtual std::string kind() const = 0;
};

class NoPerturbation final : public PerturbationSource {
 public:
  Vector next(std::size_t, const Vector& state, const BaselineSpec&) override {
    return Vector::Zero(state.size());
  }
  std::string kind() const override { return "none"; }
};

/// Sparse injection of a generator's output every `period` steps.
class ScheduledPerturbation final : public PerturbationSource {
 public:
  ScheduledPerturbation(std::size_t period, std::unique_ptr<Generator> generator);
  explicit ScheduledPerturbation(const InjectionSchedule& schedule);
  void reset(const BaselineSpec& baseline, const Vector& xi0) override;
  Vector next(std::size_t t, const Vector& state, const BaselineSpec& baseline) override;
  std::string kind() const override;
  std::size_t period() const { return period_; }

 private:
  std::size_t period_;
  std::unique_ptr<Generator> generator_;
};

/// Replays a recorded innovation sequence.
class ReplayPerturbation final : public PerturbationSource {
 public:
  explicit ReplayPerturbation(std::vector<Vector> innovations) : innovations_(std::move(innovations)) {}
  Vector next(std::size_t t, const Vector& state, const BaselineSpec& baseline) override;
  std::string kind() const override { return "replay"; }

 private:
  std::vector<Vector> innovations_;
};

struct RunOptions {
  /// When set, every v_t is passed through feasibility_correct against this
  /// polytope with anchor pi(xi_t).
  std::optional<Polytope> correction;
  std::size_t correction_max_iters = 0;
  double tol = 1e-10;
  std::string problem_id;
};

struct AugmentedRun {
  std::string problem_id;
  std::string baseline_id;
  std::string source_kind;
  std::vector<Vector> states;
  /// phi(xi_t), the decision iterates.
  std::vector<Vector> outputs;
  std::vector<Vector> innovations;
  std::vector<double> distances;
  std::vector<char> feasible;
  std::size_t correction_warnings = 0;

  std::size_t steps() const { return innovations.size(); }
};

/// Rolls out xi_{t+1} = pi(xi_t) + v_t for T steps. Throws Diverged with the
/// index of the first non-finite state.
AugmentedRun run_augmented(const BaselineSpec& baseline, PerturbationSource& source,
                           const Vector& xi0, std::size_t steps, const RunOptions& options = {});

/// v_t = chi_{t+1} - pi(chi_t): the innovation that makes the augmented
/// baseline reproduce the target trajectory. The baseline must be monotone.
std::vector<Vector> reconstruct_innovation(const BaselineSpec& baseline,
                                           const std::vector<Vector>& target);

struct CorrectionResult {
  Vector v;
  /// Budget exhausted; v was replaced by zero.
  bool warning = false;
  bool modified = false;
  std::size_t iterations = 0;
};

/// Adjusts v so that anchor + v lies in the polytope: exact clamping for
/// boxes, Agmon's cyclic relaxation (relaxation 1) otherwise. v is returned
/// unchanged when already admissible. max_iters = 0 selects 10 * M * d sweeps.
CorrectionResult feasibility_correct(const Vector& v, const Polytope& polytope,
                                     const Vector& anchor, std::size_t max_iters = 0,
                                     double tol = 1e-10, bool require_feasible_anchor = true);

/// N-fold composition pi^N. Its certificate is Exp(p(N) gamma^N) when that
/// rate is below one; otherwise the certificate is dropped and `warning` set.
BaselineSpec compose_baseline(const BaselineSpec& baseline, std::size_t period);

}  // namespace convaug

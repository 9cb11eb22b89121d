#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/core.hpp"

namespace convaug {

/// Euclidean distance of every state to the fixed point, length T+1.
std::vector<double> distance_trace(const AugmentedRun& run, const Vector& fixed_point);
std::vector<double> distance_trace(const AugmentedRun& run, const BaselineSpec& baseline);

inline constexpr double kEnvelopeSlack = 1e-9;

struct EnvelopeCheck {
  bool pass = true;
  /// max_t trace[t] / (p(t) gamma^t trace[0]).
  double worst_ratio = 0.0;
  std::size_t worst_index = 0;
};

/// trace[t] <= p(t) gamma^t trace[0] (1 + 1e-9) for every t. Passes
/// vacuously when trace[0] == 0. Points at or below kConvergedFloor count as
/// satisfied: past that level the distance is round-off, not convergence.
EnvelopeCheck check_envelope(std::span<const double> trace, const DecayEnvelope& envelope);

/// trace[t] <= injection_bound(cert, period, trace[0], w_constant, w_rate, t)
/// (1 + 1e-9) for every t: the explicit envelope of sparse injection. Same
/// round-off floor as check_envelope.
EnvelopeCheck check_injection_envelope(std::span<const double> trace, const RateCertificate& cert,
                                       std::size_t period, double w_constant, double w_rate);

/// Smallest c with trace[t] <= c p(t) gamma^t trace[0]; points at or below
/// the convergence floor are ignored. Returns 0 when trace[0] == 0.
double fit_certificate_constant(std::span<const double> trace, const RateCertificate& cert);

struct RateFitOptions {
  double tail_fraction = 0.5;
  std::size_t min_points = 10;
};

struct RateEstimate {
  double rate = 0.0;
  /// Degree of the fitted polynomial factor (the fit is log-linear).
  std::size_t degree = 0;
  /// Root-mean-square residual of the log-linear fit.
  double residual = 0.0;
  std::size_t t_lo = 0;
  std::size_t t_hi = 0;
  /// First index of the fitted tail.
  std::size_t tail_start = 0;
};

/// Least-squares fit of log trace[t] against t over the tail of the usable
/// points (trace in (1e-12, inf)). Throws InsufficientData with fewer than
/// min_points usable points.
RateEstimate estimate_rate(std::span<const double> trace, const RateFitOptions& options = {});

/// True iff the update norms |xi_{t+1} - xi_t| satisfy the envelope, whose
/// polynomial carries the scale.
bool check_regularity(const AugmentedRun& run, const DecayEnvelope& envelope);

struct FixedPointReport {
  bool pass = true;
  /// |pi^N(xi*) - xi*|.
  double fixed_residual = 0.0;
  /// Largest final distance relative to the initial one over the probes.
  double worst_probe_ratio = 0.0;
  std::size_t composed_steps = 0;
};

/// Every fixed point of pi is fixed by pi^N (to tol relative to max(1,|xi*|)),
/// and iterates of pi^N from random probes converge to Fix pi.
FixedPointReport fixed_point_identity(const BaselineSpec& baseline, std::size_t period,
                                      std::size_t probes, std::uint64_t seed, double tol = 1e-12);
bool check_fixed_point_identity(const BaselineSpec& baseline, std::size_t period, std::size_t probes,
                                std::uint64_t seed = 0, double tol = 1e-12);

/// Verification record emitted as JSON by the front end.
struct VerificationReport {
  std::string check;
  bool pass = false;
  std::optional<double> gamma_hat;
  std::optional<DecayEnvelope> envelope;
  double worst_violation = 0.0;
  std::size_t worst_index = 0;
  std::string trace_file;
};

}  // namespace convaug

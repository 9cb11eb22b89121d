#include "convaug/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convaug/rng.hpp"

namespace convaug {

std::vector<double> distance_trace(const AugmentedRun& run, const Vector& fixed_point) {
  std::vector<double> out;
  out.reserve(run.states.size());
  for (const Vector& s : run.states) {
    if (s.size() != fixed_point.size()) throw InvalidArgument("distance trace: fixed point has the wrong size");
    out.push_back((s - fixed_point).norm());
  }
  return out;
}

std::vector<double> distance_trace(const AugmentedRun& run, const BaselineSpec& baseline) {
  return distance_trace(run, baseline.fixed_point);
}

EnvelopeCheck check_envelope(std::span<const double> trace, const DecayEnvelope& envelope) {
  EnvelopeCheck out;
  if (trace.empty() || trace[0] == 0.0) return out;
  const double d0 = trace[0];
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double bound = envelope.bound(static_cast<double>(t)) * d0;
    double ratio;
    if (!std::isfinite(trace[t])) {
      ratio = std::numeric_limits<double>::infinity();
    } else if (t > 0 && trace[t] <= kConvergedFloor) {
      // round-off regime: the iterate sits on the fixed point to working precision
      ratio = 0.0;
    } else if (bound > 0.0) {
      ratio = trace[t] / bound;
    } else {
      ratio = trace[t] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > out.worst_ratio || t == 0) {
      out.worst_ratio = ratio;
      out.worst_index = t;
    }
  }
  out.pass = out.worst_ratio <= 1.0 + kEnvelopeSlack;
  return out;
}

EnvelopeCheck check_injection_envelope(std::span<const double> trace, const RateCertificate& cert,
                                       std::size_t period, double w_constant, double w_rate) {
  EnvelopeCheck out;
  if (trace.empty()) return out;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double bound = injection_bound(cert, period, trace[0], w_constant, w_rate, t);
    double ratio;
    if (!std::isfinite(trace[t])) {
      ratio = std::numeric_limits<double>::infinity();
    } else if (t > 0 && trace[t] <= kConvergedFloor) {
      // round-off regime: the iterate sits on the fixed point to working precision
      ratio = 0.0;
    } else if (bound > 0.0) {
      ratio = trace[t] / bound;
    } else {
      ratio = trace[t] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > out.worst_ratio || t == 0) {
      out.worst_ratio = ratio;
      out.worst_index = t;
    }
  }
  out.pass = out.worst_ratio <= 1.0 + kEnvelopeSlack;
  return out;
}

double fit_certificate_constant(std::span<const double> trace, const RateCertificate& cert) {
  if (trace.empty() || trace[0] == 0.0) return 0.0;
  const DecayEnvelope env = DecayEnvelope::from_certificate(cert);
  double c = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (!std::isfinite(trace[t])) return std::numeric_limits<double>::infinity();
    if (trace[t] <= kConvergedFloor && t > 0) continue;
    const double bound = env.bound(static_cast<double>(t)) * trace[0];
    if (bound <= 0.0) return std::numeric_limits<double>::infinity();
    c = std::max(c, trace[t] / bound);
  }
  return c;
}

RateEstimate estimate_rate(std::span<const double> trace, const RateFitOptions& options) {
  if (!(options.tail_fraction > 0.0 && options.tail_fraction <= 1.0))
    throw InvalidArgument("estimate_rate: tail fraction must lie in (0, 1]");
  std::vector<std::size_t> usable;
  for (std::size_t t = 0; t < trace.size(); ++t)
    if (trace[t] > kConvergedFloor && std::isfinite(trace[t])) usable.push_back(t);
  const std::size_t min_points = std::max<std::size_t>(2, options.min_points);
  if (usable.size() < min_points)
    throw InsufficientData("estimate_rate: " + std::to_string(usable.size()) + " usable points, need " +
                           std::to_string(min_points));
  const auto n_usable = usable.size();
  std::size_t tail = static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(n_usable)));
  tail = std::clamp(tail, min_points, n_usable);
  const std::size_t first = n_usable - tail;

  double st = 0.0, sy = 0.0;
  for (std::size_t i = first; i < n_usable; ++i) {
    st += static_cast<double>(usable[i]);
    sy += std::log(trace[usable[i]]);
  }
  const double n = static_cast<double>(tail);
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = first; i < n_usable; ++i) {
    const double dt = static_cast<double>(usable[i]) - mt;
    stt += dt * dt;
    sty += dt * (std::log(trace[usable[i]]) - my);
  }
  if (stt <= 0.0) throw InsufficientData("estimate_rate: degenerate time grid");
  const double slope = sty / stt;
  double rss = 0.0;
  for (std::size_t i = first; i < n_usable; ++i) {
    const double pred = my + slope * (static_cast<double>(usable[i]) - mt);
    const double r = std::log(trace[usable[i]]) - pred;
    rss += r * r;
  }
  RateEstimate out;
  out.rate = std::exp(slope);
  out.degree = 0;
  out.residual = std::sqrt(rss / n);
  out.t_lo = usable.front();
  out.t_hi = usable.back();
  out.tail_start = usable[first];
  return out;
}

bool check_regularity(const AugmentedRun& run, const DecayEnvelope& envelope) {
  if (run.states.size() < 2) throw InvalidArgument("regularity: run needs at least two states");
  std::vector<double> norms;
  norms.reserve(run.states.size() - 1);
  for (std::size_t t = 0; t + 1 < run.states.size(); ++t)
    norms.push_back((run.states[t + 1] - run.states[t]).norm());
  for (std::size_t t = 0; t < norms.size(); ++t) {
    if (!std::isfinite(norms[t])) return false;
    if (norms[t] > envelope.bound(static_cast<double>(t)) * (1.0 + kEnvelopeSlack)) return false;
  }
  return true;
}

namespace {

std::size_t steps_to_contract(const RateCertificate& cert, double factor) {
  if (cert.gamma <= 0.0) return 1;
  for (std::size_t t = 1; t <= 10000000; t *= 2) {
    if (cert.bound(static_cast<double>(t)) <= factor) {
      std::size_t lo = t / 2, hi = t;
      while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        (cert.bound(static_cast<double>(mid)) <= factor ? hi : lo) = mid;
      }
      return hi;
    }
  }
  return 10000000;
}

}  // namespace

FixedPointReport fixed_point_identity(const BaselineSpec& baseline, std::size_t period,
                                      std::size_t probes, std::uint64_t seed, double tol) {
  if (period < 1) throw InvalidArgument("fixed point identity: period must be >= 1");
  const BaselineSpec composed = compose_baseline(baseline, period);
  const Vector& star = baseline.fixed_point;
  FixedPointReport out;
  out.fixed_residual = (composed.step(star) - star).norm();
  const double scale = std::max(1.0, star.norm());
  if (out.fixed_residual > tol * scale) out.pass = false;

  constexpr double kTarget = 1e-8;
  std::size_t base_steps = 1000 * period;
  if (baseline.certificate) base_steps = std::max(base_steps, steps_to_contract(*baseline.certificate, kTarget * 1e-2));
  out.composed_steps = (base_steps + period - 1) / period;

  for (std::size_t p = 0; p < probes; ++p) {
    Rng rng(seed, "fixed-point-probe", p);
    Vector xi = star + scale * rng.unit_vector(star.size());
    if (baseline.constraints && baseline.lift) {
      const Vector x = project_polytope(baseline.output(xi), *baseline.constraints);
      xi = baseline.lift(x);
    }
    const double d0 = (xi - star).norm();
    for (std::size_t k = 0; k < out.composed_steps; ++k) {
      xi = composed.step(xi);
      if (!all_finite(xi)) {
        out.pass = false;
        out.worst_probe_ratio = std::numeric_limits<double>::infinity();
        break;
      }
      if ((xi - star).norm() <= 1e-3 * kTarget * d0) break;
    }
    const double ratio = d0 > 0.0 ? (xi - star).norm() / d0 : 0.0;
    out.worst_probe_ratio = std::max(out.worst_probe_ratio, ratio);
  }
  if (!(out.worst_probe_ratio <= kTarget)) out.pass = false;
  return out;
}

bool check_fixed_point_identity(const BaselineSpec& baseline, std::size_t period, std::size_t probes,
                                std::uint64_t seed, double tol) {
  return fixed_point_identity(baseline, period, probes, seed, tol).pass;
}

}  // namespace convaug

// Acceptance harness: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.
//
//   convaug_acceptance            all criteria
//   convaug_acceptance 1 4 7      a subset (criterion 8 then covers the subset)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/experiments.hpp"
#include "convaug/learned.hpp"
#include "convaug/mpc.hpp"
#include "convaug/parallel.hpp"
#include "convaug/qp.hpp"
#include "convaug/rng.hpp"
#include "convaug/serialize.hpp"
#include "convaug/verify.hpp"

using namespace convaug;

namespace {

// FNV-1a over the shortest round-trip text of every recorded number.
class Digest {
 public:
  void add(double x) { add(format_double(x)); }
  void add(std::size_t n) { add(std::to_string(n)); }
  void add(const std::string& s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
    h_ ^= 0xff;
    h_ *= 0x100000001b3ULL;
  }
  void add(const std::vector<double>& xs) {
    for (double x : xs) add(x);
  }
  void add(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

struct Outcome {
  bool pass = false;
  std::vector<std::string> lines;
  std::uint64_t digest = 0;
  double seconds = 0.0;
};

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

std::string hex(std::uint64_t x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

bool within_time(double seconds, double limit, std::vector<std::string>& lines) {
  const bool ok = seconds <= limit;
  lines.push_back("runtime " + fmt(seconds, 3) + " s (limit " + fmt(limit, 3) + " s)");
  return ok;
}

// ---------------------------------------------------------------------------
// 1. Baseline certificates on random quadratics.

Outcome baseline_certificates() {
  constexpr std::size_t kInstances = 50;
  constexpr Eigen::Index kDim = 20;
  constexpr std::size_t kSteps = 500;
  const std::vector<double> kappas{10.0, 100.0, 1000.0};
  const std::vector<std::string> ids{"gd", "nag", "prox", "pgd"};

  struct Cell {
    double worst_ratio = 0.0;
    double worst_gap = -1.0;
    bool pass = true;
    std::vector<double> digest_values;
  };
  const std::size_t jobs = kappas.size() * kInstances;
  std::vector<std::map<std::string, Cell>> cells(jobs);

  parallel_for(jobs, [&](std::size_t job) {
    const double kappa = kappas[job / kInstances];
    const std::size_t i = job % kInstances;
    const QuadraticProblem p = random_sc_quadratic(kDim, kappa, derive_seed(1, "acc/c1/problem", job));
    const Polytope box = Polytope::box(kDim, 0.5 * p.x_star.cwiseAbs().maxCoeff());
    Rng rng(1, "acc/c1/x0", job);
    const Vector x0 = rng.normal_vector(kDim, 1.0);
    for (const std::string& id : ids) {
      const BaselineSpec spec = make_baseline(id, p, box, 1.0);
      NoPerturbation none;
      const AugmentedRun run = run_augmented(spec, none, spec.lift(x0), kSteps);
      const std::vector<double> trace = distance_trace(run, spec);
      const EnvelopeCheck env = check_envelope(trace, DecayEnvelope::from_certificate(spec.cert()));
      double gap = -1.0;
      bool rate_ok = true;
      try {
        const RateEstimate est = estimate_rate(trace);
        gap = est.rate - spec.cert().gamma;
        rate_ok = est.rate <= spec.cert().gamma + 0.01;
      } catch (const InsufficientData&) {
        // Converged to the floor within a handful of steps: faster than any rate.
      }
      Cell& c = cells[job][id];
      c.worst_ratio = env.worst_ratio;
      c.worst_gap = gap;
      c.pass = env.pass && rate_ok;
      c.digest_values = trace;
      (void)i;
    }
  });

  Outcome out;
  Digest digest;
  out.pass = true;
  for (const std::string& id : ids) {
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      double ratio = 0.0, gap = -1.0;
      std::size_t failures = 0;
      for (std::size_t i = 0; i < kInstances; ++i) {
        const Cell& c = cells[k * kInstances + i].at(id);
        ratio = std::max(ratio, c.worst_ratio);
        gap = std::max(gap, c.worst_gap);
        if (!c.pass) ++failures;
        digest.add(c.digest_values);
      }
      if (failures > 0) out.pass = false;
      out.lines.push_back(id + " kappa=" + fmt(kappas[k]) + ": fitted constant / certified " + fmt(ratio, 6) +
                          ", max(rate_hat - gamma) " + fmt(gap, 3) + ", failures " + std::to_string(failures) +
                          "/" + std::to_string(kInstances));
    }
  }
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 2. Degradation under injection.

Outcome injection_degradation() {
  constexpr std::size_t kSeeds = 20;
  Outcome out;
  Digest digest;
  out.pass = true;

  // GD (monotone), N = 1, w_k with |w_k| = gamma^k.
  {
    constexpr std::size_t kSteps = 1500;
    std::vector<double> fitted(kSeeds), rates(kSeeds), ratio(kSeeds);
    std::vector<char> ok(kSeeds);
    std::vector<std::vector<double>> traces(kSeeds);
    parallel_for(kSeeds, [&](std::size_t s) {
      const QuadraticProblem p = random_sc_quadratic(20, 5.0, derive_seed(2, "acc/c2/gd", s));
      const BaselineSpec spec = gd_rsi(p);
      const double gamma = spec.cert().gamma;
      ScheduledPerturbation src(1, std::make_unique<DecayingNoiseGenerator>(1.0, gamma, derive_seed(2, "acc/c2/w", s)));
      Rng rng(2, "acc/c2/x0", s);
      const AugmentedRun run = run_augmented(spec, src, rng.normal_vector(20), kSteps);
      const std::vector<double> trace = distance_trace(run, spec);
      // Degree-1 envelope at the unchanged rate.
      RateCertificate linear;
      linear.poly_coeffs = {1.0, 1.0};
      linear.gamma = gamma;
      linear.monotone = false;
      fitted[s] = fit_certificate_constant(trace, linear);
      const EnvelopeCheck env = check_injection_envelope(trace, spec.cert(), 1, 1.0, gamma);
      ratio[s] = env.worst_ratio;
      rates[s] = estimate_rate(trace).rate - gamma;
      // Explicit bound gamma^t d0 + t gamma^{t-1} is at most (1 + t) gamma^t max(d0, 1/gamma).
      const double declared = std::max(1.0, 1.0 / (gamma * trace[0]));
      ok[s] = env.pass && fitted[s] <= declared * (1 + 1e-9) && rates[s] <= 0.01;
      traces[s] = trace;
    });
    std::size_t failures = 0;
    for (std::size_t s = 0; s < kSeeds; ++s) {
      if (!ok[s]) ++failures;
      digest.add(traces[s]);
    }
    if (failures) out.pass = false;
    out.lines.push_back("gd N=1: max fitted degree-1 constant " + fmt(*std::max_element(fitted.begin(), fitted.end())) +
                        ", max bound ratio " + fmt(*std::max_element(ratio.begin(), ratio.end())) +
                        ", max(rate_hat - gamma) " + fmt(*std::max_element(rates.begin(), rates.end()), 3) +
                        ", failures " + std::to_string(failures) + "/" + std::to_string(kSeeds));
  }

  // NAG with the smallest period admitted by tau = 1.05.
  {
    constexpr double kTau = 1.05;
    constexpr std::size_t kSteps = 3000;
    std::vector<double> gaps(kSeeds), ratio(kSeeds);
    std::vector<std::size_t> periods(kSeeds);
    std::vector<char> ok(kSeeds);
    std::vector<std::vector<double>> traces(kSeeds);
    parallel_for(kSeeds, [&](std::size_t s) {
      const QuadraticProblem p = random_sc_quadratic(20, 100.0, derive_seed(2, "acc/c2/nag", s));
      const BaselineSpec spec = nag(p);
      const RateCertificate& cert = spec.cert();
      const std::size_t n = min_injection_period(cert, kTau);
      const double rho = degraded_rate(cert, n).rho;
      ScheduledPerturbation src(n, std::make_unique<DecayingNoiseGenerator>(1.0, rho, derive_seed(2, "acc/c2/w", s)));
      Rng rng(2, "acc/c2/x0", s);
      const AugmentedRun run = run_augmented(spec, src, spec.lift(rng.normal_vector(20)), kSteps);
      const std::vector<double> trace = distance_trace(run, spec);
      const EnvelopeCheck env = check_injection_envelope(trace, cert, n, 1.0, rho);
      const double rate = estimate_rate(trace).rate;
      gaps[s] = rate - kTau * cert.gamma;
      ratio[s] = env.worst_ratio;
      periods[s] = n;
      ok[s] = env.pass && rate <= kTau * cert.gamma + 0.01;
      traces[s] = trace;
    });
    std::size_t failures = 0;
    for (std::size_t s = 0; s < kSeeds; ++s) {
      if (!ok[s]) ++failures;
      digest.add(traces[s]);
      digest.add(periods[s]);
    }
    if (failures) out.pass = false;
    out.lines.push_back("nag tau=1.05: N in [" + std::to_string(*std::min_element(periods.begin(), periods.end())) +
                        ", " + std::to_string(*std::max_element(periods.begin(), periods.end())) +
                        "], max bound ratio " + fmt(*std::max_element(ratio.begin(), ratio.end())) +
                        ", max(rate_hat - tau gamma) " + fmt(*std::max_element(gaps.begin(), gaps.end()), 3) +
                        ", failures " + std::to_string(failures) + "/" + std::to_string(kSeeds));
  }
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 3. Completeness round trip.

Outcome completeness() {
  constexpr std::size_t kProblems = 10;
  constexpr std::size_t kSteps = 300;
  Outcome out;
  Digest digest;
  out.pass = true;
  double worst_replay = 0.0, worst_fit = 0.0, worst_gap = -1.0, worst_self = 0.0;
  for (std::size_t i = 0; i < kProblems; ++i) {
    const QuadraticProblem p = random_sc_quadratic(20, 100.0, derive_seed(3, "acc/c3/problem", i));
    const BaselineSpec gd = gd_rsi(p);
    const BaselineSpec acc = nag(p);
    Rng rng(3, "acc/c3/x0", i);
    const Vector x0 = rng.normal_vector(20);
    NoPerturbation none;
    const AugmentedRun target = run_augmented(acc, none, acc.lift(x0), kSteps);
    const std::vector<Vector>& chi = target.outputs;
    const std::vector<Vector> v = reconstruct_innovation(gd, chi);

    ReplayPerturbation replay(v);
    const AugmentedRun again = run_augmented(gd, replay, chi[0], kSteps);
    double replay_err = 0.0;
    for (std::size_t t = 0; t <= kSteps; ++t)
      replay_err = std::max(replay_err, (again.states[t] - chi[t]).norm() / std::max(1.0, chi[t].norm()));
    worst_replay = std::max(worst_replay, replay_err);

    // |v_t| <= |chi_{t+1} - x*| + L |chi_t - x*| <= (1 + L) M rate^t with M = sup dist(chi_t)/rate^t.
    const double rate = std::min(gd.cert().gamma + 0.01, 1.0 - 1e-12);
    double m = 0.0;
    for (std::size_t t = 0; t <= kSteps; ++t)
      m = std::max(m, gd.distance(chi[t]) / std::pow(rate, static_cast<double>(t)));
    const std::vector<double> norms = signal_norms(v);
    const SignalFit fit = fit_signal(norms, DecayEnvelope::constant(1.0, rate), (1.0 + gd.lipschitz) * m);
    worst_fit = std::max(worst_fit, fit.constant / ((1.0 + gd.lipschitz) * m));
    double gap = -1.0;
    try {
      gap = estimate_rate(norms).rate - rate;
    } catch (const InsufficientData&) {
    }
    worst_gap = std::max(worst_gap, gap);

    // Self reconstruction.
    const AugmentedRun own = run_augmented(gd, none, x0, kSteps);
    double self = 0.0;
    for (const Vector& w : reconstruct_innovation(gd, own.states)) self = std::max(self, w.cwiseAbs().maxCoeff());
    worst_self = std::max(worst_self, self);

    if (!(replay_err <= 1e-9) || !fit.pass || gap > 0.0 || !(self <= 1e-12)) out.pass = false;
    digest.add(norms);
    digest.add(replay_err);
    digest.add(self);
  }
  out.lines.push_back("max relative replay error " + fmt(worst_replay) + " (limit 1e-09)");
  out.lines.push_back("innovation membership at gamma_gd + 0.01: max fitted/declared " + fmt(worst_fit) +
                      ", max(rate_hat - (gamma_gd + 0.01)) " + fmt(worst_gap, 3));
  out.lines.push_back("self reconstruction max |v|_inf " + fmt(worst_self) + " (limit 1e-12)");
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 4. Feasibility under correction.

LearnedModel random_model(const ModelShape& shape, std::uint64_t seed, double scale) {
  LearnedModel m = LearnedModel::initialize(shape, seed);
  Rng rng(seed, "acc/c4/theta");
  m.set_parameters(m.parameters() + rng.normal_vector(static_cast<Eigen::Index>(m.parameter_count()), scale));
  return m;
}

Outcome feasibility() {
  constexpr std::size_t kRuns = 20;
  constexpr std::size_t kSteps = 500;
  Outcome out;
  Digest digest;
  std::vector<double> corrected(kRuns), uncorrected(kRuns);
  std::vector<std::size_t> violations(kRuns);
  std::vector<std::vector<double>> traces(kRuns);
  parallel_for(kRuns, [&](std::size_t r) {
    const QuadraticProblem p = random_sc_quadratic(10, 100.0, derive_seed(4, "acc/c4/problem", r));
    const Polytope box = Polytope::box(10, 0.5 * p.x_star.cwiseAbs().maxCoeff());
    const BaselineSpec spec = projected_gradient(p, box, 1.0 / p.beta);
    ModelShape shape;
    shape.target_rate = 0.999;
    auto model = std::make_shared<LearnedModel>(random_model(shape, derive_seed(4, "acc/c4/model", r), 3.0));
    Rng rng(4, "acc/c4/x0", r);
    const Vector x0 = project_box(rng.normal_vector(10), *box.box_bound);

    TrainingInstance inst{spec, p, x0, box};
    const AugmentedRun run = learned_rollout(model, inst, kSteps, 1);
    double worst = 0.0;
    for (const Vector& x : run.outputs) worst = std::max(worst, box.max_violation(x));
    corrected[r] = worst;

    inst.correction.reset();
    const AugmentedRun raw = learned_rollout(model, inst, kSteps, 1);
    double worst_raw = 0.0;
    std::size_t count = 0;
    for (const Vector& x : raw.outputs) {
      const double viol = box.max_violation(x);
      worst_raw = std::max(worst_raw, viol);
      if (viol > 1e-10) ++count;
    }
    uncorrected[r] = worst_raw;
    violations[r] = count;
    traces[r] = run.distances;
  });
  const double worst = *std::max_element(corrected.begin(), corrected.end());
  std::size_t total_violations = 0;
  for (std::size_t r = 0; r < kRuns; ++r) {
    total_violations += violations[r];
    digest.add(traces[r]);
    digest.add(uncorrected[r]);
  }
  out.pass = worst <= 1e-10 && total_violations > 0;
  out.lines.push_back("corrected: " + std::to_string(kRuns * kSteps) + " steps, max box violation " + fmt(worst) +
                      " (limit 1e-10)");
  out.lines.push_back("negative control without correction: " + std::to_string(total_violations) +
                      " infeasible iterates, max violation " +
                      fmt(*std::max_element(uncorrected.begin(), uncorrected.end())));
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 5. Regression family.

Outcome regression_family() {
  constexpr std::size_t kTest = 64;
  Outcome out;
  Digest digest;
  RegressionScenarioConfig rc;
  rc.family.seed = 5;
  rc.seed = 5;
  const RegressionFamily family(rc.family);
  const RegressionScenario sc = make_regression_scenario(family, rc);
  const TrainResult result = train(sc.train, sc.cfg);
  auto model = std::make_shared<const LearnedModel>(result.model);

  std::vector<InjectionEnvelopeResult> checks(kTest);
  parallel_for(kTest, [&](std::size_t i) {
    checks[i] = learned_envelope_check(model, nag_instance(family.sample("test", i), rc.steps), sc.period, rc.steps);
  });
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& c : checks) {
    if (!c.check.pass) ++violations;
    worst = std::max(worst, c.check.worst_ratio);
    digest.add(c.run.distances);
  }
  for (const EpochLog& e : result.log) {
    digest.add(e.mean_cost);
    digest.add(e.best_cost);
  }
  digest.add(result.model.parameters());

  out.pass = result.best_mean_cost < result.baseline_mean_cost && violations == 0;
  out.lines.push_back("family certificate c=" + fmt(sc.family_cert.p(0.0)) + " gamma=" + fmt(sc.family_cert.gamma, 6) +
                      ", period N=" + std::to_string(sc.period) + ", magnitude rate " + fmt(sc.target_rate));
  out.lines.push_back("mean algorithm cost: nag " + fmt(result.baseline_mean_cost, 8) + ", augmented " +
                      fmt(result.best_mean_cost, 8) + " after " + std::to_string(sc.cfg.epochs) + " epochs");
  out.lines.push_back("test envelope violations " + std::to_string(violations) + "/" + std::to_string(kTest) +
                      ", worst bound ratio " + fmt(worst));
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 6. Model predictive control.

Outcome model_predictive_control() {
  constexpr std::size_t kSeeds = 64;
  Outcome out;
  Digest digest;
  const MpcProblem mpc = double_integrator_mpc();

  // (a) step size.
  const double eta = mpc_step_size(mpc);
  const bool a_ok = std::abs(eta - 3.8e-5) <= 0.05 * 3.8e-5;
  out.lines.push_back(std::string("(a) ") + (a_ok ? "PASS" : "FAIL") + " step size " + fmt(eta, 6) +
                      " vs 3.8e-05 (tolerance 5%)");
  digest.add(eta);

  // (b) long-budget PGD against the exact first input, on the closed-loop
  // states visited by the exact controller.
  ClosedLoopConfig cfg;
  cfg.seed = 6;
  const std::vector<ClosedLoopRun> exact_runs = closed_loop_batch(mpc, exact_solver(), cfg, kSeeds);
  auto first_input_error = [&](std::size_t budget, std::size_t seeds, std::size_t stride) {
    std::vector<double> err(seeds, 0.0);
    const Eigen::Index m = mpc.input_dim();
    parallel_for(seeds, [&](std::size_t s) {
      const ClosedLoopRun& run = exact_runs[s];
      for (std::size_t t = 0; t < cfg.steps; t += stride) {
        const auto [qp, box] = build_stacked_mpc(mpc, run.states[t]);
        const Vector exact = constrained_minimizer(qp, box);
        const Vector approx = pgd_solver()(qp, box, Vector::Zero(qp.dim()), budget);
        err[s] = std::max(err[s], (approx.head(m) - exact.head(m)).cwiseAbs().maxCoeff());
      }
    });
    return err;
  };
  const std::vector<double> err2000 = first_input_error(2000, kSeeds, 1);
  const double worst2000 = *std::max_element(err2000.begin(), err2000.end());
  const bool b_ok = worst2000 <= 1e-6;
  out.lines.push_back(std::string("(b) ") + (b_ok ? "PASS" : "FAIL") + " budget 2000: max first-input error " +
                      fmt(worst2000) + " over " + std::to_string(kSeeds) + " x " + std::to_string(cfg.steps) +
                      " solves (limit 1e-06)");
  const std::vector<double> err_long = first_input_error(200000, 4, 10);
  const Curvature curv = curvature_constants(mpc.condensed_hessian());
  out.lines.push_back("    info: condensed Hessian kappa " + fmt(curv.kappa) + ", PGD contraction per step " +
                      fmt(1.0 - 1.0 / curv.kappa, 10) + "; budget 200000 on 4 seeds: max first-input error " +
                      fmt(*std::max_element(err_long.begin(), err_long.end())));
  digest.add(err2000);

  // (c) trained augmentation against plain projected gradient on matched seeds.
  MpcScenarioConfig mc;
  mc.seed = 6;
  const std::vector<TrainingInstance> train_set =
      mpc_training_instances(mpc, mc.samples, mc.x0_std, derive_seed(mc.seed, "acc/c6/train"));
  const TrainResult trained = train(train_set, mpc_train_config(mpc, mc));
  auto model = std::make_shared<const LearnedModel>(trained.model);
  const ClosedLoopSummary pgd = summarize(closed_loop_batch(mpc, pgd_solver(), cfg, kSeeds));
  const ClosedLoopSummary aug = summarize(closed_loop_batch(mpc, augmented_solver(model, mc.period), cfg, kSeeds));
  const ClosedLoopSummary exact = summarize(exact_runs);
  const bool c_ok = aug.mean <= pgd.mean;
  out.lines.push_back(std::string("(c) ") + (c_ok ? "PASS" : "FAIL") + " mean cumulative cost: pgd " +
                      fmt(pgd.mean, 6) + ", augmented " + fmt(aug.mean, 6) + ", exact " + fmt(exact.mean, 6) +
                      " (p90: " + fmt(pgd.p90, 5) + ", " + fmt(aug.p90, 5) + ", " + fmt(exact.p90, 5) + ")");
  out.lines.push_back("    training objective: pgd " + fmt(trained.baseline_mean_cost, 8) + ", augmented " +
                      fmt(trained.best_mean_cost, 8));
  digest.add(pgd.mean_curve);
  digest.add(aug.mean_curve);
  digest.add(exact.mean_curve);
  digest.add(trained.model.parameters());

  out.pass = a_ok && b_ok && c_ok;
  out.digest = digest.value();
  return out;
}

// ---------------------------------------------------------------------------
// 7. Composition and accumulated polynomial.

Outcome composition() {
  Outcome out;
  Digest digest;
  out.pass = true;
  const QuadraticProblem p = random_sc_quadratic(20, 100.0, derive_seed(7, "acc/c7/problem"));
  const Polytope box = Polytope::box(20, 0.5 * p.x_star.cwiseAbs().maxCoeff());
  for (const std::string id : {"gd", "nag", "prox", "pgd"}) {
    const BaselineSpec spec = make_baseline(id, p, box, 1.0);
    std::string line = id + ":";
    for (std::size_t n : {2u, 5u, 10u}) {
      const FixedPointReport r = fixed_point_identity(spec, n, 3, 7, 1e-12);
      if (!r.pass) out.pass = false;
      line += " N=" + std::to_string(n) + " residual " + fmt(r.fixed_residual, 3) + " probe " +
              fmt(r.worst_probe_ratio, 3) + (r.pass ? "" : " FAIL") + ";";
      digest.add(r.fixed_residual);
      digest.add(r.worst_probe_ratio);
    }
    out.lines.push_back(line);
  }
  RateCertificate linear;
  linear.poly_coeffs = {1.0, 1.0};
  linear.gamma = 0.5;
  linear.monotone = false;
  const double q = accumulated_poly_sum(linear, 1000);
  const double ratio = q / 1e6;
  const bool q_ok = std::abs(ratio - 0.5) <= 0.05 * 0.5;
  if (!q_ok) out.pass = false;
  out.lines.push_back("q(1000)/1000^2 = " + fmt(ratio, 6) + " (target 0.5 within 5%)");
  digest.add(q);
  out.digest = digest.value();
  return out;
}

struct Criterion {
  int id;
  std::string name;
  double time_limit;
  std::function<Outcome()> run;
};

Outcome timed(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o = c.run();
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "baseline rate certificates", 30.0, baseline_certificates},
      {2, "degradation under sparse injection", 60.0, injection_degradation},
      {3, "completeness round trip", 60.0, completeness},
      {4, "feasibility correction", 60.0, feasibility},
      {5, "regression family", 600.0, regression_family},
      {6, "model predictive control", 600.0, model_predictive_control},
      {7, "fixed-point identity and accumulated polynomial", 60.0, composition},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  const bool all_selected = selected.empty();

  std::map<int, std::uint64_t> first_digest;
  bool overall = true;
  for (const Criterion& c : all) {
    if (!all_selected && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = timed(c);
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("exception: ") + e.what());
    }
    const bool in_time = within_time(o.seconds, c.time_limit, o.lines);
    const bool pass = o.pass && in_time;
    overall = overall && pass;
    first_digest[c.id] = o.digest;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.name << "\n";
    for (const std::string& line : o.lines) std::cout << "    " << line << "\n";
    std::cout << std::flush;
  }

  if (all_selected || selected.count(8)) {
    // Second pass with identical seeds; every digest must match bit for bit.
    std::vector<std::string> lines;
    bool same = true;
    for (const Criterion& c : all) {
      if (!first_digest.count(c.id)) continue;
      std::uint64_t again = 0;
      try {
        again = c.run().digest;
      } catch (const std::exception& e) {
        lines.push_back("criterion " + std::to_string(c.id) + " rerun threw: " + e.what());
        same = false;
        continue;
      }
      const bool eq = again == first_digest[c.id];
      same = same && eq;
      lines.push_back("criterion " + std::to_string(c.id) + ": " + hex(first_digest[c.id]) + " / " + hex(again) +
                      (eq ? "" : "  MISMATCH"));
    }
    if (first_digest.empty()) {
      lines.push_back("no criteria selected to rerun");
      same = false;
    }
    overall = overall && same;
    std::cout << "criterion 8: " << (same ? "PASS" : "FAIL") << "  byte-reproducible reruns\n";
    for (const std::string& line : lines) std::cout << "    " << line << "\n";
  }
  std::cout << (overall ? "acceptance: all criteria passed" : "acceptance: at least one criterion failed") << "\n";
  return overall ? 0 : 1;
}

#include "convaug/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "convaug/augment.hpp"
#include "convaug/baselines.hpp"
#include "convaug/experiments.hpp"
#include "convaug/learned.hpp"
#include "convaug/mpc.hpp"
#include "convaug/parallel.hpp"
#include "convaug/problems.hpp"
#include "convaug/rng.hpp"
#include "convaug/verify.hpp"

namespace convaug::cli {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("key '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const Json& j) {
  if (!j.contains("seed")) return 0;
  const Json& v = j.at("seed");
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("key 'seed' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

fs::path resolve(const Invocation& inv, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : inv.base_dir / p;
}

fs::path output_dir(const Invocation& inv) {
  const fs::path out(get<std::string>(inv.config, "out", "out"));
  fs::create_directories(out);
  return out;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

QuadraticProblem build_problem(const Invocation& inv, const Json& spec, std::uint64_t seed) {
  const std::string kind = get<std::string>(spec, "kind", "random");
  if (kind == "random") {
    check_keys(spec, {"kind", "dim", "kappa", "mu", "seed"}, "problem");
    const auto dim = static_cast<Eigen::Index>(get_count(spec, "dim", 20));
    if (dim < 1) throw ConfigError("problem: dim must be positive");
    const double kappa = get<double>(spec, "kappa", 100.0);
    if (!(kappa >= 1.0)) throw ConfigError("problem: kappa must be >= 1");
    const double mu = get<double>(spec, "mu", 1.0);
    if (!(mu > 0.0)) throw ConfigError("problem: mu must be positive");
    const std::uint64_t s = spec.contains("seed") ? get_seed(spec) : derive_seed(seed, "cli/problem");
    return random_sc_quadratic(dim, kappa, s, mu);
  }
  if (kind == "quadratic") {
    check_keys(spec, {"kind", "hessian", "linear", "offset", "seed", "design", "target", "x_star", "mu", "beta",
                      "schema_version"},
               "problem");
    return quadratic_from_json(spec);
  }
  if (kind == "file") {
    check_keys(spec, {"kind", "path"}, "problem");
    if (!spec.contains("path")) throw ConfigError("problem: 'file' needs a 'path'");
    Json inner = read_json(resolve(inv, spec.at("path").get<std::string>()));
    inner["kind"] = inner.value("kind", std::string("quadratic"));
    if (inner["kind"] == "file") throw ConfigError("problem: nested file reference");
    Invocation nested{inv.config, resolve(inv, spec.at("path").get<std::string>()).parent_path()};
    return build_problem(nested, inner, seed);
  }
  if (kind == "regression") {
    check_keys(spec, {"kind", "dim", "kappa", "noise_std_A", "b_mean", "noise_std_b", "family_seed", "index"},
               "problem");
    RegressionFamilyConfig fc;
    fc.dim = static_cast<Eigen::Index>(get_count(spec, "dim", 30));
    fc.kappa = get<double>(spec, "kappa", 1e4);
    fc.noise_std_A = get<double>(spec, "noise_std_A", fc.noise_std_A);
    fc.b_mean = get<double>(spec, "b_mean", fc.b_mean);
    fc.noise_std_b = get<double>(spec, "noise_std_b", fc.noise_std_b);
    fc.seed = spec.contains("family_seed") ? get<std::uint64_t>(spec, "family_seed", 0) : seed;
    return RegressionFamily(fc).sample("cli", get_count(spec, "index", 0));
  }
  throw ConfigError("problem: unknown kind '" + kind + "'");
}

std::unique_ptr<Generator> build_generator(const Invocation& inv, const Json& spec, const BaselineSpec& baseline,
                                           double& w_constant, double& w_rate, const Vector& xi0,
                                           std::size_t& period) {
  const std::string kind = get<std::string>(spec, "kind", "none");
  if (kind == "decaying-noise") {
    check_keys(spec, {"kind", "scale", "rate", "period", "seed"}, "perturbation");
    const double scale = get<double>(spec, "scale", 1.0);
    const double rate = get<double>(spec, "rate", 0.9);
    if (!(scale >= 0.0) || !(rate >= 0.0 && rate < 1.0))
      throw ConfigError("perturbation: need scale >= 0 and rate in [0, 1)");
    period = get_count(spec, "period", 1);
    w_constant = scale;
    w_rate = rate;
    return std::make_unique<DecayingNoiseGenerator>(scale, rate, get_seed(spec));
  }
  if (kind == "learned") {
    check_keys(spec, {"kind", "checkpoint", "period"}, "perturbation");
    if (!spec.contains("checkpoint")) throw ConfigError("perturbation: 'learned' needs a 'checkpoint'");
    const Json ckpt = read_json(resolve(inv, spec.at("checkpoint").get<std::string>()));
    auto model = std::make_shared<const LearnedModel>(model_from_json(ckpt));
    period = get_count(spec, "period", ckpt.value("injection_period", std::size_t{1}));
    w_constant = model->envelope_constant() * impulse_matrix(baseline, xi0, model->shape).norm();
    w_rate = model->shape.target_rate;
    return std::make_unique<LearnedGenerator>(model);
  }
  throw ConfigError("perturbation: unknown kind '" + kind + "'");
}

VerificationReport rate_report(const std::vector<double>& trace, double certified) {
  VerificationReport r;
  r.check = "rate";
  try {
    const RateEstimate est = estimate_rate(trace);
    r.gamma_hat = est.rate;
    r.worst_violation = est.rate - certified;
    r.pass = est.rate <= certified + 0.01;
  } catch (const InsufficientData&) {
    r.pass = true;
  }
  return r;
}

Json report_document(const std::string& command, const std::vector<VerificationReport>& reports, Json extra) {
  Json checks = Json::array();
  bool pass = true;
  for (const auto& r : reports) {
    checks.push_back(to_json(r));
    pass = pass && r.pass;
  }
  Json doc{{"schema_version", kSchemaVersion}, {"command", command}, {"pass", pass}, {"checks", checks}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  return doc;
}

void print_reports(std::ostream& log, const std::vector<VerificationReport>& reports) {
  for (const auto& r : reports) {
    log << (r.pass ? "PASS " : "FAIL ") << r.check;
    if (r.gamma_hat) log << " gamma_hat=" << format_double(*r.gamma_hat);
    log << " worst=" << format_double(r.worst_violation) << "\n";
  }
}

bool all_pass(const std::vector<VerificationReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

std::string sweep_csv(const RateCertificate& cert, const Json& periods) {
  std::ostringstream os;
  os << "N,rho,rate,degree,valid,min_period\n";
  const std::size_t minimal = min_valid_period(cert);
  for (const auto& item : periods) {
    if (!item.is_number_integer() || item.get<long long>() < 1)
      throw ConfigError("period_sweep: entries must be positive integers");
    const auto n = item.get<std::size_t>();
    try {
      const DegradedRate d = degraded_rate(cert, n);
      os << n << ',' << format_double(d.rho) << ',' << format_double(d.rate) << ',' << d.degree << ",1,"
         << minimal << '\n';
    } catch (const InvalidPeriod& e) {
      const double rho = cert.p(static_cast<double>(n)) * std::pow(cert.gamma, static_cast<double>(n));
      os << n << ',' << format_double(rho) << ",," << cert.degree() + 1 << ",0," << e.minimal_period() << '\n';
    }
  }
  return os.str();
}

}  // namespace

int cmd_run(const Invocation& inv, std::ostream& log) {
  const Json& c = inv.config;
  check_keys(c, {"command", "seed", "out", "problem", "baseline", "perturbation", "steps", "checks", "prox_c",
                 "box_bound", "period_sweep", "x0"},
             "run");
  const std::uint64_t seed = get_seed(c);
  const QuadraticProblem problem = build_problem(inv, c.value("problem", Json{{"kind", "random"}}), seed);
  std::optional<Polytope> box;
  if (c.contains("box_bound")) {
    const double bound = get<double>(c, "box_bound", 1.0);
    if (!(bound > 0.0)) throw ConfigError("box_bound must be positive");
    box = Polytope::box(problem.dim(), bound);
  }
  const BaselineSpec baseline =
      make_baseline(get<std::string>(c, "baseline", "gd"), problem, box, get<double>(c, "prox_c", 1.0));
  const std::size_t steps = get_count(c, "steps", 200);

  Vector x0;
  if (c.contains("x0")) {
    x0 = vector_from_json(c.at("x0"));
    if (x0.size() != problem.dim()) throw ConfigError("x0 has the wrong length");
  } else {
    Rng rng(seed, "cli/x0");
    x0 = problem.x_star + (1.0 + problem.x_star.norm()) * rng.unit_vector(problem.dim());
  }
  if (baseline.constraints) x0 = project_polytope(x0, *baseline.constraints);
  const Vector xi0 = baseline.lift(x0);

  const Json pert = c.value("perturbation", Json{{"kind", "none"}});
  const bool perturbed = get<std::string>(pert, "kind", "none") != "none";
  if (!perturbed) check_keys(pert, {"kind"}, "perturbation");
  double w_constant = 0.0, w_rate = 0.0;
  std::size_t period = 1;
  std::unique_ptr<PerturbationSource> source;
  if (perturbed) {
    auto gen = build_generator(inv, pert, baseline, w_constant, w_rate, xi0, period);
    source = std::make_unique<ScheduledPerturbation>(period, std::move(gen));
  } else {
    source = std::make_unique<NoPerturbation>();
  }
  const RateCertificate& cert = baseline.cert();
  std::optional<DegradedRate> degraded;
  if (perturbed) degraded = degraded_rate(cert, period);

  RunOptions options;
  options.problem_id = problem.kind;
  if (perturbed && baseline.constraints) options.correction = baseline.constraints;
  const AugmentedRun run = run_augmented(baseline, *source, xi0, steps, options);

  const fs::path out = output_dir(inv);
  {
    std::ostringstream csv;
    write_run_csv(csv, run);
    write_text(out / "run.csv", csv.str());
  }
  write_json(out / "run.json", to_json(run));
  if (c.contains("period_sweep")) {
    if (!c.at("period_sweep").is_array()) throw ConfigError("period_sweep must be an array");
    const std::string table = sweep_csv(cert, c.at("period_sweep"));
    write_text(out / "degraded_rates.csv", table);
    log << table;
  }

  std::vector<std::string> checks;
  if (c.contains("checks")) {
    checks = get<std::vector<std::string>>(c, "checks", {});
  } else {
    checks = perturbed ? std::vector<std::string>{"envelope", "rate"}
                       : std::vector<std::string>{"envelope", "rate", "regularity"};
  }
  std::vector<VerificationReport> reports;
  const double d0 = run.distances.front();
  for (const std::string& name : checks) {
    if (name == "envelope") {
      VerificationReport r;
      r.trace_file = "run.csv";
      if (perturbed) {
        r.check = "injection-envelope";
        const EnvelopeCheck e = check_injection_envelope(run.distances, cert, period, w_constant, w_rate);
        r.pass = e.pass;
        r.worst_violation = e.worst_ratio;
        r.worst_index = e.worst_index;
        r.envelope = DecayEnvelope{{1.0, 1.0 / static_cast<double>(period)},
                                   std::pow(std::max(degraded->rho, w_rate), 1.0 / static_cast<double>(period))};
      } else {
        r.check = "envelope";
        r.envelope = DecayEnvelope::from_certificate(cert);
        const EnvelopeCheck e = check_envelope(run.distances, *r.envelope);
        r.pass = e.pass;
        r.worst_violation = e.worst_ratio;
        r.worst_index = e.worst_index;
      }
      reports.push_back(r);
    } else if (name == "rate") {
      const double target =
          perturbed ? std::pow(std::max(degraded->rho, w_rate), 1.0 / static_cast<double>(period)) : cert.gamma;
      VerificationReport r = rate_report(run.distances, target);
      r.trace_file = "run.csv";
      reports.push_back(r);
    } else if (name == "regularity") {
      if (perturbed) throw ConfigError("checks: regularity applies to unperturbed runs");
      VerificationReport r;
      r.check = "regularity";
      r.envelope = DecayEnvelope::from_certificate(cert).scaled((1.0 + baseline.lipschitz) * d0);
      r.pass = check_regularity(run, *r.envelope);
      r.trace_file = "run.csv";
      reports.push_back(r);
    } else {
      throw ConfigError("checks: unknown check '" + name + "'");
    }
  }
  Json extra{{"baseline", baseline.name}, {"certificate", to_json(cert)}, {"steps", steps}};
  if (perturbed) extra["period"] = period;
  write_json(out / "report.json", report_document("run", reports, extra));
  print_reports(log, reports);
  return all_pass(reports) ? kExitOk : kExitCheckFailed;
}

int cmd_train(const Invocation& inv, std::ostream& log) {
  const Json& c = inv.config;
  check_keys(c, {"command", "seed", "out", "scenario", "epochs", "samples", "steps", "budget", "population",
                 "sigma", "learning_rate", "optimizer", "modes", "hidden", "impulse", "tau", "family",
                 "test_instances", "x0_std", "period", "divergence_penalty"},
             "train");
  const std::uint64_t seed = get_seed(c);
  const std::string scenario = get<std::string>(c, "scenario", "regression");
  std::vector<TrainingInstance> instances;
  TrainConfig cfg;
  Json summary{{"schema_version", kSchemaVersion}, {"scenario", scenario}};
  std::optional<RegressionFamily> family;

  if (scenario == "regression") {
    if (c.contains("budget")) throw ConfigError("train: 'budget' applies to the mpc scenario");
    RegressionScenarioConfig rc;
    const Json fam = c.value("family", Json::object());
    check_keys(fam, {"dim", "kappa", "noise_std_A", "b_mean", "noise_std_b"}, "family");
    rc.family.dim = static_cast<Eigen::Index>(get_count(fam, "dim", 30));
    rc.family.kappa = get<double>(fam, "kappa", 1e4);
    rc.family.noise_std_A = get<double>(fam, "noise_std_A", rc.family.noise_std_A);
    rc.family.b_mean = get<double>(fam, "b_mean", rc.family.b_mean);
    rc.family.noise_std_b = get<double>(fam, "noise_std_b", rc.family.noise_std_b);
    rc.family.seed = derive_seed(seed, "cli/family");
    rc.samples = get_count(c, "samples", 32);
    rc.steps = get_count(c, "steps", 500);
    rc.epochs = get_count(c, "epochs", 50);
    rc.seed = seed;
    rc.tau = get<double>(c, "tau", 0.0);
    if (c.contains("period")) throw ConfigError("train: the regression period follows from 'tau'");
    family.emplace(rc.family);
    RegressionScenario sc = make_regression_scenario(*family, rc);
    instances = std::move(sc.train);
    cfg = sc.cfg;
    summary["family_constant"] = sc.family_cert.p(0.0);
    summary["family_gamma"] = sc.family_cert.gamma;
  } else if (scenario == "mpc") {
    if (c.contains("steps") || c.contains("family") || c.contains("tau"))
      throw ConfigError("train: 'steps', 'family' and 'tau' apply to the regression scenario");
    MpcScenarioConfig mc;
    mc.samples = get_count(c, "samples", 32);
    mc.budget = get_count(c, "budget", 100);
    mc.epochs = get_count(c, "epochs", 50);
    mc.x0_std = get<double>(c, "x0_std", 0.5);
    mc.seed = seed;
    mc.period = get_count(c, "period", 1);
    const MpcProblem mpc = double_integrator_mpc();
    instances = mpc_training_instances(mpc, mc.samples, mc.x0_std, derive_seed(seed, "cli/mpc-train"));
    cfg = mpc_train_config(mpc, mc);
  } else {
    throw ConfigError("train: unknown scenario '" + scenario + "'");
  }
  cfg.population = get_count(c, "population", cfg.population);
  cfg.sigma = get<double>(c, "sigma", cfg.sigma);
  cfg.learning_rate = get<double>(c, "learning_rate", cfg.learning_rate);
  cfg.optimizer = get<std::string>(c, "optimizer", cfg.optimizer);
  cfg.modes = get_count(c, "modes", cfg.modes);
  cfg.hidden = get_count(c, "hidden", cfg.hidden);
  cfg.divergence_penalty = get<double>(c, "divergence_penalty", cfg.divergence_penalty);
  if (c.contains("impulse")) cfg.impulse = impulse_mode_from_string(get<std::string>(c, "impulse", ""));

  const TrainResult result = train(instances, cfg);
  const fs::path out = output_dir(inv);
  Json ckpt = to_json(result.model);
  ckpt["injection_period"] = cfg.injection_period;
  write_json(out / "checkpoint.json", ckpt);
  {
    std::ostringstream csv;
    write_training_log(csv, result.log);
    write_text(out / "training_log.csv", csv.str());
  }
  summary["epochs"] = cfg.epochs;
  summary["samples"] = instances.size();
  summary["rollout_steps"] = cfg.rollout_steps;
  summary["injection_period"] = cfg.injection_period;
  summary["target_rate"] = cfg.target_rate;
  summary["baseline_mean_cost"] = result.baseline_mean_cost;
  summary["best_mean_cost"] = result.best_mean_cost;
  summary["envelope_constant"] = result.model.envelope_constant();

  int code = kExitOk;
  const std::size_t tests = get_count(c, "test_instances", 0);
  if (tests > 0) {
    if (!family) throw ConfigError("train: 'test_instances' applies to the regression scenario");
    auto model = std::make_shared<const LearnedModel>(result.model);
    std::vector<InjectionEnvelopeResult> checks(tests);
    parallel_for(tests, [&](std::size_t i) {
      checks[i] = learned_envelope_check(model, nag_instance(family->sample("test", i), cfg.rollout_steps),
                                         cfg.injection_period, cfg.rollout_steps);
    });
    std::size_t violations = 0;
    double worst = 0.0;
    for (const auto& r : checks) {
      violations += r.check.pass ? 0 : 1;
      worst = std::max(worst, r.check.worst_ratio);
    }
    summary["test_instances"] = tests;
    summary["envelope_violations"] = violations;
    summary["worst_envelope_ratio"] = worst;
    if (violations > 0) code = kExitCheckFailed;
  }
  write_json(out / "train_summary.json", summary);
  log << "baseline mean cost " << format_double(result.baseline_mean_cost) << "\n"
      << "trained mean cost  " << format_double(result.best_mean_cost) << "\n";
  return code;
}

int cmd_mpc(const Invocation& inv, std::ostream& log) {
  const Json& c = inv.config;
  check_keys(c, {"command", "seed", "out", "solver", "checkpoint", "period", "seeds", "loop_steps", "budget",
                 "noise_std", "x0_std", "warm_start"},
             "mpc");
  const MpcProblem mpc = double_integrator_mpc();
  ClosedLoopConfig cfg;
  cfg.seed = get_seed(c);
  cfg.steps = get_count(c, "loop_steps", 30);
  cfg.budget = get_count(c, "budget", 100);
  cfg.noise_std = get<double>(c, "noise_std", 0.05);
  cfg.x0_std = get<double>(c, "x0_std", 0.5);
  cfg.warm_start = get<bool>(c, "warm_start", false);
  cfg.validate();
  const std::size_t seeds = get_count(c, "seeds", 64);
  const std::string solver_id = get<std::string>(c, "solver", "pgd");
  MpcSolver solver;
  if (solver_id == "pgd") {
    solver = pgd_solver();
  } else if (solver_id == "exact") {
    solver = exact_solver();
  } else if (solver_id == "augmented") {
    if (!c.contains("checkpoint")) throw ConfigError("mpc: the augmented solver needs a 'checkpoint'");
    const Json ckpt = read_json(resolve(inv, get<std::string>(c, "checkpoint", "")));
    auto model = std::make_shared<const LearnedModel>(model_from_json(ckpt));
    solver = augmented_solver(model, get_count(c, "period", ckpt.value("injection_period", std::size_t{1})));
  } else {
    throw ConfigError("mpc: unknown solver '" + solver_id + "'");
  }
  const std::vector<ClosedLoopRun> runs = closed_loop_batch(mpc, solver, cfg, seeds);
  const ClosedLoopSummary summary = summarize(runs);
  const fs::path out = output_dir(inv);
  fs::create_directories(out / "runs");
  double violation = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ostringstream csv;
    write_closed_loop_csv(csv, runs[i]);
    std::ostringstream name;
    name << "run_" << std::setw(4) << std::setfill('0') << i << ".csv";
    write_text(out / "runs" / name.str(), csv.str());
    violation = std::max(violation, runs[i].max_input_violation);
  }
  Json doc = to_json(summary);
  doc["solver"] = solver_id;
  doc["step_size"] = mpc_step_size(mpc);
  doc["budget"] = cfg.budget;
  doc["loop_steps"] = cfg.steps;
  doc["noise_std"] = cfg.noise_std;
  doc["max_input_violation"] = violation;
  write_json(out / "summary.json", doc);
  log << solver_id << " mean cumulative cost " << format_double(summary.mean) << " p90 "
      << format_double(summary.p90) << "\n";
  return violation <= 1e-10 ? kExitOk : kExitCheckFailed;
}

int cmd_reconstruct(const Invocation& inv, std::ostream& log) {
  const Json& c = inv.config;
  check_keys(c, {"command", "seed", "out", "problem", "baseline", "target", "steps", "prox_c"}, "reconstruct");
  const std::uint64_t seed = get_seed(c);
  const QuadraticProblem problem = build_problem(inv, c.value("problem", Json{{"kind", "random"}}), seed);
  const double prox_c = get<double>(c, "prox_c", 1.0);
  const BaselineSpec base = make_baseline(get<std::string>(c, "baseline", "gd"), problem, std::nullopt, prox_c);
  const BaselineSpec target = make_baseline(get<std::string>(c, "target", "nag"), problem, std::nullopt, prox_c);
  if (base.state_dim != base.decision_dim)
    throw ConfigError("reconstruct: the baseline state must be the decision variable");
  const std::size_t steps = get_count(c, "steps", 300);

  Rng rng(seed, "cli/x0");
  const Vector x0 = problem.x_star + (1.0 + problem.x_star.norm()) * rng.unit_vector(problem.dim());
  NoPerturbation none;
  const AugmentedRun realized = run_augmented(target, none, target.lift(x0), steps);
  const std::vector<Vector>& chi = realized.outputs;
  const std::vector<Vector> v = reconstruct_innovation(base, chi);
  ReplayPerturbation replay(v);
  const AugmentedRun replayed = run_augmented(base, replay, chi.front(), steps);

  double replay_error = 0.0;
  for (std::size_t t = 0; t < chi.size(); ++t) {
    const double scale = std::max(chi[t].norm(), 1e-300);
    replay_error = std::max(replay_error, (replayed.outputs[t] - chi[t]).norm() / scale);
  }
  const double gamma = base.cert().gamma;
  double m = 0.0;
  for (std::size_t t = 0; t < chi.size(); ++t)
    m = std::max(m, (chi[t] - problem.x_star).norm() / std::pow(gamma, static_cast<double>(t)));
  const std::vector<double> norms = signal_norms(v);
  const SignalFit fit = fit_signal(norms, DecayEnvelope::constant(1.0, gamma), (1.0 + base.lipschitz) * m);

  std::vector<VerificationReport> reports;
  VerificationReport r1;
  r1.check = "replay";
  r1.worst_violation = replay_error;
  r1.pass = replay_error <= 1e-9;
  reports.push_back(r1);
  VerificationReport r2;
  r2.check = "innovation-membership";
  r2.envelope = DecayEnvelope::constant((1.0 + base.lipschitz) * m, gamma);
  r2.worst_violation = fit.constant;
  r2.worst_index = fit.worst_index;
  r2.pass = fit.pass;
  reports.push_back(r2);

  const fs::path out = output_dir(inv);
  {
    std::ostringstream csv;
    csv << "t,v_norm\n";
    for (std::size_t t = 0; t < norms.size(); ++t) csv << t << ',' << format_double(norms[t]) << '\n';
    write_text(out / "innovation.csv", csv.str());
  }
  write_json(out / "report.json",
             report_document("reconstruct", reports,
                             Json{{"baseline", base.name}, {"target", target.name}, {"replay_error", replay_error},
                                  {"max_innovation", norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end())}}));
  log << "replay error " << format_double(replay_error) << "\n";
  print_reports(log, reports);
  return all_pass(reports) ? kExitOk : kExitCheckFailed;
}

int cmd_verify(const Invocation& inv, std::ostream& log) {
  const Json& c = inv.config;
  check_keys(c, {"command", "seed", "out", "trace", "envelope"}, "verify");
  if (!c.contains("trace") || !c.contains("envelope")) throw ConfigError("verify: needs 'trace' and 'envelope'");
  const std::string trace_name = get<std::string>(c, "trace", "");
  std::ifstream in(resolve(inv, trace_name));
  if (!in) throw ConfigError("verify: cannot open trace '" + trace_name + "'");
  const std::vector<double> trace = read_distance_column(in);
  DecayEnvelope env;
  try {
    env = envelope_from_json(c.at("envelope"));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("verify: bad envelope: ") + e.what());
  }
  const EnvelopeCheck e = check_envelope(trace, env);
  VerificationReport r;
  r.check = "envelope";
  r.pass = e.pass;
  r.worst_violation = e.worst_ratio;
  r.worst_index = e.worst_index;
  r.envelope = env;
  r.trace_file = trace_name;
  try {
    r.gamma_hat = estimate_rate(trace).rate;
  } catch (const InsufficientData&) {
  }
  const std::vector<VerificationReport> reports{r};
  if (c.contains("out")) write_json(output_dir(inv) / "report.json", report_document("verify", reports, Json::object()));
  print_reports(log, reports);
  return all_pass(reports) ? kExitOk : kExitCheckFailed;
}

int dispatch(const std::string& command, const Invocation& inv, std::ostream& log) {
  try {
    if (inv.config.contains("command") && inv.config.at("command") != command)
      throw ConfigError("config is for command '" + inv.config.at("command").get<std::string>() + "'");
    if (command == "run") return cmd_run(inv, log);
    if (command == "train") return cmd_train(inv, log);
    if (command == "mpc") return cmd_mpc(inv, log);
    if (command == "reconstruct") return cmd_reconstruct(inv, log);
    if (command == "verify") return cmd_verify(inv, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const InvalidPeriod& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const InvalidArgument& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const PreconditionError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const UnsupportedProblem& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const DegenerateInstance& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const Json::exception& e) {
    log << "error: invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Convergence-preserving augmentation of first-order optimizers"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps, budget;
  for (const char* name : {"run", "train", "mpc", "reconstruct", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "Root seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--steps", steps, "Iterations (loop steps for mpc)");
    sub->add_option("--budget", budget, "Optimizer iterations per solve");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Invocation inv;
  try {
    if (!config_path.empty()) {
      inv.config = read_json(config_path);
      inv.base_dir = fs::path(config_path).parent_path();
      if (inv.base_dir.empty()) inv.base_dir = ".";
    }
    if (!inv.config.is_object()) throw ConfigError("config must be a JSON object");
    if (seed) inv.config["seed"] = *seed;
    if (!out.empty()) inv.config["out"] = out;
    if (steps) inv.config[command == "mpc" ? "loop_steps" : "steps"] = *steps;
    if (budget) inv.config["budget"] = *budget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  return dispatch(command, inv, std::cerr);
}

}  // namespace convaug::cli

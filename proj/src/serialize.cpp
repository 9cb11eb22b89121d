#include "convaug/serialize.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace convaug {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a matrix (array of rows)");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) throw InvalidArgument("matrix rows have different lengths");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json to_json(const QuadraticProblem& p) {
  Json j{{"schema_version", kSchemaVersion},
         {"kind", p.kind},
         {"hessian", to_json(p.hessian)},
         {"linear", to_json(p.linear)},
         {"offset", p.offset},
         {"x_star", to_json(p.x_star)},
         {"mu", p.mu},
         {"beta", p.beta},
         {"seed", p.seed}};
  if (p.design) j["design"] = to_json(*p.design);
  if (p.target) j["target"] = to_json(*p.target);
  return j;
}

QuadraticProblem quadratic_from_json(const Json& j) {
  if (!j.contains("hessian") || !j.contains("linear"))
    throw InvalidArgument("quadratic problem needs 'hessian' and 'linear'");
  QuadraticProblem p = make_quadratic(matrix_from_json(j.at("hessian")), vector_from_json(j.at("linear")),
                                      j.value("offset", 0.0), j.value("kind", std::string("quadratic")),
                                      j.value("seed", std::uint64_t{0}));
  if (j.contains("design")) p.design = matrix_from_json(j.at("design"));
  if (j.contains("target")) p.target = vector_from_json(j.at("target"));
  return p;
}

Json to_json(const RateCertificate& cert) {
  return Json{{"poly_coeffs", cert.poly_coeffs}, {"gamma", cert.gamma}, {"monotone", cert.monotone}};
}

Json to_json(const DecayEnvelope& envelope) {
  return Json{{"poly_coeffs", envelope.poly_coeffs}, {"gamma", envelope.gamma}};
}

DecayEnvelope envelope_from_json(const Json& j) {
  for (const auto& [key, value] : j.items())
    if (key != "poly_coeffs" && key != "gamma") throw InvalidArgument("unknown envelope key '" + key + "'");
  DecayEnvelope env;
  env.gamma = j.at("gamma").get<double>();
  if (j.contains("poly_coeffs")) env.poly_coeffs = j.at("poly_coeffs").get<std::vector<double>>();
  env.validate();
  return env;
}

Json to_json(const AugmentedRun& run) {
  Json states = Json::array(), innovations = Json::array();
  for (const auto& s : run.states) states.push_back(to_json(s));
  for (const auto& v : run.innovations) innovations.push_back(to_json(v));
  Json feasible = Json::array();
  for (char f : run.feasible) feasible.push_back(f != 0);
  return Json{{"schema_version", kSchemaVersion},
              {"problem_id", run.problem_id},
              {"baseline_id", run.baseline_id},
              {"source_kind", run.source_kind},
              {"steps", run.steps()},
              {"states", std::move(states)},
              {"innovations", std::move(innovations)},
              {"distances", run.distances},
              {"feasible", std::move(feasible)},
              {"correction_warnings", run.correction_warnings}};
}

void write_run_csv(std::ostream& out, const AugmentedRun& run) {
  const Eigen::Index n = run.states.empty() ? 0 : run.states.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",s" << i;
  out << ",v_norm,dist,feasible\n";
  for (std::size_t t = 0; t < run.states.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(run.states[t][i]);
    const double vn = t < run.innovations.size() ? run.innovations[t].norm() : 0.0;
    out << ',' << format_double(vn) << ',' << format_double(run.distances[t]) << ','
        << (run.feasible[t] ? 1 : 0) << '\n';
  }
}

std::vector<double> read_distance_column(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("trace file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "dist") col = i;
  if (col == header.size()) throw InvalidArgument("trace file has no 'dist' column");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    bool found = false;
    while (std::getline(ss, cell, ',')) {
      if (i++ == col) {
        try {
          out.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw InvalidArgument("trace file has a malformed 'dist' entry");
        }
        found = true;
        break;
      }
    }
    if (!found) throw InvalidArgument("trace file row is missing the 'dist' column");
  }
  return out;
}

Json to_json(const VerificationReport& r) {
  Json j{{"check", r.check},
         {"pass", r.pass},
         {"worst_violation", r.worst_violation},
         {"worst_index", r.worst_index},
         {"trace_file", r.trace_file}};
  j["gamma_hat"] = r.gamma_hat ? Json(*r.gamma_hat) : Json(nullptr);
  j["envelope"] = r.envelope ? to_json(*r.envelope) : Json(nullptr);
  return j;
}

Json to_json(const LearnedModel& model) {
  const MagnitudeUnit& m = model.magnitude;
  const DirectionUnit& d = model.direction;
  std::vector<double> moduli;
  for (std::size_t j = 0; j < m.modes(); ++j) moduli.push_back(std::abs(m.eigenvalue(j)));
  return Json{
      {"schema_version", kSchemaVersion},
      {"target_rate", m.target_rate},
      {"dims",
       {{"blocks", model.shape.blocks},
        {"modes", model.shape.modes},
        {"hidden", model.shape.hidden},
        {"impulse", to_string(model.shape.impulse)}}},
      {"magnitude",
       {{"raw_modulus", to_json(m.raw_modulus)},
        {"mode_moduli", moduli},
        {"phase", to_json(m.phase)},
        {"B_re", to_json(m.B_re)},
        {"B_im", to_json(m.B_im)},
        {"C_re", to_json(m.C_re)},
        {"C_im", to_json(m.C_im)},
        {"passthrough", to_json(m.passthrough)}}},
      {"direction",
       {{"W_z", to_json(d.W_z)}, {"W_r", to_json(d.W_r)}, {"W_h", to_json(d.W_h)},
        {"U_z", to_json(d.U_z)}, {"U_r", to_json(d.U_r)}, {"U_h", to_json(d.U_h)},
        {"b_z", to_json(d.b_z)}, {"b_r", to_json(d.b_r)}, {"b_h", to_json(d.b_h)},
        {"W_o", to_json(d.W_o)}, {"b_o", to_json(d.b_o)},
        {"feature_mean", to_json(d.feature_mean)}, {"feature_scale", to_json(d.feature_scale)}}},
      {"envelope_constant", model.envelope_constant()}};
}

namespace {

void assign(Matrix& dst, const Json& j, const char* key) {
  const Matrix m = matrix_from_json(j.at(key));
  if (m.rows() != dst.rows() || m.cols() != dst.cols())
    throw InvalidArgument(std::string("checkpoint: '") + key + "' has the wrong shape");
  dst = m;
}

void assign(Vector& dst, const Json& j, const char* key) {
  const Vector v = vector_from_json(j.at(key));
  if (v.size() != dst.size()) throw InvalidArgument(std::string("checkpoint: '") + key + "' has the wrong length");
  dst = v;
}

}  // namespace

LearnedModel model_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw InvalidArgument("checkpoint: unsupported schema version");
    ModelShape shape;
    const Json& dims = j.at("dims");
    shape.blocks = dims.at("blocks").get<std::size_t>();
    shape.modes = dims.at("modes").get<std::size_t>();
    shape.hidden = dims.at("hidden").get<std::size_t>();
    shape.impulse = impulse_mode_from_string(dims.at("impulse").get<std::string>());
    shape.target_rate = j.at("target_rate").get<double>();
    LearnedModel model = LearnedModel::initialize(shape, 0);
    MagnitudeUnit& m = model.magnitude;
    const Json& mj = j.at("magnitude");
    assign(m.raw_modulus, mj, "raw_modulus");
    assign(m.phase, mj, "phase");
    assign(m.B_re, mj, "B_re");
    assign(m.B_im, mj, "B_im");
    assign(m.C_re, mj, "C_re");
    assign(m.C_im, mj, "C_im");
    assign(m.passthrough, mj, "passthrough");
    DirectionUnit& d = model.direction;
    const Json& dj = j.at("direction");
    assign(d.W_z, dj, "W_z");
    assign(d.W_r, dj, "W_r");
    assign(d.W_h, dj, "W_h");
    assign(d.U_z, dj, "U_z");
    assign(d.U_r, dj, "U_r");
    assign(d.U_h, dj, "U_h");
    assign(d.b_z, dj, "b_z");
    assign(d.b_r, dj, "b_r");
    assign(d.b_h, dj, "b_h");
    assign(d.W_o, dj, "W_o");
    assign(d.b_o, dj, "b_o");
    assign(d.feature_mean, dj, "feature_mean");
    assign(d.feature_scale, dj, "feature_scale");
    return model;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,mean_cost,best_cost,envelope_constant\n";
  for (const auto& e : log)
    out << e.epoch << ',' << format_double(e.mean_cost) << ',' << format_double(e.best_cost) << ','
        << format_double(e.envelope_constant) << '\n';
}

void write_closed_loop_csv(std::ostream& out, const ClosedLoopRun& run) {
  const Eigen::Index n = run.states.empty() ? 0 : run.states.front().size();
  const Eigen::Index m = run.inputs.empty() ? 0 : run.inputs.front().size();
  out << "step";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i;
  out << ",stage_cost\n";
  for (std::size_t t = 0; t < run.inputs.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(run.states[t][i]);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(run.inputs[t][i]);
    out << ',' << format_double(run.stage_costs[t]) << '\n';
  }
}

Json to_json(const ClosedLoopSummary& s) {
  return Json{{"schema_version", kSchemaVersion},
              {"runs", s.runs},
              {"mean", s.mean},
              {"p90", s.p90},
              {"mean_curve", s.mean_curve},
              {"p90_curve", s.p90_curve}};
}

}  // namespace convaug

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "convaug/augment.hpp"
#include "convaug/learned.hpp"
#include "convaug/mpc.hpp"
#include "convaug/problems.hpp"
#include "convaug/verify.hpp"

namespace convaug {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

/// Shortest round-trip text for a double.
std::string format_double(double x);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

Json to_json(const QuadraticProblem& problem);
QuadraticProblem quadratic_from_json(const Json& j);

Json to_json(const RateCertificate& cert);
Json to_json(const DecayEnvelope& envelope);
DecayEnvelope envelope_from_json(const Json& j);

Json to_json(const AugmentedRun& run);
/// Columns: t, s0..s{n-1}, v_norm, dist, feasible. The last row has no
/// innovation and reports v_norm = 0.
void write_run_csv(std::ostream& out, const AugmentedRun& run);
/// Reads the dist column of a run CSV.
std::vector<double> read_distance_column(std::istream& in);

Json to_json(const VerificationReport& report);

Json to_json(const LearnedModel& model);
LearnedModel model_from_json(const Json& j);
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

void write_closed_loop_csv(std::ostream& out, const ClosedLoopRun& run);
Json to_json(const ClosedLoopSummary& summary);

}  // namespace convaug

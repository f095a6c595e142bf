#pragma once

#include <string>

#include <json.hpp>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"
#include "mfi/persuasion.hpp"
#include "mfi/political.hpp"
#include "mfi/posterior.hpp"
#include "mfi/security.hpp"

namespace mfi::io {

using Json = nlohmann::ordered_json;

// Readers reject unknown fields and wrong types with ErrorCode::Schema.
PiecewiseCdf read_cdf(const Json& j);
MonotoneInterval read_interval(const Json& j);  // null bound = unbounded
FiniteSignal read_signal(const Json& j);
SelectionRule read_rule(const Json& j);
SenderPayoff read_payoff(const Json& j);
PredictionDataset read_dataset(const Json& j);
MoralHazardModel read_moral_hazard(const Json& j);
AdverseSelectionModel read_adverse_selection(const Json& j);

Json to_json(const PiecewiseCdf& f);
Json to_json(const MonotoneInterval& iv);
Json to_json(const FiniteSignal& s);
Json to_json(const SelectionRule& r);
Json to_json(const SenderPayoff& p);
Json to_json(const PredictionDataset& d);
Json to_json(const MoralHazardModel& m);
Json to_json(const AdverseSelectionModel& m);
Json to_json(const ExtremeVerdict& v);
Json to_json(const ConstructionPlan& p);
Json to_json(const UniquenessReport& r);
Json to_json(const VerificationReport& r);
Json to_json(const ClosedFormCandidate& c);
Json to_json(const PersuasionResult& r);
Json to_json(const InequalityCheck& c);
Json to_json(const RationalizabilityReport& r);
Json to_json(const ContingentDebt& d);
Json to_json(const MoralHazardResult& r);
Json to_json(const AdverseSelectionResult& r);
Json to_json(const PeakCount& p);

/// Checks a result document written by the command-line tool for the given
/// subcommand: required fields present and every embedded object readable.
void validate_output(const std::string& subcommand, const Json& doc);

Json read_file(const std::string& path);

/// Number with 17 significant digits.
std::string format_number(double x);

}  // namespace mfi::io

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sflow/attractors.hpp"
#include "sflow/continuation.hpp"
#include "sflow/renorm.hpp"

namespace sflow {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

json to_json(const Vec& v);
json to_json(const AttractorInfo& a, bool with_orbit = true);
json to_json(const Catalog& c);
json to_json(const BlowupVerdict& v);
json to_json(const EscapeResult& e);
// csv_files[i] is the per-nu data file of run i (may be empty).
json to_json(const SweepReport& r, const std::vector<std::string>& csv_files);

// Trajectory summary: status, final state, t_b when detected.
json trajectory_summary(const Trajectory& tr, std::optional<double> t_b);

// Checks the top-level layout of an emitted document of the given kind
// ("summary", "catalog", "verdict", "sweep", "manifest", "escape").
// Returns an empty string when valid, otherwise the first problem found.
std::string check_schema(const json& doc, const std::string& kind);

// Writes `doc` with a trailing newline; numbers use the shortest round-trip form.
void write_json(const std::string& path, const json& doc);
json read_json(const std::string& path);

}  // namespace sflow

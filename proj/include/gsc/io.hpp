#pragma once

// On-disk formats: scenario specs (scenario-schema v1), JSON-lines traces and
// flat metrics objects. All writers are byte-stable for a given input.

#include "gsc/scenario.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace gsc {

using Json = nlohmann::json;

inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kMetricsSchemaVersion = 1;

Json scenario_to_json(const ScenarioSpec& spec);

/// Parses and validates. Unknown keys, wrong types and failed validation all
/// throw "bad-scenario" naming the offending path. Omitted keys keep their
/// defaults, so hand-written files only need what differs.
ScenarioSpec scenario_from_json(const Json& doc);

/// Pretty-printed, newline-terminated; the frozen form used by golden files.
std::string dump_scenario(const ScenarioSpec& spec);

ScenarioSpec load_scenario_file(const std::string& path);

/// A catalog id, or otherwise a path to a scenario JSON file.
ScenarioSpec resolve_scenario(const std::string& id_or_path);

struct TraceHeader {
  std::string scenario;
  std::string controller;
  std::uint64_t seed = 0;
};

Json trace_record_to_json(const TraceRecord& record);
TraceRecord trace_record_from_json(const Json& line);

/// One header line followed by one line per step.
void write_trace_jsonl(std::ostream& out, const TraceHeader& header, const Trace& trace);

struct LoadedTrace {
  TraceHeader header;
  Trace trace;
};

/// Throws "bad-trace" on malformed input.
LoadedTrace read_trace_jsonl(std::istream& in);

/// Flat object; infinite clearance and a missed goal serialize as null.
Json metrics_to_json(const Metrics& metrics);

/// Writes `text` to `path`, creating parent directories. Throws "io-error".
void write_file(const std::string& path, const std::string& text);

}  // namespace gsc

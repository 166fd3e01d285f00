#ifndef ATA_SCENARIO_IO_HPP
#define ATA_SCENARIO_IO_HPP

/**
 * @file
 * @brief Scenario documents (JSON) and traces (newline-delimited JSON).
 *
 * The full field reference lives in README.md. Units: meters, seconds,
 * radians. A trace file starts with a header line
 *   {"schema_version": 1, "scenario": {...}}
 * holding the resolved scenario, followed by one object per step.
 */

#include "ata/simworld.hpp"
#include "ata/trace.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

inline constexpr int kSchemaVersion = 1;

/**
 * Parses and validates a scenario document, filling defaults. Throws
 * ParseError (malformed JSON or wrong field type, with the field path) or
 * ValidationError listing every violated invariant. Soft issues are
 * appended to `warnings` when given.
 */
Scenario load_scenario(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Reads a file and calls load_scenario; I/O failures raise ParseError.
Scenario load_scenario_file(const std::filesystem::path& path,
                            std::vector<std::string>* warnings = nullptr);

/// Fully resolved document; load_scenario(dump_scenario(s)) reproduces s.
std::string dump_scenario(const Scenario& scenario);

void write_trace(std::ostream& out, const Scenario& scenario,
                 std::span<const TraceRecord> records);

struct TraceFile {
  Scenario scenario;
  Trace records;
};

/// Throws TraceFormatError on malformed lines or a schema version mismatch.
TraceFile read_trace(std::istream& in);

TraceFile read_trace_file(const std::filesystem::path& path);

}  // namespace ata

#endif  // ATA_SCENARIO_IO_HPP

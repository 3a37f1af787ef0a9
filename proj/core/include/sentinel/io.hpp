#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/distflow.hpp"
#include "sentinel/netsys.hpp"
#include "sentinel/simkit.hpp"

// File formats. All indices in files are 1-based; all loaders throw
// InputError (or DimensionError) with a message naming the offending field.
namespace sentinel::io {

/// Network plus the optional constant reference per subsystem.
struct NetworkDocument {
  net::InterconnectedNetwork network;
  std::vector<Vector> references;  ///< empty, or one per subsystem
};

NetworkDocument parse_network(const std::string& text);
std::string format_network(const net::InterconnectedNetwork& network,
                           const std::vector<Vector>& references = {});
NetworkDocument load_network(const std::filesystem::path& path);
void save_network(const std::filesystem::path& path,
                  const net::InterconnectedNetwork& network,
                  const std::vector<Vector>& references = {});

detect::Detector parse_detector(const std::string& text,
                                const net::InterconnectedNetwork& plant);
std::string format_detector(const detect::Detector& detector);
detect::Detector load_detector(const std::filesystem::path& path,
                               const net::InterconnectedNetwork& plant);
void save_detector(const std::filesystem::path& path, const detect::Detector& detector);

feeder::FeederSpec parse_feeder(const std::string& text);
std::string format_feeder(const feeder::FeederSpec& spec);
feeder::FeederSpec load_feeder(const std::filesystem::path& path);
void save_feeder(const std::filesystem::path& path, const feeder::FeederSpec& spec);

/**
 * Scenario file. Relative paths inside it resolve against `base_dir`.
 * The plant comes from "network" or "feeder" (path or inline object); a
 * feeder adds its references and voltage probes automatically.
 */
sim::Scenario parse_scenario(const std::string& text,
                             const std::filesystem::path& base_dir = {});
sim::Scenario load_scenario(const std::filesystem::path& path);

/// Wide CSV: "# key=value" metadata lines, header "t,<columns>,events".
void write_trace_csv(std::ostream& out, const sim::TraceLog& trace);
void save_trace_csv(const std::filesystem::path& path, const sim::TraceLog& trace);
/// Long CSV for plotting tools: "series,t,value".
void write_trace_long(std::ostream& out, const sim::TraceLog& trace);

/// Parsed wide CSV (metadata, columns, values and per-row event labels).
struct TraceTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<double> time;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> events;

  std::string meta(const std::string& key, const std::string& fallback = "") const;
  std::optional<std::size_t> column(std::string_view name) const;
};

TraceTable read_trace_csv(std::istream& in);
TraceTable load_trace_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// "%.17g" with "nan"/"inf" spelled out.
std::string format_double(double x);

}  // namespace sentinel::io

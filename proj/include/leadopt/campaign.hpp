#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leadopt/orchestrate.hpp"

namespace leadopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One JSON object per line: {"smiles": ..., "property": ..., "reference": ...?}
struct DatasetEntry {
  std::string smiles;
  std::string property_id;
  std::optional<std::string> reference;
};

struct IngestReport {
  std::vector<DatasetEntry> entries;
  std::vector<std::string> diagnostics;  // one per skipped row
  int rows = 0;                          // non-blank lines
  int skipped = 0;
};

using PropertyTable = std::map<std::string, PropertySpec>;

// The builtin surrogates keyed by id.
PropertyTable builtin_property_table();

// Throws IoError when unreadable, EmptyDataset when no row survives.
IngestReport ingest(const std::filesystem::path& path, const PropertyTable& properties);

// {"tools": [{"tool_id", "description"?, "focus"?, "templates"?: [6 strings],
//   "builtin": {"kind", "p_fail"?, "damping"?, "floor"?} | "command": "...",
//   "timeout_ms"?}]}
std::vector<ToolSpec> load_tools_config(const std::filesystem::path& path);
// {"evaluators": [{"property_id", "direction", "command", "timeout_ms"?}]},
// merged over the builtin table.
PropertyTable load_evaluators_config(const std::filesystem::path& path);

struct CampaignManifest {
  // mode, steps, tau, seed, tools, fp; property is taken per entry.
  RunConfig config;
  PropertyTable properties = builtin_property_table();
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::optional<std::filesystem::path> buffer;
  // Keep only entries for this property.
  std::optional<std::string> property_filter;
  int jobs = 1;
};

// One campaign per entry on up to `jobs` threads. `emit` runs on the
// calling thread in input order. A campaign that throws becomes a record
// with `error` set.
void run_campaigns(const RunConfig& base, const PropertyTable& properties, const std::vector<DatasetEntry>& entries,
                   int jobs, const std::function<void(std::size_t, const CampaignResult&)>& emit);

struct RunSummary {
  int records = 0;
  int succeeded = 0;
  int failed_leads = 0;  // records with `error` set
  IngestReport ingest;
};

// Streams one JSON line per entry to manifest.out. Throws ConfigError
// (including retrieve without a buffer path) before any work starts.
RunSummary run(const CampaignManifest& manifest);

struct BufferSummary {
  int campaigns = 0;
  int stored = 0;
  IngestReport ingest;
};

// Parallel-mode campaigns over the dataset; each successful one becomes a
// trajectory record. Writes the buffer to manifest.buffer.
BufferSummary build_buffer(const CampaignManifest& manifest);

// Throws IoError or SchemaError (with the line number).
std::vector<CampaignResult> load_results(const std::filesystem::path& path);

}  // namespace leadopt

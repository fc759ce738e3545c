#include "leadopt/campaign.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "leadopt/smiles.hpp"

namespace leadopt {

using nlohmann::json;

PropertyTable builtin_property_table() {
  PropertyTable t;
  for (const auto& id : builtin_property_ids()) t[id] = builtin_property(id);
  return t;
}

IngestReport ingest(const std::filesystem::path& path, const PropertyTable& properties) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());
  IngestReport report;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.rows;
    auto skip = [&](const std::string& why) {
      ++report.skipped;
      report.diagnostics.push_back(path.string() + ":" + std::to_string(number) + ": " + why);
    };
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      skip("not a JSON object");
      continue;
    }
    if (!doc.contains("smiles") || !doc["smiles"].is_string() || !doc.contains("property") ||
        !doc["property"].is_string()) {
      skip("missing string fields smiles/property");
      continue;
    }
    DatasetEntry e;
    e.smiles = doc["smiles"].get<std::string>();
    e.property_id = doc["property"].get<std::string>();
    if (!properties.count(e.property_id)) {
      skip("unknown property " + e.property_id);
      continue;
    }
    try {
      parse_smiles(e.smiles);
    } catch (const ParseError& err) {
      skip("invalid SMILES '" + e.smiles + "': " + err.what());
      continue;
    }
    if (doc.contains("reference") && !doc["reference"].is_null()) {
      if (!doc["reference"].is_string()) {
        skip("reference must be a string");
        continue;
      }
      e.reference = doc["reference"].get<std::string>();
    }
    report.entries.push_back(std::move(e));
  }
  if (report.entries.empty()) throw EmptyDataset("no usable rows in " + path.string());
  return report;
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::chrono::milliseconds timeout_of(const json& j) {
  return std::chrono::milliseconds(j.value("timeout_ms", 30000));
}

}  // namespace

std::vector<ToolSpec> load_tools_config(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  try {
    std::vector<ToolSpec> tools;
    for (const auto& t : doc.at("tools")) {
      const auto id = t.at("tool_id").get<std::string>();
      ToolSpec spec;
      if (t.contains("builtin")) {
        const auto& b = t["builtin"];
        BehaviorProfile profile;
        profile.kind = profile_kind_from_string(b.at("kind").get<std::string>());
        profile.p_fail = b.value("p_fail", profile.p_fail);
        profile.damping = b.value("damping", profile.damping);
        profile.floor = b.value("floor", profile.floor);
        spec.builtin = profile;
        spec.description = t.value("description", "builtin " + std::string(to_string(profile.kind)) + " editor");
      } else if (t.contains("command")) {
        spec.endpoint = std::make_shared<SubprocessTransport>(t["command"].get<std::string>(), timeout_of(t));
        spec.description = t.value("description", "external tool");
      } else {
        throw ConfigError("tool " + id + " needs \"builtin\" or \"command\"");
      }
      spec.tool_id = id;
      spec.prompt_templates = default_templates(t.value("focus", spec.description));
      if (t.contains("templates")) {
        const auto list = t["templates"].get<std::vector<std::string>>();
        if (list.size() != static_cast<std::size_t>(kTemplateCount)) {
          throw ConfigError("tool " + id + " needs exactly 6 templates");
        }
        std::copy(list.begin(), list.end(), spec.prompt_templates.begin());
      }
      tools.push_back(std::move(spec));
    }
    return tools;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(path.string() + ": " + e.what());
  }
}

PropertyTable load_evaluators_config(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  auto table = builtin_property_table();
  try {
    for (const auto& e : doc.at("evaluators")) {
      PropertySpec spec;
      spec.id = e.at("property_id").get<std::string>();
      spec.direction = direction_from_string(e.at("direction").get<std::string>());
      spec.external = std::make_shared<ExternalEvaluator>(
          std::make_shared<SubprocessTransport>(e.at("command").get<std::string>(), timeout_of(e)));
      table[spec.id] = spec;
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return table;
}

void run_campaigns(const RunConfig& base, const PropertyTable& properties, const std::vector<DatasetEntry>& entries,
                   int jobs, const std::function<void(std::size_t, const CampaignResult&)>& emit) {
  const std::size_t n = entries.size();
  std::vector<std::optional<CampaignResult>> slots(n);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& e = entries[i];
      CampaignResult r;
      try {
        RunConfig config = base;
        config.property = properties.at(e.property_id);
        r = run_campaign(config, parse_smiles(e.smiles));
      } catch (const std::exception& ex) {
        r = CampaignResult{};
        r.lead = e.smiles;
        try {
          r.lead = canonicalize(e.smiles);
        } catch (const ParseError&) {
        }
        r.property_id = e.property_id;
        r.mode = base.mode;
        r.error = ex.what();
      }
      std::lock_guard lock(mutex);
      slots[i] = std::move(r);
      ready.notify_all();
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(work);
  try {
    for (std::size_t i = 0; i < n; ++i) {
      CampaignResult r;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return slots[i].has_value(); });
        r = std::move(*slots[i]);
        slots[i].reset();
      }
      emit(i, r);
    }
  } catch (...) {
    next = n;
    for (auto& t : threads) t.join();
    throw;
  }
  for (auto& t : threads) t.join();
}

namespace {

std::vector<DatasetEntry> filtered(const IngestReport& report, const std::optional<std::string>& property) {
  std::vector<DatasetEntry> out;
  for (const auto& e : report.entries) {
    if (!property || e.property_id == *property) out.push_back(e);
  }
  return out;
}

void check_manifest(const CampaignManifest& m) {
  if (m.property_filter && !m.properties.count(*m.property_filter)) {
    throw ConfigError("unknown property " + *m.property_filter);
  }
  if (m.jobs < 1) throw ConfigError("jobs must be at least 1");
}

}  // namespace

RunSummary run(const CampaignManifest& manifest) {
  check_manifest(manifest);
  RunConfig config = manifest.config;
  if (config.mode == Mode::retrieve) {
    if (!manifest.buffer) throw ConfigError("retrieve mode requires a buffer path");
    try {
      config.buffer = TrajectoryBuffer::load(*manifest.buffer, config.fp);
    } catch (const std::runtime_error& e) {
      if (dynamic_cast<const SchemaError*>(&e)) throw;
      throw IoError(e.what());
    }
  }
  // Validate with a placeholder property so errors surface before ingest.
  {
    RunConfig probe = config;
    probe.property = builtin_property("qed");
    validate_config(probe);
  }

  RunSummary summary;
  summary.ingest = ingest(manifest.dataset, manifest.properties);
  const auto entries = filtered(summary.ingest, manifest.property_filter);
  if (entries.empty()) throw EmptyDataset("no entries for the selected property");

  std::ofstream out(manifest.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest.out.string());
  run_campaigns(config, manifest.properties, entries, manifest.jobs, [&](std::size_t, const CampaignResult& r) {
    out << campaign_to_json_line(r) << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + manifest.out.string());
    ++summary.records;
    if (r.best_seen) ++summary.succeeded;
    if (!r.error.empty()) ++summary.failed_leads;
  });
  return summary;
}

BufferSummary build_buffer(const CampaignManifest& manifest) {
  check_manifest(manifest);
  if (!manifest.buffer) throw ConfigError("build-buffer needs a buffer path");
  RunConfig config = manifest.config;
  config.mode = Mode::parallel;
  config.budget = 0;
  config.buffer.reset();
  {
    RunConfig probe = config;
    probe.property = builtin_property("qed");
    validate_config(probe);
  }
  BufferSummary summary;
  summary.ingest = ingest(manifest.dataset, manifest.properties);
  const auto entries = filtered(summary.ingest, manifest.property_filter);
  if (entries.empty()) throw EmptyDataset("no entries for the selected property");

  TrajectoryBuffer buffer(config.fp);
  run_campaigns(config, manifest.properties, entries, manifest.jobs, [&](std::size_t i, const CampaignResult& r) {
    ++summary.campaigns;
    if (auto t = trajectory_from_campaign(r, "train-" + std::to_string(i), config.fp)) {
      buffer.insert(std::move(*t));
      ++summary.stored;
    }
  });
  try {
    buffer.flush(*manifest.buffer);
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(e.what());
  }
  return summary;
}

std::vector<CampaignResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read results " + path.string());
  std::vector<CampaignResult> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(campaign_from_json_line(line));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace leadopt

#include "leadopt/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <mutex>

#include "leadopt/smiles.hpp"

namespace leadopt {

using nlohmann::json;

std::vector<ToolAction> trajectory_template(const TrajectoryRecord& record) { return record.actions; }

bool prefix_match(const TrajectoryRecord& a, const TrajectoryRecord& b, int k) {
  if (k < 1) throw std::invalid_argument("prefix length must be at least 1");
  const auto n = static_cast<std::size_t>(k);
  if (a.actions.size() < n || b.actions.size() < n) return false;
  return std::equal(a.actions.begin(), a.actions.begin() + k, b.actions.begin());
}

TrajectoryBuffer::TrajectoryBuffer(FingerprintParams params) : params_(params) {}

void TrajectoryBuffer::check(const TrajectoryRecord& r) const {
  if (r.actions.empty()) throw SchemaError("trajectory has no actions");
  if (r.step_outcomes.size() != r.actions.size()) throw SchemaError("step outcome count differs from action count");
  for (const auto& a : r.actions) {
    if (a.tool_id.empty()) throw SchemaError("action without tool id");
    if (a.prompt_index < 0 || a.prompt_index > 5) throw SchemaError("prompt index outside 0-5");
  }
  if (!std::isfinite(r.final_ri) || r.final_ri < 0) throw SchemaError("final_ri must be finite and non-negative");
  if (r.property_id.empty()) throw SchemaError("trajectory without property id");
  MolGraph lead;
  try {
    lead = parse_smiles(r.lead);
  } catch (const ParseError& e) {
    throw SchemaError("lead does not parse: " + std::string(e.what()));
  }
  if (canonical_form(lead) != r.lead) throw SchemaError("lead is not in canonical form: " + r.lead);
  if (morgan_fp(lead, params_) != r.lead_fp) throw SchemaError("lead fingerprint does not match lead " + r.lead);
}

void TrajectoryBuffer::insert(TrajectoryRecord record) {
  check(record);
  std::unique_lock lock(mutex_);
  by_property_[record.property_id].push_back(records_.size());
  records_.push_back(std::move(record));
}

std::size_t TrajectoryBuffer::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<TrajectoryRecord> TrajectoryBuffer::entries() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::vector<TrajectoryRecord> TrajectoryBuffer::partition(const std::string& property_id) const {
  std::shared_lock lock(mutex_);
  std::vector<TrajectoryRecord> out;
  if (auto it = by_property_.find(property_id); it != by_property_.end()) {
    for (auto i : it->second) out.push_back(records_[i]);
  }
  return out;
}

std::optional<BufferHit> TrajectoryBuffer::top1_similar(const MolGraph& mol, const std::string& property_id) const {
  const auto fp = morgan_fp(mol, params_);
  std::shared_lock lock(mutex_);
  const auto it = by_property_.find(property_id);
  if (it == by_property_.end() || it->second.empty()) return std::nullopt;
  std::optional<std::size_t> best;
  Similarity best_sim;
  for (auto i : it->second) {
    const auto sim = tanimoto(fp, records_[i].lead_fp);
    bool better = !best || sim > best_sim;
    if (best && sim == best_sim) {
      const auto& cur = records_[*best];
      const auto& cand = records_[i];
      better = cand.final_ri > cur.final_ri || (cand.final_ri == cur.final_ri && cand.lead < cur.lead);
    }
    if (better) {
      best = i;
      best_sim = sim;
    }
  }
  return BufferHit{*best, records_[*best], best_sim};
}

std::string record_to_json_line(const TrajectoryRecord& r) {
  json actions = json::array();
  for (const auto& a : r.actions) actions.push_back({{"tool_id", a.tool_id}, {"prompt_index", a.prompt_index}});
  json outcomes = json::array();
  for (const auto& o : r.step_outcomes) outcomes.push_back({{"smiles", o.smiles}, {"value", o.value}, {"sim", o.sim}});
  const json doc = {{"lead", r.lead},
                    {"lead_fp_hex", r.lead_fp.to_hex()},
                    {"fp_radius", r.lead_fp.radius()},
                    {"fp_nbits", r.lead_fp.nbits()},
                    {"property_id", r.property_id},
                    {"actions", actions},
                    {"step_outcomes", outcomes},
                    {"final_ri", r.final_ri},
                    {"run_id", r.run_id}};
  return doc.dump();
}

TrajectoryRecord record_from_json_line(const std::string& line) {
  try {
    const json doc = json::parse(line);
    TrajectoryRecord r;
    r.lead = doc.at("lead").get<std::string>();
    r.lead_fp = Fingerprint::from_hex(doc.at("lead_fp_hex").get<std::string>(), doc.at("fp_nbits").get<int>(),
                                      doc.at("fp_radius").get<int>());
    r.property_id = doc.at("property_id").get<std::string>();
    for (const auto& a : doc.at("actions")) {
      r.actions.push_back({a.at("tool_id").get<std::string>(), a.at("prompt_index").get<int>()});
    }
    for (const auto& o : doc.at("step_outcomes")) {
      r.step_outcomes.push_back({o.at("smiles").get<std::string>(), o.at("value").get<double>(), o.at("sim").get<double>()});
    }
    r.final_ri = doc.at("final_ri").get<double>();
    r.run_id = doc.at("run_id").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed trajectory record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("malformed trajectory record: ") + e.what());
  }
}

void TrajectoryBuffer::flush(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    std::shared_lock lock(mutex_);
    for (const auto& r : records_) out << record_to_json_line(r) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<TrajectoryBuffer> TrajectoryBuffer::load(const std::filesystem::path& path, FingerprintParams params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read buffer file " + path.string());
  auto buffer = std::make_unique<TrajectoryBuffer>(params);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      auto record = record_from_json_line(line);
      if (record.lead_fp.radius() != params.radius || record.lead_fp.nbits() != params.nbits) {
        throw SchemaError("fingerprint parameters differ from the configured ones");
      }
      buffer->insert(std::move(record));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return buffer;
}

}  // namespace leadopt

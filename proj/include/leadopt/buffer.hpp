#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "leadopt/fingerprint.hpp"
#include "leadopt/molgraph.hpp"

namespace leadopt {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ToolAction {
  std::string tool_id;
  int prompt_index = 0;
  friend bool operator==(const ToolAction&, const ToolAction&) = default;
};

struct StepOutcome {
  std::string smiles;
  double value = 0.0;
  double sim = 0.0;
  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct TrajectoryRecord {
  std::string lead;  // canonical SMILES
  Fingerprint lead_fp{2048, 2};
  std::string property_id;
  std::vector<ToolAction> actions;
  std::vector<StepOutcome> step_outcomes;
  double final_ri = 0.0;
  std::string run_id;
  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

struct BufferHit {
  std::size_t index = 0;  // position in insertion order
  TrajectoryRecord record;
  Similarity similarity;
};

// Returns the action list verbatim.
std::vector<ToolAction> trajectory_template(const TrajectoryRecord& record);

// Both records have at least k actions and agree on the first k.
bool prefix_match(const TrajectoryRecord& a, const TrajectoryRecord& b, int k);

// Offline trajectory store partitioned by property. Any number of concurrent
// readers; writers take an exclusive lock.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(FingerprintParams params = {});
  TrajectoryBuffer(const TrajectoryBuffer&) = delete;
  TrajectoryBuffer& operator=(const TrajectoryBuffer&) = delete;

  const FingerprintParams& params() const noexcept { return params_; }

  // Throws SchemaError when the record breaks an invariant: no actions,
  // outcome count differs from action count, prompt index outside 0..5,
  // negative or non-finite final_ri, a lead that is not a valid canonical
  // SMILES, or a fingerprint that does not match the lead.
  void insert(TrajectoryRecord record);

  std::size_t size() const;
  std::vector<TrajectoryRecord> entries() const;
  std::vector<TrajectoryRecord> partition(const std::string& property_id) const;

  // Most similar record of the property partition. Ties: higher final_ri,
  // then the lexicographically smaller lead.
  std::optional<BufferHit> top1_similar(const MolGraph& mol, const std::string& property_id) const;

  // Writes every record as one JSON line to a temporary file, then renames
  // it over `path`.
  void flush(const std::filesystem::path& path) const;
  static std::unique_ptr<TrajectoryBuffer> load(const std::filesystem::path& path, FingerprintParams params = {});

 private:
  void check(const TrajectoryRecord& record) const;

  FingerprintParams params_;
  mutable std::shared_mutex mutex_;
  std::vector<TrajectoryRecord> records_;
  std::map<std::string, std::vector<std::size_t>> by_property_;
};

// Record <-> one JSON line.
std::string record_to_json_line(const TrajectoryRecord& record);
TrajectoryRecord record_from_json_line(const std::string& line);

}  // namespace leadopt

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leadopt/buffer.hpp"
#include "leadopt/evaluate.hpp"
#include "leadopt/fingerprint.hpp"
#include "leadopt/molgraph.hpp"
#include "leadopt/tools.hpp"
#include "leadopt/transport.hpp"

namespace leadopt {

enum class Mode { online, retrieve, parallel };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PlannerProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlanCommand {
  std::vector<ToolAction> tool_calls;
  friend bool operator==(const PlanCommand&, const PlanCommand&) = default;
};

// Outcome of the ordered checks on one emitted candidate. Every valid
// candidate gets a similarity and, when evaluation succeeds, a value, even
// if an earlier check already failed.
struct CandidateCheck {
  std::string smiles;     // as emitted by the tool
  std::string canonical;  // empty when invalid
  bool valid = false;
  std::optional<double> sim;
  std::optional<double> value;
  // Change vs the lead's value, positive in the preferred direction.
  std::optional<double> improvement;
  bool improved = false;
  std::optional<FailureKind> failure;
  std::string message;

  bool passed() const noexcept { return valid && !failure; }
  friend bool operator==(const CandidateCheck&, const CandidateCheck&) = default;
};

struct Attempt {
  ToolAction action;
  int ordinal = 0;  // position of the action in the step's plan
  bool retry = false;
  std::vector<std::string> candidates;
  std::string raw_payload;
  std::vector<CandidateCheck> checks;
  std::string tool_error;

  bool any_passed() const;
  friend bool operator==(const Attempt&, const Attempt&) = default;
};

struct Chosen {
  std::string smiles;
  double value = 0.0;
  double sim = 0.0;
  double improvement = 0.0;
  ToolAction action;
  bool from_retry = false;
  friend bool operator==(const Chosen&, const Chosen&) = default;
};

struct StepRecord {
  int step_index = 0;  // 0-based
  std::string start_molecule;
  PlanCommand plan;
  std::vector<Attempt> attempts;
  std::optional<Chosen> chosen;
  bool rescued = false;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct BestSeen {
  std::string smiles;
  double value = 0.0;
  double sim = 0.0;
  double improvement = 0.0;
  std::optional<double> relative_improvement;
  bool zero_reference = false;
  int step = 0;  // 0-based
  friend bool operator==(const BestSeen&, const BestSeen&) = default;
};

struct CampaignResult {
  std::string lead;
  std::string property_id;
  Direction direction = Direction::maximize;
  Mode mode = Mode::online;
  std::optional<double> lead_value;
  std::vector<StepRecord> steps;
  std::optional<BestSeen> best_seen;
  int invocation_count = 0;
  std::vector<std::string> notes;
  std::string error;  // set when the campaign could not run
  friend bool operator==(const CampaignResult&, const CampaignResult&) = default;
};

struct PlanContext {
  std::string smiles;
  const PropertySpec* property = nullptr;
  Mode mode = Mode::online;
  int step = 0;
  const std::vector<ToolSpec>* tools = nullptr;
  const std::vector<StepRecord>* history = nullptr;
  std::string retrieval_hint;
};

class Planner {
 public:
  virtual ~Planner() = default;
  // Online/retrieve: an ordered sequence of one or more calls, consumed one
  // per step. Parallel: one call per tool.
  virtual PlanCommand plan(const PlanContext& context) const = 0;
};

// Scores each tool by an exponentially weighted success rate over its past
// attempts in this campaign (s <- 0.7 x + 0.3 s, prior 0.5) and takes the
// best, scanning round-robin from position step mod |tools| so ties rotate.
// Template index = step mod 6.
class BuiltinPlanner final : public Planner {
 public:
  PlanCommand plan(const PlanContext& context) const override;
  static double success_score(const std::vector<StepRecord>& history, const std::string& tool_id);
};

// Sends the planning prompt as {"prompt": ..., "mode": ..., "step": ...} and
// requires a reply that is exactly {"tool_calls":[{"tool_name":..., "prompt_index":...}]}.
class ExternalPlanner final : public Planner {
 public:
  explicit ExternalPlanner(std::shared_ptr<LineTransport> transport);
  PlanCommand plan(const PlanContext& context) const override;

 private:
  std::shared_ptr<LineTransport> transport_;
};

std::string render_planner_prompt(const PlanContext& context);
// Throws PlannerProtocolError unless the reply is exactly one tool_calls
// document naming known tools with indices 0..5 and, in parallel mode,
// covering every tool once.
PlanCommand parse_plan_reply(const std::string& reply, const std::vector<ToolSpec>& tools, Mode mode);

struct RunConfig {
  Mode mode = Mode::online;
  int steps = 3;
  Similarity tau{kDefaultSimilarityThreshold};
  // Planned calls per step; 0 derives it from the mode.
  int budget = 0;
  std::uint64_t seed = 0;
  std::vector<ToolSpec> tools;
  PropertySpec property;
  std::shared_ptr<const TrajectoryBuffer> buffer;
  // Null uses the builtin planner.
  std::shared_ptr<const Planner> planner;
  FingerprintParams fp;
  bool self_correction = true;
};

// Throws ConfigError for a mode/budget mismatch, retrieve without a buffer,
// an empty or duplicated tool set, or a non-positive step count.
void validate_config(const RunConfig& config);
int planned_budget(const RunConfig& config);

// Runs every step on `lead` and returns the full log. The per-lead seed is
// derived from config.seed and the lead's canonical SMILES.
CampaignResult run_campaign(const RunConfig& config, const MolGraph& lead);

bool invocation_budget_check(const CampaignResult& result, const RunConfig& config);

// Sorted-key JSON, one line.
std::string campaign_to_json_line(const CampaignResult& result);
// Throws SchemaError on malformed input.
CampaignResult campaign_from_json_line(const std::string& line);

// Trajectory of a successful campaign: each step's winning action, or the
// first planned action with the unchanged molecule for a stagnant step.
// Returns nullopt for an unsuccessful campaign.
std::optional<TrajectoryRecord> trajectory_from_campaign(const CampaignResult& result, const std::string& run_id,
                                                         const FingerprintParams& fp = {});

}  // namespace leadopt

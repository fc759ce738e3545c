#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leadopt/evaluate.hpp"
#include "leadopt/molgraph.hpp"
#include "leadopt/transport.hpp"

namespace leadopt {

inline constexpr int kTemplateCount = 6;
// Failed cases carried into a retry instruction.
inline constexpr std::size_t kMaxFailedCases = 2;

class ToolUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FailureKind { invalid_structure, similarity_violation, no_improvement, evaluator_error };

std::string_view to_string(FailureKind kind);
FailureKind failure_kind_from_string(std::string_view s);
// Label used in the avoid list of a retry instruction.
std::string_view failure_label(FailureKind kind);

struct FailedCase {
  std::string smiles;
  FailureKind kind = FailureKind::invalid_structure;
  std::string message;
};

struct Instruction {
  int template_index = 0;
  std::string property_id;
  Direction direction = Direction::maximize;
  std::string base_text;
  std::vector<FailedCase> failed_cases;

  // Base text plus, when there are failed cases, the avoid list.
  std::string text() const;
};

// Simulated editors:
//   substituent  terminal group swap / add / remove, groups of at most 2 atoms
//   mutation     one atom's element changed within valence limits
//   ring         ring append, cyclization, contraction or expansion
//   flaky        substituent edits whose output is corrupted with probability
//                min(p_fail, max(floor, p_fail * damping^k)), k = failed cases
enum class ProfileKind { substituent, mutation, ring, flaky };

std::string_view to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(std::string_view s);

struct BehaviorProfile {
  ProfileKind kind = ProfileKind::substituent;
  double p_fail = 0.5;
  double damping = 0.5;
  double floor = 0.05;

  double effective_failure_probability(std::size_t failed_cases) const;
};

struct ToolSpec {
  std::string tool_id;
  std::string description;
  std::array<std::string, kTemplateCount> prompt_templates;
  // Exactly one of these is set.
  std::optional<BehaviorProfile> builtin;
  std::shared_ptr<LineTransport> endpoint;

  bool is_builtin() const noexcept { return builtin.has_value(); }
};

struct ToolResult {
  std::vector<std::string> candidates;
  std::string tool_id;
  std::chrono::nanoseconds latency{0};
  std::string raw_payload;
};

// Six templates varying edit style: substitute, add, remove, rearrange,
// conservative, aggressive. Placeholders: {smiles} {property} {goal}.
std::array<std::string, kTemplateCount> default_templates(std::string_view focus);

// ToolA..ToolD with their default profiles.
ToolSpec builtin_tool(std::string_view tool_id);
std::vector<ToolSpec> default_tool_set();

// Throws std::out_of_range for a template index outside 0..5. Keeps at most
// kMaxFailedCases cases, in the given order.
Instruction build_instruction(const ToolSpec& spec, int template_index, const PropertySpec& objective,
                              const std::vector<FailedCase>& failed_cases, std::string_view smiles = {});

// Extracts every <SMILES>...</SMILES> span verbatim. Never throws.
std::vector<std::string> extract_smiles_spans(std::string_view payload);

// One seeded edit. Returns the edited molecule written as SMILES, a corrupted
// string for a flaky failure, or the input when no edit applies.
std::string simulated_tool_step(const BehaviorProfile& profile, const MolGraph& mol, const Instruction& instruction,
                                std::uint64_t seed);

// Builtin tools return exactly one candidate. External tools send
// {tool_id, smiles, property_id, direction, instruction_text} and reply with
// free text; ToolUnavailable on transport failure.
ToolResult invoke(const ToolSpec& spec, const Instruction& instruction, const MolGraph& mol, std::uint64_t seed);

}  // namespace leadopt

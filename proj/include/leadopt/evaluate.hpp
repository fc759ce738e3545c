#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leadopt/molgraph.hpp"
#include "leadopt/transport.hpp"

namespace leadopt {

enum class Direction { maximize, minimize };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

class EvaluatorUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PropertyMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Per-molecule result of a batch evaluation: a value or an error message.
struct EvalResult {
  std::optional<double> value;
  std::string error;
};

// Client for the evaluator line protocol.
//   request:  {"id": n, "property_id": "...", "smiles_list": [...]}
//   response: {"id": n, "values": [x | null, ...], "errors": [[index, "message"], ...]}
class ExternalEvaluator {
 public:
  explicit ExternalEvaluator(std::shared_ptr<LineTransport> transport);

  // Throws EvaluatorUnavailable on transport failure or a malformed reply.
  std::vector<EvalResult> evaluate(const std::string& property_id, const std::vector<std::string>& smiles) const;

 private:
  std::shared_ptr<LineTransport> transport_;
  mutable std::atomic<std::uint64_t> next_id_{1};
};

struct PropertySpec {
  std::string id;
  Direction direction = Direction::maximize;
  // Null selects the builtin surrogate named by `id`.
  std::shared_ptr<const ExternalEvaluator> external;
};

struct PropertyValue {
  double value = 0.0;
  std::string property_id;
};

struct Improvement {
  // Change signed by desirability: positive means the preferred direction.
  double absolute = 0.0;
  // |final - initial| / |initial|, present only for an improvement over a
  // nonzero initial value.
  std::optional<double> relative;
  // Set when the initial value is zero, so the sample is left out of RI.
  bool zero_reference = false;
};

// Property ids with builtin surrogates: plogp, qed, bbbp, hia, mutagenicity.
const std::vector<std::string>& builtin_property_ids();
bool is_builtin_property(std::string_view id);
// Builtin spec with the documented direction. Throws InvalidInput for an
// unknown id.
PropertySpec builtin_property(std::string_view id);

// Additive per-atom contributions:
//   aromatic C 0.29, aliphatic C 0.14, N -0.60, O -0.64, S 0.26, P 0.12,
//   F 0.21, Cl 0.65, Br 0.86, I 1.12, B 0.05
double surrogate_logp(const MolGraph& mol);
// logp - max(0, largest ring - 6)
double surrogate_plogp(const MolGraph& mol);
// exp(-((HAC - 25)/15)^2) * exp(-((hetero fraction - 0.3)/0.3)^2)
double surrogate_dlk(const MolGraph& mol);
// Logistic scores, see evaluate.cpp for coefficients.
double surrogate_bbbp(const MolGraph& mol);
double surrogate_hia(const MolGraph& mol);
double surrogate_mutagenicity(const MolGraph& mol);

// Surrogate value for a builtin id, ignoring any external binding.
double builtin_value(std::string_view property_id, const MolGraph& mol);

// Throws InvalidInput for an invalid molecule, EvaluatorUnavailable when the
// external endpoint fails or reports an error for this molecule.
PropertyValue evaluate(const PropertySpec& spec, const MolGraph& mol);

// Batch form; molecules must be valid. External specs send one request.
// Per-molecule failures are reported in the result, transport failures throw.
std::vector<EvalResult> evaluate_many(const PropertySpec& spec, const std::vector<MolGraph>& mols);

bool is_improvement(const PropertySpec& spec, const PropertyValue& candidate, const PropertyValue& reference);
Improvement relative_improvement(const PropertySpec& spec, const PropertyValue& initial, const PropertyValue& final);

}  // namespace leadopt

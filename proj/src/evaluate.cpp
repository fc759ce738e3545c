#include "leadopt/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "leadopt/editing.hpp"
#include "leadopt/smiles.hpp"

namespace leadopt {

using nlohmann::json;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double hetero_fraction(const MolGraph& mol) {
  return static_cast<double>(editing::count_heteroatoms(mol)) / static_cast<double>(mol.num_atoms());
}

void require_valid(const MolGraph& mol) {
  if (!validate(mol).valid) throw InvalidInput("cannot evaluate an invalid molecule");
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::maximize ? "maximize" : "minimize"; }

Direction direction_from_string(std::string_view s) {
  if (s == "maximize") return Direction::maximize;
  if (s == "minimize") return Direction::minimize;
  throw InvalidInput("unknown direction '" + std::string(s) + "'");
}

ExternalEvaluator::ExternalEvaluator(std::shared_ptr<LineTransport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw std::invalid_argument("evaluator transport is null");
}

std::vector<EvalResult> ExternalEvaluator::evaluate(const std::string& property_id,
                                                    const std::vector<std::string>& smiles) const {
  const std::uint64_t id = next_id_.fetch_add(1);
  const json request = {{"id", id}, {"property_id", property_id}, {"smiles_list", smiles}};
  std::string reply;
  try {
    reply = transport_->exchange(request.dump());
  } catch (const TransportError& e) {
    throw EvaluatorUnavailable(e.what());
  }

  std::vector<EvalResult> out(smiles.size());
  try {
    const json doc = json::parse(reply);
    if (doc.contains("id") && doc.at("id").get<std::uint64_t>() != id) {
      throw EvaluatorUnavailable("evaluator reply id does not match request");
    }
    const auto& values = doc.at("values");
    if (!values.is_array() || values.size() != smiles.size()) {
      throw EvaluatorUnavailable("evaluator reply has the wrong number of values");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].is_number()) {
        const double v = values[i].get<double>();
        if (std::isfinite(v)) {
          out[i].value = v;
        } else {
          out[i].error = "non-finite value";
        }
      } else {
        out[i].error = "missing value";
      }
    }
    if (doc.contains("errors")) {
      for (const auto& e : doc.at("errors")) {
        const auto index = e.at(0).get<std::size_t>();
        if (index >= out.size()) throw EvaluatorUnavailable("evaluator error index out of range");
        out[index].value.reset();
        out[index].error = e.at(1).get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw EvaluatorUnavailable(std::string("malformed evaluator reply: ") + e.what());
  }
  return out;
}

const std::vector<std::string>& builtin_property_ids() {
  static const std::vector<std::string> ids{"plogp", "qed", "bbbp", "hia", "mutagenicity"};
  return ids;
}

bool is_builtin_property(std::string_view id) {
  const auto& ids = builtin_property_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

PropertySpec builtin_property(std::string_view id) {
  if (!is_builtin_property(id)) throw InvalidInput("unknown property '" + std::string(id) + "'");
  return PropertySpec{std::string(id), id == "mutagenicity" ? Direction::minimize : Direction::maximize, nullptr};
}

double surrogate_logp(const MolGraph& mol) {
  // Contributions are whole hundredths, summed as integers so that a value
  // that should be 0 is exactly 0 (RI treats a zero initial value specially).
  int aromatic_c = 0, aliphatic_c = 0, n = 0, o = 0, s = 0, p = 0, f = 0, cl = 0, br = 0, i = 0, b = 0;
  for (const auto& atom : mol.atoms()) {
    switch (atom.element) {
      case Element::C: ++(atom.aromatic ? aromatic_c : aliphatic_c); break;
      case Element::N: ++n; break;
      case Element::O: ++o; break;
      case Element::S: ++s; break;
      case Element::P: ++p; break;
      case Element::F: ++f; break;
      case Element::Cl: ++cl; break;
      case Element::Br: ++br; break;
      case Element::I: ++i; break;
      case Element::B: ++b; break;
    }
  }
  const int hundredths = 29 * aromatic_c + 14 * aliphatic_c - 60 * n - 64 * o + 26 * s + 12 * p + 21 * f + 65 * cl +
                         86 * br + 112 * i + 5 * b;
  return hundredths / 100.0;
}

double surrogate_plogp(const MolGraph& mol) {
  return surrogate_logp(mol) - std::max(0, ring_info(mol).largest_ring - 6);
}

double surrogate_dlk(const MolGraph& mol) {
  const double size = (static_cast<double>(mol.num_atoms()) - 25.0) / 15.0;
  const double hetero = (hetero_fraction(mol) - 0.3) / 0.3;
  return std::exp(-size * size) * std::exp(-hetero * hetero);
}

double surrogate_bbbp(const MolGraph& mol) {
  return logistic(1.2 * surrogate_logp(mol) - 8.0 * hetero_fraction(mol) + 0.5);
}

double surrogate_hia(const MolGraph& mol) {
  return logistic(0.8 * surrogate_logp(mol) - 5.0 * (hetero_fraction(mol) - 0.35) + 1.0);
}

// Rises with aromatic ring count.
double surrogate_mutagenicity(const MolGraph& mol) {
  const auto rings = ring_info(mol);
  return logistic(0.9 * rings.aromatic_ring_count + 0.25 * surrogate_logp(mol) - 3.0 * hetero_fraction(mol) - 1.5);
}

double builtin_value(std::string_view property_id, const MolGraph& mol) {
  require_valid(mol);
  if (property_id == "plogp") return surrogate_plogp(mol);
  if (property_id == "qed") return surrogate_dlk(mol);
  if (property_id == "bbbp") return surrogate_bbbp(mol);
  if (property_id == "hia") return surrogate_hia(mol);
  if (property_id == "mutagenicity") return surrogate_mutagenicity(mol);
  throw InvalidInput("no builtin surrogate for '" + std::string(property_id) + "'");
}

PropertyValue evaluate(const PropertySpec& spec, const MolGraph& mol) {
  require_valid(mol);
  if (!spec.external) return PropertyValue{builtin_value(spec.id, mol), spec.id};
  const auto results = spec.external->evaluate(spec.id, {canonical_form(mol)});
  if (!results.front().value) throw EvaluatorUnavailable("evaluator error: " + results.front().error);
  return PropertyValue{*results.front().value, spec.id};
}

std::vector<EvalResult> evaluate_many(const PropertySpec& spec, const std::vector<MolGraph>& mols) {
  std::vector<EvalResult> out;
  out.reserve(mols.size());
  if (!spec.external) {
    for (const auto& mol : mols) out.push_back(EvalResult{builtin_value(spec.id, mol), {}});
    return out;
  }
  if (mols.empty()) return out;
  std::vector<std::string> smiles;
  smiles.reserve(mols.size());
  for (const auto& mol : mols) {
    require_valid(mol);
    smiles.push_back(canonical_form(mol));
  }
  return spec.external->evaluate(spec.id, smiles);
}

bool is_improvement(const PropertySpec& spec, const PropertyValue& candidate, const PropertyValue& reference) {
  if (candidate.property_id != spec.id || reference.property_id != spec.id) {
    throw PropertyMismatch("property values do not belong to '" + spec.id + "'");
  }
  return spec.direction == Direction::maximize ? candidate.value > reference.value : candidate.value < reference.value;
}

Improvement relative_improvement(const PropertySpec& spec, const PropertyValue& initial, const PropertyValue& final) {
  Improvement out;
  const double delta = final.value - initial.value;
  out.absolute = spec.direction == Direction::maximize ? delta : -delta;
  out.zero_reference = initial.value == 0.0;
  if (!is_improvement(spec, final, initial) || out.zero_reference) return out;
  out.relative = std::abs(delta) / std::abs(initial.value);
  return out;
}

}  // namespace leadopt

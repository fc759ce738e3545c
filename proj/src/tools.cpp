#include "leadopt/tools.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <set>

#include "leadopt/editing.hpp"
#include "leadopt/random.hpp"
#include "leadopt/smiles.hpp"

namespace leadopt {

using nlohmann::json;

namespace {

// Root atom first; at most two heavy atoms each.
constexpr std::array<std::string_view, 14> kSmallGroups{"C",  "N",  "O",  "F",   "Cl", "Br", "I",
                                                        "S",  "CC", "CO", "CN", "C#N", "OC", "NC"};
constexpr std::array<std::string_view, 6> kRingGroups{"c1ccccc1", "C1CC1",    "C1CCCC1",
                                                      "c1ccncc1", "C1CCOCC1", "c1ccsc1"};
constexpr std::array<Element, 7> kMutationTargets{Element::C, Element::N,  Element::O, Element::S,
                                                  Element::F, Element::Cl, Element::Br};
constexpr std::array<Element, 7> kTerminalElements{Element::C,  Element::N,  Element::O, Element::F,
                                                   Element::Cl, Element::Br, Element::S};
constexpr std::array<int, kTemplateCount> kProposalCount{4, 4, 4, 4, 2, 8};

using Edit = std::function<std::optional<MolGraph>(const MolGraph&, Rng&)>;

MolGraph fragment(std::string_view smiles) { return parse_smiles(smiles); }

std::optional<MolGraph> keep_if_valid(MolGraph mol) {
  if (mol.empty() || !validate(mol).valid) return std::nullopt;
  return mol;
}

std::vector<int> atoms_with_hydrogen(const MolGraph& mol) {
  const auto p = perceive(mol);
  std::vector<int> out;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    if (p.hydrogens[a] > 0) out.push_back(a);
  }
  return out;
}

// Plain atoms only: bracket atoms carry charges or hydrogen counts that an
// element swap would leave inconsistent.
bool is_plain(const Atom& atom) { return !atom.explicit_h && atom.formal_charge == 0 && atom.stereo.empty(); }

std::optional<MolGraph> swap_terminal(const MolGraph& mol, Rng& rng) {
  const auto terminals = editing::terminal_atoms(mol);
  if (terminals.empty() || mol.num_atoms() < 2) return std::nullopt;
  MolGraph out = mol;
  const int t = rng.pick<int>(terminals);
  const auto old_element = mol.atom(t).element;
  const int parent = editing::remove_terminal(out, t);
  const auto group = fragment(rng.pick<std::string_view>(kSmallGroups));
  if (group.num_atoms() == 1 && group.atom(0).element == old_element) return std::nullopt;
  editing::attach_group(out, parent, group);
  return keep_if_valid(std::move(out));
}

std::optional<MolGraph> add_group(const MolGraph& mol, Rng& rng) {
  const auto sites = atoms_with_hydrogen(mol);
  if (sites.empty()) return std::nullopt;
  MolGraph out = mol;
  editing::attach_group(out, rng.pick<int>(sites), fragment(rng.pick<std::string_view>(kSmallGroups)));
  return keep_if_valid(std::move(out));
}

std::optional<MolGraph> remove_group(const MolGraph& mol, Rng& rng) {
  const auto terminals = editing::terminal_atoms(mol);
  if (terminals.empty() || mol.num_atoms() < 3) return std::nullopt;
  MolGraph out = mol;
  editing::remove_terminal(out, rng.pick<int>(terminals));
  return keep_if_valid(std::move(out));
}

// Replaces a terminal atom with a single atom of another element.
std::optional<MolGraph> swap_terminal_atom(const MolGraph& mol, Rng& rng) {
  const auto terminals = editing::terminal_atoms(mol);
  if (terminals.empty() || mol.num_atoms() < 2) return std::nullopt;
  const int t = rng.pick<int>(terminals);
  if (!is_plain(mol.atom(t))) return std::nullopt;
  const Element e = kTerminalElements[static_cast<std::size_t>(rng.uniform_int(0, kTerminalElements.size() - 1))];
  if (e == mol.atom(t).element) return std::nullopt;
  MolGraph out = mol;
  out.atom(t).element = e;
  return keep_if_valid(std::move(out));
}

std::optional<MolGraph> mutate_atom(const MolGraph& mol, Rng& rng, const std::function<bool(Element, Element)>& allow) {
  std::vector<std::pair<int, Element>> options;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    const Atom& atom = mol.atom(a);
    // Core atoms only; terminal groups belong to the substituent editor.
    if (!is_plain(atom) || mol.degree(a) < 2) continue;
    for (Element e : kMutationTargets) {
      if (e == atom.element || !allow(atom.element, e)) continue;
      if (atom.aromatic && !can_be_aromatic(e)) continue;
      options.emplace_back(a, e);
    }
  }
  if (options.empty()) return std::nullopt;
  const auto [a, e] = options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
  MolGraph out = mol;
  out.atom(a).element = e;
  return keep_if_valid(std::move(out));
}

bool is_halogen(Element e) { return e == Element::F || e == Element::Cl || e == Element::Br || e == Element::I; }

std::optional<MolGraph> append_ring(const MolGraph& mol, Rng& rng) {
  const auto sites = atoms_with_hydrogen(mol);
  if (sites.empty()) return std::nullopt;
  MolGraph out = mol;
  editing::attach_group(out, rng.pick<int>(sites), fragment(rng.pick<std::string_view>(kRingGroups)));
  return keep_if_valid(std::move(out));
}

std::vector<int> distances_from(const MolGraph& mol, int from) {
  std::vector<int> dist(static_cast<std::size_t>(mol.num_atoms()), -1);
  std::vector<int> queue{from};
  dist[from] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (const auto& nb : mol.neighbors(queue[i])) {
      if (dist[nb.atom] < 0) {
        dist[nb.atom] = dist[queue[i]] + 1;
        queue.push_back(nb.atom);
      }
    }
  }
  return dist;
}

// Closes a 3- to 6-membered ring between two aliphatic atoms.
std::optional<MolGraph> cyclize(const MolGraph& mol, Rng& rng) {
  std::vector<int> sites;
  for (int a : atoms_with_hydrogen(mol)) {
    if (!mol.atom(a).aromatic) sites.push_back(a);
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a : sites) {
    const auto dist = distances_from(mol, a);
    for (int b : sites) {
      if (b > a && dist[b] >= 2 && dist[b] <= 5) pairs.emplace_back(a, b);
    }
  }
  if (pairs.empty()) return std::nullopt;
  const auto [a, b] = pairs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pairs.size()) - 1))];
  MolGraph out = mol;
  for (int x : {a, b}) {
    if (out.atom(x).explicit_h) out.atom(x).explicit_h = *out.atom(x).explicit_h - 1;
  }
  out.add_bond(a, b, BondOrder::single);
  return keep_if_valid(std::move(out));
}

// Aliphatic ring atoms of degree 2 whose ring bonds are single.
std::vector<int> plain_ring_links(const MolGraph& mol) {
  const auto p = perceive(mol);
  std::vector<int> out;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    if (!p.ring_atom[a] || mol.atom(a).aromatic || !is_plain(mol.atom(a)) || mol.degree(a) != 2) continue;
    bool single = true;
    for (const auto& nb : mol.neighbors(a)) single = single && mol.bond(nb.bond).order == BondOrder::single;
    if (single) out.push_back(a);
  }
  return out;
}

std::optional<MolGraph> contract_ring(const MolGraph& mol, Rng& rng) {
  const auto ring_size = editing::smallest_ring_size(mol);
  std::vector<int> options;
  for (int a : plain_ring_links(mol)) {
    const auto nbs = mol.neighbors(a);
    if (ring_size[a] >= 4 && !mol.bond_between(nbs[0].atom, nbs[1].atom)) options.push_back(a);
  }
  if (options.empty()) return std::nullopt;
  const int x = rng.pick<int>(options);
  const auto nbs = mol.neighbors(x);
  int u = nbs[0].atom;
  int v = nbs[1].atom;
  MolGraph out = mol;
  out.remove_atom(x);
  if (u > x) --u;
  if (v > x) --v;
  out.add_bond(u, v, BondOrder::single);
  return keep_if_valid(std::move(out));
}

std::optional<MolGraph> expand_ring(const MolGraph& mol, Rng& rng) {
  const auto p = perceive(mol);
  const auto ring_size = editing::smallest_ring_size(mol);
  std::vector<int> options;
  for (int b = 0; b < mol.num_bonds(); ++b) {
    const Bond& bond = mol.bond(b);
    if (!p.ring_bond[b] || bond.order != BondOrder::single) continue;
    if (mol.atom(bond.begin).aromatic || mol.atom(bond.end).aromatic) continue;
    if (std::max(ring_size[bond.begin], ring_size[bond.end]) >= 7) continue;
    options.push_back(b);
  }
  if (options.empty()) return std::nullopt;
  const Bond bond = mol.bond(rng.pick<int>(options));
  MolGraph out = mol;
  out.remove_bond(bond.begin, bond.end);
  const int c = out.add_atom(Atom{});
  out.add_bond(bond.begin, c, BondOrder::single);
  out.add_bond(c, bond.end, BondOrder::single);
  return keep_if_valid(std::move(out));
}

std::optional<MolGraph> resize_ring(const MolGraph& mol, Rng& rng) {
  if (rng.bernoulli(0.5)) {
    if (auto out = contract_ring(mol, rng)) return out;
    return expand_ring(mol, rng);
  }
  if (auto out = expand_ring(mol, rng)) return out;
  return contract_ring(mol, rng);
}

std::vector<Edit> edits_for(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::substituent:
    case ProfileKind::flaky:
      return {swap_terminal, add_group, remove_group, swap_terminal_atom};
    case ProfileKind::mutation:
      return {
          [](const MolGraph& m, Rng& r) { return mutate_atom(m, r, [](Element from, Element) { return from != Element::C; }); },
          [](const MolGraph& m, Rng& r) { return mutate_atom(m, r, [](Element from, Element) { return from == Element::C; }); },
          [](const MolGraph& m, Rng& r) {
            return mutate_atom(m, r, [](Element from, Element to) { return is_halogen(from) && is_halogen(to); });
          },
          [](const MolGraph& m, Rng& r) { return mutate_atom(m, r, [](Element, Element) { return true; }); },
      };
    case ProfileKind::ring:
      return {append_ring, cyclize, resize_ring, append_ring};
  }
  return {};
}

std::string corrupt(const std::string& smiles, Rng& rng) {
  if (rng.bernoulli(0.5)) return smiles + "9";
  std::string out = smiles;
  out.insert(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(out.size()))), 1, '?');
  return out;
}

std::string canonical_or_raw(const std::string& smiles) {
  try {
    return canonicalize(smiles);
  } catch (const std::exception&) {
    return smiles;
  }
}

std::string render(std::string_view text, std::string_view smiles, const PropertySpec& objective) {
  const std::string goal = objective.direction == Direction::maximize ? "increase" : "decrease";
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      if (close != std::string_view::npos) {
        const auto key = text.substr(i + 1, close - i - 1);
        if (key == "smiles") {
          out += smiles;
        } else if (key == "property") {
          out += objective.id;
        } else if (key == "goal") {
          out += goal;
        } else {
          out += text.substr(i, close - i + 1);
        }
        i = close + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::invalid_structure: return "invalid_structure";
    case FailureKind::similarity_violation: return "similarity_violation";
    case FailureKind::no_improvement: return "no_improvement";
    case FailureKind::evaluator_error: return "evaluator_error";
  }
  return "unknown";
}

FailureKind failure_kind_from_string(std::string_view s) {
  for (auto k : {FailureKind::invalid_structure, FailureKind::similarity_violation, FailureKind::no_improvement,
                 FailureKind::evaluator_error}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown failure kind '" + std::string(s) + "'");
}

std::string_view failure_label(FailureKind kind) {
  switch (kind) {
    case FailureKind::invalid_structure: return "invalid SMILES";
    case FailureKind::similarity_violation: return "too dissimilar to the lead";
    case FailureKind::no_improvement: return "no property improvement";
    case FailureKind::evaluator_error: return "could not be evaluated";
  }
  return "rejected";
}

std::string Instruction::text() const {
  if (failed_cases.empty()) return base_text;
  std::string out = base_text;
  out += "\nDo not answer with any of these earlier attempts:";
  for (const auto& c : failed_cases) {
    out += "\n- " + c.smiles + ": " + std::string(failure_label(c.kind));
    if (!c.message.empty()) out += " (" + c.message + ")";
    out += ";";
  }
  return out;
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::substituent: return "substituent";
    case ProfileKind::mutation: return "mutation";
    case ProfileKind::ring: return "ring";
    case ProfileKind::flaky: return "flaky";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(std::string_view s) {
  for (auto k : {ProfileKind::substituent, ProfileKind::mutation, ProfileKind::ring, ProfileKind::flaky}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown tool profile '" + std::string(s) + "'");
}

double BehaviorProfile::effective_failure_probability(std::size_t failed_cases) const {
  return std::min(p_fail, std::max(floor, p_fail * std::pow(damping, static_cast<double>(failed_cases))));
}

std::array<std::string, kTemplateCount> default_templates(std::string_view focus) {
  const std::string f(focus);
  const std::string tail = " Give the edited molecule inside <SMILES>...</SMILES>.";
  return {
      "Swap one " + f + " of {smiles} for a different one to {goal} {property}." + tail,
      "Add a " + f + " to {smiles} so that {property} goes to {goal}." + tail,
      "Drop a " + f + " from {smiles} if that helps {goal} {property}." + tail,
      "Rearrange the " + f + "s of {smiles} to {goal} {property}." + tail,
      "Make the smallest " + f + " change to {smiles} that can {goal} {property}; keep the core intact." + tail,
      "Try a bolder " + f + " change to {smiles} to {goal} {property} as much as possible." + tail,
  };
}

ToolSpec builtin_tool(std::string_view tool_id) {
  ToolSpec spec;
  spec.tool_id = std::string(tool_id);
  BehaviorProfile profile;
  if (tool_id == "ToolA") {
    spec.description = "Terminal substituent editor: swaps, adds or removes small end groups.";
    spec.prompt_templates = default_templates("substituent");
    profile.kind = ProfileKind::substituent;
  } else if (tool_id == "ToolB") {
    spec.description = "Atom editor: changes one atom's element within valence limits.";
    spec.prompt_templates = default_templates("atom type");
    profile.kind = ProfileKind::mutation;
  } else if (tool_id == "ToolC") {
    spec.description = "Ring editor: appends, closes, contracts or expands rings.";
    spec.prompt_templates = default_templates("ring");
    profile.kind = ProfileKind::ring;
  } else if (tool_id == "ToolD") {
    spec.description = "Substituent editor with unreliable output formatting.";
    spec.prompt_templates = default_templates("substituent");
    profile.kind = ProfileKind::flaky;
  } else {
    throw std::invalid_argument("no builtin tool named '" + std::string(tool_id) + "'");
  }
  spec.builtin = profile;
  return spec;
}

std::vector<ToolSpec> default_tool_set() {
  return {builtin_tool("ToolA"), builtin_tool("ToolB"), builtin_tool("ToolC"), builtin_tool("ToolD")};
}

Instruction build_instruction(const ToolSpec& spec, int template_index, const PropertySpec& objective,
                              const std::vector<FailedCase>& failed_cases, std::string_view smiles) {
  if (template_index < 0 || template_index >= kTemplateCount) {
    throw std::out_of_range("template index " + std::to_string(template_index) + " outside 0-5");
  }
  Instruction out;
  out.template_index = template_index;
  out.property_id = objective.id;
  out.direction = objective.direction;
  out.base_text = render(spec.prompt_templates[static_cast<std::size_t>(template_index)], smiles, objective);
  const auto n = std::min(failed_cases.size(), kMaxFailedCases);
  out.failed_cases.assign(failed_cases.begin(), failed_cases.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::vector<std::string> extract_smiles_spans(std::string_view payload) {
  static constexpr std::string_view kOpen = "<SMILES>";
  static constexpr std::string_view kClose = "</SMILES>";
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = payload.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    const auto start = open + kOpen.size();
    const auto close = payload.find(kClose, start);
    if (close == std::string_view::npos) break;
    out.emplace_back(payload.substr(start, close - start));
    pos = close + kClose.size();
  }
  return out;
}

std::string simulated_tool_step(const BehaviorProfile& profile, const MolGraph& mol, const Instruction& instruction,
                                std::uint64_t seed) {
  if (instruction.template_index < 0 || instruction.template_index >= kTemplateCount) {
    throw std::out_of_range("template index outside 0-5");
  }
  Rng rng(seed);
  const auto edits = edits_for(profile.kind);
  const std::string input = canonical_form(mol);

  std::set<std::string> avoid{input};
  for (const auto& c : instruction.failed_cases) avoid.insert(canonical_or_raw(c.smiles));

  // Indices 0-3 favour one edit type; 4 and 5 pick freely.
  const int index = instruction.template_index;
  const int proposals = kProposalCount[static_cast<std::size_t>(index)];
  std::vector<std::pair<std::string, MolGraph>> pool;
  std::set<std::string> seen;
  for (int i = 0; i < proposals; ++i) {
    const std::size_t preferred = index < 4 ? static_cast<std::size_t>(index) % edits.size()
                                            : static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(edits.size()) - 1));
    for (int attempt = 0; attempt < 8; ++attempt) {
      const std::size_t which = rng.bernoulli(0.6) ? preferred
                                                   : static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(edits.size()) - 1));
      auto edited = edits[which](mol, rng);
      if (!edited) continue;
      auto canon = canonical_form(*edited);
      if (avoid.contains(canon)) continue;
      if (seen.insert(canon).second) pool.emplace_back(std::move(canon), std::move(*edited));
      break;
    }
  }

  std::string chosen = input;
  if (!pool.empty()) {
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const double greedy = instruction.failed_cases.empty() ? 0.7 : 0.9;
    if (is_builtin_property(instruction.property_id) && rng.bernoulli(greedy)) {
      const double sign = instruction.direction == Direction::maximize ? 1.0 : -1.0;
      std::size_t best = 0;
      double best_score = -INFINITY;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double score = sign * builtin_value(instruction.property_id, pool[i].second);
        if (score > best_score) {
          best_score = score;
          best = i;
        }
      }
      chosen = pool[best].first;
    } else {
      chosen = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))].first;
    }
  }

  if (profile.kind == ProfileKind::flaky &&
      rng.bernoulli(profile.effective_failure_probability(instruction.failed_cases.size()))) {
    return corrupt(chosen, rng);
  }
  return chosen;
}

ToolResult invoke(const ToolSpec& spec, const Instruction& instruction, const MolGraph& mol, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  ToolResult result;
  result.tool_id = spec.tool_id;
  if (spec.builtin) {
    auto candidate = simulated_tool_step(*spec.builtin, mol, instruction, seed);
    result.raw_payload = "<SMILES>" + candidate + "</SMILES>";
    result.candidates.push_back(std::move(candidate));
  } else {
    if (!spec.endpoint) throw ToolUnavailable("tool '" + spec.tool_id + "' has no endpoint");
    const json request = {{"tool_id", spec.tool_id},
                          {"smiles", canonical_form(mol)},
                          {"property_id", instruction.property_id},
                          {"direction", std::string(to_string(instruction.direction))},
                          {"instruction_text", instruction.text()}};
    std::string reply;
    try {
      reply = spec.endpoint->exchange(request.dump());
    } catch (const TransportError& e) {
      throw ToolUnavailable(e.what());
    }
    // A JSON string reply is unwrapped so that multi-line text can travel on
    // one line; anything else is taken as-is.
    result.raw_payload = reply;
    const auto doc = json::parse(reply, nullptr, false);
    if (!doc.is_discarded() && doc.is_string()) result.raw_payload = doc.get<std::string>();
    result.candidates = extract_smiles_spans(result.raw_payload);
  }
  result.latency = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace leadopt

#include "leadopt/testbed.hpp"

#include <array>
#include <set>
#include <string_view>

#include "leadopt/editing.hpp"
#include "leadopt/smiles.hpp"

namespace leadopt::testbed {

namespace {

constexpr std::array<std::string_view, 16> kScaffolds{
    "c1ccccc1",          "c1ccncc1",         "c1ccc2ccccc2c1",  "c1ccc2[nH]ccc2c1",
    "c1ccsc1",           "C1CCNCC1",         "C1CCCCC1",        "C1COCCN1",
    "c1ccc(cc1)-c1ccccc1", "c1ccc2ncccc2c1", "c1ccoc1",         "c1cncnc1",
    "c1ccc2[nH]cnc2c1",  "C1Cc2ccccc2CN1",   "C1CCCC1",         "c1ccc(cc1)N1CCNCC1",
};

// Root atom first.
constexpr std::array<std::string_view, 20> kSubstituents{
    "C",     "CC",    "O",         "N",          "F",      "Cl",   "Br",
    "C(=O)O", "C(=O)N", "OC",      "C#N",        "N(C)C",  "C(F)(F)F", "S(=O)(=O)N",
    "NC(=O)C", "CO",  "CCN",       "c1ccccc1",   "OCC(=O)O", "CN",
};

constexpr std::array<std::string_view, 3> kAromaticRings{"c1ccccc1", "c1ccncc1", "c1ccsc1"};

MolGraph parse_fragment(std::string_view smiles) { return parse_smiles(smiles); }

std::vector<int> sites_with_hydrogen(const MolGraph& mol, int min_h = 1) {
  const auto p = perceive(mol);
  std::vector<int> out;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    if (p.hydrogens[a] >= min_h) out.push_back(a);
  }
  return out;
}

bool attach_random(Rng& rng, MolGraph& mol, const MolGraph& group) {
  const auto sites = sites_with_hydrogen(mol);
  if (sites.empty()) return false;
  MolGraph trial = mol;
  editing::attach_group(trial, rng.pick<int>(sites), group);
  if (!validate(trial).valid) return false;
  mol = std::move(trial);
  return true;
}

int graph_distance(const MolGraph& mol, int from, int to) {
  std::vector<int> dist(mol.num_atoms(), -1);
  std::vector<int> queue{from};
  dist[from] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const int u = queue[i];
    if (u == to) return dist[u];
    for (const auto& nb : mol.neighbors(u)) {
      if (dist[nb.atom] < 0) {
        dist[nb.atom] = dist[u] + 1;
        queue.push_back(nb.atom);
      }
    }
  }
  return -1;
}

}  // namespace

MolGraph random_molecule(Rng& rng, int atoms) {
  static constexpr std::array<Element, 8> kElements{Element::C, Element::N,  Element::O,  Element::S,
                                                    Element::F, Element::Cl, Element::Br, Element::P};
  static constexpr std::array<double, 8> kWeights{0.60, 0.12, 0.12, 0.04, 0.04, 0.04, 0.02, 0.02};

  MolGraph mol;
  mol.add_atom(Atom{});
  int guard = 0;
  while (mol.num_atoms() < atoms && ++guard < atoms * 20) {
    if (rng.bernoulli(0.08) && atoms - mol.num_atoms() >= 6) {
      attach_random(rng, mol, parse_fragment(rng.pick<std::string_view>(kAromaticRings)));
      continue;
    }
    const Element e = kElements[rng.weighted_index(kWeights)];
    const auto p = perceive(mol);
    std::vector<int> sites;
    for (int a = 0; a < mol.num_atoms(); ++a) {
      if (p.hydrogens[a] >= 1) sites.push_back(a);
    }
    if (sites.empty()) break;
    const int site = rng.pick<int>(sites);
    BondOrder order = BondOrder::single;
    const bool can_double = p.hydrogens[site] >= 2 && !mol.atom(site).aromatic &&
                            (e == Element::C || e == Element::N || e == Element::O || e == Element::S);
    if (can_double && rng.bernoulli(0.12)) order = BondOrder::double_;
    Atom atom;
    atom.element = e;
    MolGraph atom_graph;
    atom_graph.add_atom(atom);
    MolGraph trial = mol;
    editing::attach_group(trial, site, atom_graph, 0, order);
    if (validate(trial).valid) mol = std::move(trial);
  }

  const int closures = rng.uniform_int(0, 2);
  for (int c = 0; c < closures; ++c) {
    const auto p = perceive(mol);
    std::vector<int> sites;
    for (int a = 0; a < mol.num_atoms(); ++a) {
      if (p.hydrogens[a] >= 1 && !mol.atom(a).aromatic) sites.push_back(a);
    }
    if (sites.size() < 2) break;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int a = rng.pick<int>(sites);
      const int b = rng.pick<int>(sites);
      if (a == b || mol.bond_between(a, b)) continue;
      const int d = graph_distance(mol, a, b);
      if (d < 3 || d > 6) continue;
      MolGraph trial = mol;
      trial.add_bond(a, b, BondOrder::single);
      if (validate(trial).valid) {
        mol = std::move(trial);
        break;
      }
    }
  }
  return mol;
}

std::vector<GeneratedLead> generate_lead_set(std::uint64_t family_seed, std::uint64_t member_seed, int count,
                                             const LeadSetOptions& options) {
  std::vector<MolGraph> families;
  for (int f = 0; f < options.families; ++f) {
    Rng rng(derive_seed(derive_seed(family_seed, "family"), static_cast<std::uint64_t>(f)));
    MolGraph base = parse_fragment(rng.pick<std::string_view>(kScaffolds));
    int added = 0;
    for (int guard = 0; added < options.base_groups && guard < 50; ++guard) {
      if (attach_random(rng, base, parse_fragment(rng.pick<std::string_view>(kSubstituents)))) ++added;
    }
    families.push_back(std::move(base));
  }

  Rng rng(derive_seed(member_seed, "members"));
  std::vector<GeneratedLead> out;
  std::set<std::string> seen;
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < count * 200; ++attempt) {
    const int family = rng.uniform_int(0, options.families - 1);
    MolGraph mol = families[static_cast<std::size_t>(family)];
    const int extra = rng.uniform_int(options.min_extra, options.max_extra);
    for (int e = 0, guard = 0; e < extra && guard < 20; ++guard) {
      if (attach_random(rng, mol, parse_fragment(rng.pick<std::string_view>(kSubstituents)))) ++e;
    }
    if (mol.num_atoms() > 40) continue;
    auto canon = canonical_form(mol);
    if (seen.insert(canon).second) out.push_back({std::move(canon), family});
  }
  return out;
}

std::vector<std::string> generate_leads(std::uint64_t family_seed, std::uint64_t member_seed, int count,
                                        const LeadSetOptions& options) {
  std::vector<std::string> out;
  for (auto& lead : generate_lead_set(family_seed, member_seed, count, options)) out.push_back(std::move(lead.smiles));
  return out;
}

}  // namespace leadopt::testbed

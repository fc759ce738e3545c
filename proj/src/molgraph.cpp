#include "leadopt/molgraph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>

namespace leadopt {

namespace {

struct ElementInfo {
  Element element;
  std::string_view symbol;
};

constexpr std::array<ElementInfo, 10> kElements{{
    {Element::B, "B"},
    {Element::C, "C"},
    {Element::N, "N"},
    {Element::O, "O"},
    {Element::F, "F"},
    {Element::P, "P"},
    {Element::S, "S"},
    {Element::Cl, "Cl"},
    {Element::Br, "Br"},
    {Element::I, "I"},
}};

constexpr std::array<int, 1> kV0{0};
constexpr std::array<int, 1> kV1{1};
constexpr std::array<int, 1> kV2{2};
constexpr std::array<int, 1> kV3{3};
constexpr std::array<int, 1> kV4{4};
constexpr std::array<int, 2> kV35{3, 5};
constexpr std::array<int, 3> kV135{1, 3, 5};
constexpr std::array<int, 3> kV246{2, 4, 6};

int bond_order_value(BondOrder order) {
  switch (order) {
    case BondOrder::single: return 1;
    case BondOrder::double_: return 2;
    case BondOrder::triple: return 3;
    case BondOrder::aromatic: return 1;
  }
  return 1;
}

// Marks bonds that lie on a cycle (i.e. are not bridges).
std::vector<bool> find_ring_bonds(const MolGraph& mol) {
  const int n = mol.num_atoms();
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> ring(mol.num_bonds(), true);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_bond) {
    disc[u] = low[u] = timer++;
    for (const auto& nb : mol.neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      if (disc[nb.atom] < 0) {
        dfs(nb.atom, nb.bond);
        low[u] = std::min(low[u], low[nb.atom]);
        if (low[nb.atom] > disc[u]) ring[nb.bond] = false;
      } else {
        low[u] = std::min(low[u], disc[nb.atom]);
      }
    }
  };
  for (int i = 0; i < n; ++i) {
    if (disc[i] < 0) dfs(i, -1);
  }
  return ring;
}

// Perfect matching of the atoms that need a double bond over aromatic bonds.
// Backtracking on the most constrained atom first; ring systems are small.
class KekuleMatcher {
 public:
  KekuleMatcher(const MolGraph& mol, std::vector<bool> needs)
      : mol_(mol), needs_(std::move(needs)), mate_bond_(mol.num_atoms(), -1) {}

  bool solve() { return search(); }
  const std::vector<int>& mate_bond() const { return mate_bond_; }

 private:
  bool available(int atom) const { return needs_[atom] && mate_bond_[atom] < 0; }

  bool search() {
    if (++nodes_ > kNodeLimit) return false;
    int best = -1;
    int best_options = 1 << 30;
    for (int a = 0; a < mol_.num_atoms(); ++a) {
      if (!available(a)) continue;
      int options = 0;
      for (const auto& nb : mol_.neighbors(a)) {
        if (mol_.bond(nb.bond).order == BondOrder::aromatic && available(nb.atom)) ++options;
      }
      if (options < best_options) {
        best = a;
        best_options = options;
      }
    }
    if (best < 0) return true;
    if (best_options == 0) return false;
    for (const auto& nb : mol_.neighbors(best)) {
      if (mol_.bond(nb.bond).order != BondOrder::aromatic || !available(nb.atom)) continue;
      mate_bond_[best] = mate_bond_[nb.atom] = nb.bond;
      if (search()) return true;
      mate_bond_[best] = mate_bond_[nb.atom] = -1;
    }
    return false;
  }

  static constexpr long kNodeLimit = 200000;
  const MolGraph& mol_;
  std::vector<bool> needs_;
  std::vector<int> mate_bond_;
  long nodes_ = 0;
};

int smallest_allowed_at_least(Element e, int charge, int value) {
  for (int v : allowed_valences(e, charge)) {
    if (v >= value) return v;
  }
  return -1;
}

}  // namespace

std::string_view element_symbol(Element e) noexcept {
  for (const auto& info : kElements) {
    if (info.element == e) return info.symbol;
  }
  return "?";
}

std::optional<Element> element_from_symbol(std::string_view symbol) noexcept {
  for (const auto& info : kElements) {
    if (info.symbol == symbol) return info.element;
  }
  return std::nullopt;
}

int atomic_number(Element e) noexcept { return static_cast<int>(e); }

bool can_be_aromatic(Element e) noexcept {
  switch (e) {
    case Element::B:
    case Element::C:
    case Element::N:
    case Element::O:
    case Element::P:
    case Element::S:
      return true;
    default:
      return false;
  }
}

std::span<const int> allowed_valences(Element e, int charge) noexcept {
  switch (e) {
    case Element::C:
      if (charge == 0) return kV4;
      if (charge == 1 || charge == -1) return kV3;
      break;
    case Element::N:
      if (charge == 0) return kV3;
      if (charge == 1) return kV4;
      if (charge == -1) return kV2;
      break;
    case Element::O:
      if (charge == 0) return kV2;
      if (charge == 1) return kV3;
      if (charge == -1) return kV1;
      break;
    case Element::S:
      if (charge == 0) return kV246;
      if (charge == 1) return kV35;
      if (charge == -1) return kV135;
      break;
    case Element::P:
      if (charge == 0) return kV35;
      if (charge == 1) return kV4;
      if (charge == -1) return kV2;
      break;
    case Element::F:
    case Element::Cl:
    case Element::Br:
    case Element::I:
      if (charge == 0) return kV1;
      if (charge == -1) return kV0;
      break;
    case Element::B:
      if (charge == 0) return kV3;
      if (charge == -1) return kV4;
      break;
  }
  return {};
}

int MolGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return num_atoms() - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order, char direction) {
  if (a == b) throw std::invalid_argument("bond endpoints must differ");
  if (a < 0 || b < 0 || a >= num_atoms() || b >= num_atoms()) {
    throw std::invalid_argument("bond endpoint out of range");
  }
  if (bond_between(a, b)) throw std::invalid_argument("duplicate bond");
  const int index = num_bonds();
  bonds_.push_back(Bond{a, b, order, direction});
  adjacency_[a].push_back({b, index});
  adjacency_[b].push_back({a, index});
  return index;
}

void MolGraph::remove_atom(int index) {
  if (index < 0 || index >= num_atoms()) throw std::out_of_range("atom index");
  std::vector<Bond> kept;
  kept.reserve(bonds_.size());
  for (auto b : bonds_) {
    if (b.begin == index || b.end == index) continue;
    if (b.begin > index) --b.begin;
    if (b.end > index) --b.end;
    kept.push_back(b);
  }
  atoms_.erase(atoms_.begin() + index);
  bonds_ = std::move(kept);
  rebuild_adjacency();
}

void MolGraph::remove_bond(int a, int b) {
  auto idx = bond_between(a, b);
  if (!idx) throw std::invalid_argument("no such bond");
  bonds_.erase(bonds_.begin() + *idx);
  rebuild_adjacency();
}

void MolGraph::set_bond_order(int bond, BondOrder order) {
  bonds_.at(static_cast<std::size_t>(bond)).order = order;
}

std::optional<int> MolGraph::bond_between(int a, int b) const {
  if (a < 0 || a >= num_atoms()) return std::nullopt;
  for (const auto& nb : adjacency_[a]) {
    if (nb.atom == b) return nb.bond;
  }
  return std::nullopt;
}

void MolGraph::rebuild_adjacency() {
  adjacency_.assign(atoms_.size(), {});
  for (int i = 0; i < num_bonds(); ++i) {
    adjacency_[bonds_[i].begin].push_back({bonds_[i].end, i});
    adjacency_[bonds_[i].end].push_back({bonds_[i].begin, i});
  }
}

std::vector<std::vector<int>> MolGraph::components() const {
  std::vector<std::vector<int>> out;
  std::vector<bool> seen(atoms_.size(), false);
  for (int start = 0; start < num_atoms(); ++start) {
    if (seen[start]) continue;
    std::vector<int> comp;
    std::deque<int> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      comp.push_back(u);
      for (const auto& nb : adjacency_[u]) {
        if (!seen[nb.atom]) {
          seen[nb.atom] = true;
          queue.push_back(nb.atom);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

MolGraph MolGraph::induced_subgraph(std::span<const int> atoms) const {
  std::vector<int> remap(atoms_.size(), -1);
  MolGraph out;
  for (int old : atoms) remap[old] = out.add_atom(atoms_[old]);
  for (const auto& b : bonds_) {
    if (remap[b.begin] >= 0 && remap[b.end] >= 0) {
      out.add_bond(remap[b.begin], remap[b.end], b.order, b.direction);
    }
  }
  return out;
}

MolGraph MolGraph::permuted(std::span<const int> perm) const {
  if (perm.size() != atoms_.size()) throw std::invalid_argument("permutation size");
  std::vector<int> inverse(atoms_.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) inverse.at(perm[i]) = static_cast<int>(i);
  MolGraph out;
  for (int old : inverse) out.add_atom(atoms_.at(old));
  for (const auto& b : bonds_) out.add_bond(perm[b.begin], perm[b.end], b.order, b.direction);
  return out;
}

Perception perceive(const MolGraph& mol) {
  const int n = mol.num_atoms();
  Perception p;
  p.ring_bond = find_ring_bonds(mol);
  p.ring_atom.assign(n, false);
  for (int i = 0; i < mol.num_bonds(); ++i) {
    if (p.ring_bond[i]) {
      p.ring_atom[mol.bond(i).begin] = true;
      p.ring_atom[mol.bond(i).end] = true;
    }
  }

  // An aromatic atom takes one double bond in the Kekule form when its
  // smallest fitting valence leaves room for it.
  std::vector<bool> needs(n, false);
  bool any_aromatic_bond = false;
  for (int a = 0; a < n; ++a) {
    const Atom& atom = mol.atom(a);
    int sum = atom.explicit_h.value_or(0);
    int aromatic_bonds = 0;
    for (const auto& nb : mol.neighbors(a)) {
      sum += bond_order_value(mol.bond(nb.bond).order);
      if (mol.bond(nb.bond).order == BondOrder::aromatic) ++aromatic_bonds;
    }
    if (aromatic_bonds > 0) any_aromatic_bond = true;
    if (!atom.aromatic) continue;
    const int target = smallest_allowed_at_least(atom.element, atom.formal_charge, sum);
    needs[a] = target >= 0 && target - sum >= 1;
  }

  p.kekule_order.resize(mol.num_bonds());
  for (int i = 0; i < mol.num_bonds(); ++i) p.kekule_order[i] = bond_order_value(mol.bond(i).order);
  if (any_aromatic_bond || std::find(needs.begin(), needs.end(), true) != needs.end()) {
    KekuleMatcher matcher(mol, needs);
    p.kekule_ok = matcher.solve();
    if (p.kekule_ok) {
      for (int a = 0; a < n; ++a) {
        if (matcher.mate_bond()[a] >= 0) p.kekule_order[matcher.mate_bond()[a]] = 2;
      }
    }
  }

  p.hydrogens.assign(n, 0);
  p.valence.assign(n, 0);
  for (int a = 0; a < n; ++a) {
    const Atom& atom = mol.atom(a);
    int sum = 0;
    for (const auto& nb : mol.neighbors(a)) sum += p.kekule_order[nb.bond];
    if (atom.explicit_h) {
      p.hydrogens[a] = std::max(0, *atom.explicit_h);
    } else {
      const int target = smallest_allowed_at_least(atom.element, atom.formal_charge, sum);
      p.hydrogens[a] = target >= 0 ? target - sum : 0;
    }
    p.valence[a] = sum + p.hydrogens[a];
  }
  return p;
}

ValidityReport validate(const MolGraph& mol) {
  ValidityReport report;
  auto add = [&](int atom, std::string rule, std::string message) {
    report.violations.push_back({atom, std::move(rule), std::move(message)});
  };
  if (mol.empty()) {
    add(-1, "empty", "molecule has no atoms");
    report.valid = false;
    return report;
  }

  const Perception p = perceive(mol);
  for (int a = 0; a < mol.num_atoms(); ++a) {
    const Atom& atom = mol.atom(a);
    const std::string sym(element_symbol(atom.element));
    if (atom.explicit_h && *atom.explicit_h < 0) {
      add(a, "explicit_h", "negative hydrogen count on " + sym);
    }
    const auto allowed = allowed_valences(atom.element, atom.formal_charge);
    if (allowed.empty()) {
      add(a, "charge", "unsupported charge " + std::to_string(atom.formal_charge) + " on " + sym);
    } else if (p.valence[a] > allowed.back()) {
      add(a, "valence",
          sym + " valence " + std::to_string(p.valence[a]) + " exceeds " +
              std::to_string(allowed.back()));
    }
    if (atom.aromatic) {
      if (!can_be_aromatic(atom.element)) {
        add(a, "aromatic_element", sym + " cannot be aromatic");
      } else if (!p.ring_atom[a]) {
        add(a, "aromatic_acyclic", "aromatic atom outside a ring");
      }
    }
  }
  for (int i = 0; i < mol.num_bonds(); ++i) {
    const Bond& b = mol.bond(i);
    if (b.order != BondOrder::aromatic) continue;
    if (!mol.atom(b.begin).aromatic || !mol.atom(b.end).aromatic) {
      add(b.begin, "aromatic_bond", "aromatic bond between non-aromatic atoms");
    } else if (!p.ring_bond[i]) {
      add(b.begin, "aromatic_acyclic", "aromatic bond outside a ring");
    }
  }
  if (!p.kekule_ok) add(-1, "kekule", "no consistent Kekule assignment for aromatic atoms");
  if (mol.components().size() > 1) add(-1, "disconnected", "molecule has several fragments");

  report.valid = report.violations.empty();
  return report;
}

RingInfo ring_info(const MolGraph& mol) {
  RingInfo info;
  if (mol.empty()) return info;
  info.ring_count = mol.num_bonds() - mol.num_atoms() + static_cast<int>(mol.components().size());

  // Aromatic subgraph cyclomatic number.
  {
    std::vector<int> parent(mol.num_atoms());
    for (int i = 0; i < mol.num_atoms(); ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    int edges = 0;
    int cycles = 0;
    for (const auto& b : mol.bonds()) {
      if (b.order != BondOrder::aromatic) continue;
      ++edges;
      int ra = find(b.begin), rb = find(b.end);
      if (ra == rb) {
        ++cycles;
      } else {
        parent[ra] = rb;
      }
    }
    info.aromatic_ring_count = edges > 0 ? cycles : 0;
  }

  const auto ring_bonds = find_ring_bonds(mol);
  for (int i = 0; i < mol.num_bonds(); ++i) {
    if (!ring_bonds[i]) continue;
    const Bond& skip = mol.bond(i);
    std::vector<int> dist(mol.num_atoms(), -1);
    std::deque<int> queue{skip.begin};
    dist[skip.begin] = 0;
    while (!queue.empty() && dist[skip.end] < 0) {
      int u = queue.front();
      queue.pop_front();
      for (const auto& nb : mol.neighbors(u)) {
        if (nb.bond == i || dist[nb.atom] >= 0) continue;
        dist[nb.atom] = dist[u] + 1;
        queue.push_back(nb.atom);
      }
    }
    if (dist[skip.end] >= 0) info.largest_ring = std::max(info.largest_ring, dist[skip.end] + 1);
  }
  return info;
}

}  // namespace leadopt

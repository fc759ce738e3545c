#include "leadopt/editing.hpp"

#include <deque>

namespace leadopt::editing {

int available_hydrogens(const MolGraph& mol, int atom) {
  return perceive(mol).hydrogens.at(static_cast<std::size_t>(atom));
}

int attach_group(MolGraph& mol, int site, const MolGraph& group, int group_root, BondOrder order) {
  const int offset = mol.num_atoms();
  for (const auto& atom : group.atoms()) mol.add_atom(atom);
  for (const auto& b : group.bonds()) mol.add_bond(b.begin + offset, b.end + offset, b.order, b.direction);
  const int k = order == BondOrder::double_ ? 2 : order == BondOrder::triple ? 3 : 1;
  for (int a : {site, group_root + offset}) {
    auto& atom = mol.atom(a);
    if (atom.explicit_h) atom.explicit_h = std::max(0, *atom.explicit_h - k);
  }
  mol.add_bond(site, group_root + offset, order);
  return group_root + offset;
}

int remove_terminal(MolGraph& mol, int terminal) {
  if (mol.degree(terminal) != 1) throw std::invalid_argument("atom is not terminal");
  const auto nb = mol.neighbors(terminal).front();
  const int k = mol.bond(nb.bond).order == BondOrder::double_   ? 2
                : mol.bond(nb.bond).order == BondOrder::triple ? 3
                                                               : 1;
  auto& parent = mol.atom(nb.atom);
  if (parent.explicit_h) parent.explicit_h = *parent.explicit_h + k;
  mol.remove_atom(terminal);
  return nb.atom > terminal ? nb.atom - 1 : nb.atom;
}

std::vector<int> terminal_atoms(const MolGraph& mol) {
  std::vector<int> out;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    if (mol.degree(a) == 1 && mol.bond(mol.neighbors(a).front().bond).order == BondOrder::single) {
      out.push_back(a);
    }
  }
  return out;
}

std::vector<int> smallest_ring_size(const MolGraph& mol) {
  const auto p = perceive(mol);
  std::vector<int> out(mol.num_atoms(), 0);
  for (int i = 0; i < mol.num_bonds(); ++i) {
    if (!p.ring_bond[i]) continue;
    const Bond& skip = mol.bond(i);
    std::vector<int> dist(mol.num_atoms(), -1);
    std::deque<int> queue{skip.begin};
    dist[skip.begin] = 0;
    while (!queue.empty() && dist[skip.end] < 0) {
      const int u = queue.front();
      queue.pop_front();
      for (const auto& nb : mol.neighbors(u)) {
        if (nb.bond == i || dist[nb.atom] >= 0) continue;
        dist[nb.atom] = dist[u] + 1;
        queue.push_back(nb.atom);
      }
    }
    if (dist[skip.end] < 0) continue;
    const int size = dist[skip.end] + 1;
    for (int a : {skip.begin, skip.end}) {
      if (out[a] == 0 || size < out[a]) out[a] = size;
    }
  }
  return out;
}

int count_heteroatoms(const MolGraph& mol) {
  int n = 0;
  for (const auto& atom : mol.atoms()) {
    if (atom.element != Element::C) ++n;
  }
  return n;
}

}  // namespace leadopt::editing

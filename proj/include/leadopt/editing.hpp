#pragma once

#include <vector>

#include "leadopt/molgraph.hpp"

// Graph edit primitives shared by the simulated editors and the lead
// generator. Edits keep hydrogen bookkeeping consistent: bracket atoms have
// their explicit hydrogen count adjusted, organic atoms re-derive theirs.
namespace leadopt::editing {

// Hydrogens on `atom` that a new bond could replace.
int available_hydrogens(const MolGraph& mol, int atom);

// Copies `group` into `mol` and bonds group atom `group_root` to `site`.
// Returns the new index of the group root.
int attach_group(MolGraph& mol, int site, const MolGraph& group, int group_root = 0,
                 BondOrder order = BondOrder::single);

// Removes a degree-1 atom and returns its former neighbour's index in the
// edited graph.
int remove_terminal(MolGraph& mol, int terminal);

// Degree-1 atoms attached by a single bond.
std::vector<int> terminal_atoms(const MolGraph& mol);

// Size of the smallest cycle through each atom, 0 for acyclic atoms.
std::vector<int> smallest_ring_size(const MolGraph& mol);

// Non-carbon heavy atoms.
int count_heteroatoms(const MolGraph& mol);

}  // namespace leadopt::editing

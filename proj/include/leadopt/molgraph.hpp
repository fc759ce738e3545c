#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leadopt {

// A molecule (or other argument) that does not satisfy an operation's
// precondition, e.g. fingerprinting a graph that fails validate().
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Heavy-atom elements accepted by the parser, keyed by atomic number.
enum class Element : std::uint8_t {
  B = 5,
  C = 6,
  N = 7,
  O = 8,
  F = 9,
  P = 15,
  S = 16,
  Cl = 17,
  Br = 35,
  I = 53,
};

std::string_view element_symbol(Element e) noexcept;
std::optional<Element> element_from_symbol(std::string_view symbol) noexcept;
int atomic_number(Element e) noexcept;
// Elements that may be written as lowercase aromatic atoms (b, c, n, o, p, s).
bool can_be_aromatic(Element e) noexcept;

// Allowed total valences (bond orders + hydrogens) for an element at a given
// formal charge, ascending. Empty when the charge state is unsupported.
//
//   C:4 (C+/C-:3)   N:3 (N+:4, N-:2)   O:2 (O+:3, O-:1)
//   S:2,4,6 (S+:3,5, S-:1,3,5)   P:3,5 (P+:4, P-:2)
//   F/Cl/Br/I:1 (X-:0)   B:3 (B-:4)
std::span<const int> allowed_valences(Element e, int charge) noexcept;

enum class BondOrder : std::uint8_t { single = 1, double_ = 2, triple = 3, aromatic = 4 };

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  // Set for bracket atoms; organic-subset atoms derive their hydrogens.
  std::optional<int> explicit_h;
  bool aromatic = false;
  // Opaque chirality annotation ("@", "@@", ...); ignored by validation.
  std::string stereo;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::single;
  // '/' or '\\' as written between begin and end, 0 otherwise. Opaque.
  char direction = 0;

  int other(int atom) const noexcept { return atom == begin ? end : begin; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

class MolGraph {
 public:
  MolGraph() = default;

  int add_atom(Atom atom);
  // Throws std::invalid_argument on self-loops, out-of-range endpoints or a
  // duplicate bond between the same pair.
  int add_bond(int a, int b, BondOrder order, char direction = 0);

  // Removes an atom and its bonds; later atom indices shift down by one.
  void remove_atom(int index);
  void remove_bond(int a, int b);
  void set_bond_order(int bond, BondOrder order);
  Atom& atom(int index) { return atoms_.at(static_cast<std::size_t>(index)); }
  const Atom& atom(int index) const { return atoms_.at(static_cast<std::size_t>(index)); }
  const Bond& bond(int index) const { return bonds_.at(static_cast<std::size_t>(index)); }

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::span<const Bond> bonds() const noexcept { return bonds_; }
  std::span<const Neighbor> neighbors(int atom) const {
    return adjacency_.at(static_cast<std::size_t>(atom));
  }
  std::optional<int> bond_between(int a, int b) const;

  int num_atoms() const noexcept { return static_cast<int>(atoms_.size()); }
  int num_bonds() const noexcept { return static_cast<int>(bonds_.size()); }
  int degree(int atom) const { return static_cast<int>(neighbors(atom).size()); }
  bool empty() const noexcept { return atoms_.empty(); }

  // Connected components as lists of atom indices, ordered by first atom.
  std::vector<std::vector<int>> components() const;
  // Subgraph induced by the given atoms, in the given order.
  MolGraph induced_subgraph(std::span<const int> atoms) const;
  // Relabels atoms so that new index perm[i] holds old atom i.
  MolGraph permuted(std::span<const int> perm) const;

 private:
  void rebuild_adjacency();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Derived per-atom and per-bond data needed by validation, hydrogen counting,
// fingerprints and the writers.
struct Perception {
  // Bond orders with aromatic bonds resolved to 1 or 2 by a Kekule matching.
  std::vector<int> kekule_order;
  bool kekule_ok = true;
  std::vector<int> hydrogens;      // total attached hydrogens per atom
  std::vector<int> valence;        // bond-order sum + hydrogens
  std::vector<bool> ring_atom;
  std::vector<bool> ring_bond;
};

Perception perceive(const MolGraph& mol);

struct Violation {
  int atom;  // -1 for whole-molecule rules
  std::string rule;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidityReport {
  bool valid = true;
  std::vector<Violation> violations;
};

// Rule ids: "empty", "disconnected", "charge", "valence", "explicit_h",
// "aromatic_element", "aromatic_acyclic", "aromatic_bond", "kekule".
ValidityReport validate(const MolGraph& mol);

// Ring statistics used by the surrogate evaluators and the editors.
struct RingInfo {
  int ring_count = 0;           // cyclomatic number
  int aromatic_ring_count = 0;  // cyclomatic number of the aromatic-bond subgraph
  int largest_ring = 0;         // max over ring bonds of the smallest cycle through it
};

RingInfo ring_info(const MolGraph& mol);

}  // namespace leadopt

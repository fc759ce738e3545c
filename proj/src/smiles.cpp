#include "leadopt/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <tuple>

namespace leadopt {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

struct PendingBond {
  bool set = false;
  BondOrder order = BondOrder::single;
  char direction = 0;
};

struct OpenRing {
  int atom;
  PendingBond bond;
  std::size_t position;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : s_(text) {}

  MolGraph parse(const ParseOptions& options) {
    while (i_ < s_.size()) step();
    if (pending_.set) fail<SyntaxError>("dangling bond symbol", s_.size() - 1);
    if (!branches_.empty()) fail<SyntaxError>("unclosed branch", s_.size());
    if (!rings_.empty()) {
      const auto& [digit, ring] = *rings_.begin();
      fail<RingError>("ring closure " + std::to_string(digit) + " never closed", ring.position);
    }
    if (prev_ < 0) fail<SyntaxError>("SMILES ends without an atom", s_.size());

    // Implicit aromatic bonds that ended up outside any ring join two aromatic
    // systems (e.g. biphenyl) and are single bonds.
    if (!implicit_aromatic_.empty()) {
      const auto ring_bond = perceive(mol_).ring_bond;
      for (int b : implicit_aromatic_) {
        if (!ring_bond[b]) mol_.set_bond_order(b, BondOrder::single);
      }
    }

    auto components = mol_.components();
    if (components.size() > 1) {
      if (!options.keep_largest_fragment) {
        fail<FragmentError>("SMILES has " + std::to_string(components.size()) + " fragments",
                            std::string::npos);
      }
      auto largest = std::max_element(components.begin(), components.end(),
                                      [](const auto& a, const auto& b) { return a.size() < b.size(); });
      mol_ = mol_.induced_subgraph(*largest);
    }

    if (options.validate) {
      auto report = validate(mol_);
      if (!report.valid) {
        const auto& first = report.violations.front();
        std::string message = first.rule + ": " + first.message;
        if (first.atom >= 0) message += " (atom " + std::to_string(first.atom) + ")";
        for (const auto& v : report.violations) {
          if (v.rule == "kekule" || v.rule.rfind("aromatic", 0) == 0) {
            throw AromaticityError(v.rule + ": " + v.message, std::string::npos);
          }
        }
        throw ValenceError(message, std::move(report.violations));
      }
    }
    return std::move(mol_);
  }

 private:
  template <typename E>
  [[noreturn]] void fail(const std::string& message, std::size_t pos) const {
    std::string what = message;
    if (pos != std::string::npos) what += " at position " + std::to_string(pos);
    throw E(what, pos);
  }

  void step() {
    const char c = s_[i_];
    switch (c) {
      case '[':
        bracket_atom();
        return;
      case '-':
      case '=':
      case '#':
      case ':':
      case '/':
      case '\\':
        bond_symbol(c);
        return;
      case '(':
        if (prev_ < 0 || pending_.set) fail<SyntaxError>("branch must follow an atom", i_);
        if (i_ + 1 < s_.size() && s_[i_ + 1] == ')') fail<SyntaxError>("empty branch", i_);
        branches_.push_back(prev_);
        ++i_;
        return;
      case ')':
        if (branches_.empty()) fail<SyntaxError>("unbalanced ')'", i_);
        if (pending_.set) fail<SyntaxError>("bond symbol before ')'", i_);
        prev_ = branches_.back();
        branches_.pop_back();
        ++i_;
        return;
      case '.':
        if (prev_ < 0 || pending_.set) fail<SyntaxError>("misplaced '.'", i_);
        if (!branches_.empty()) fail<SyntaxError>("'.' inside a branch", i_);
        prev_ = -1;
        ++i_;
        return;
      case '%':
        if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
          fail<SyntaxError>("'%' must be followed by two digits", i_);
        }
        ring_bond((s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0'), i_);
        i_ += 3;
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_bond(c - '0', i_);
      ++i_;
      return;
    }
    organic_atom();
  }

  void organic_atom() {
    const std::size_t start = i_;
    const char c = s_[i_];
    std::optional<Element> element;
    bool aromatic = false;
    if (c == 'C' && i_ + 1 < s_.size() && s_[i_ + 1] == 'l') {
      element = Element::Cl;
      i_ += 2;
    } else if (c == 'B' && i_ + 1 < s_.size() && s_[i_ + 1] == 'r') {
      element = Element::Br;
      i_ += 2;
    } else {
      switch (c) {
        case 'B': element = Element::B; break;
        case 'C': element = Element::C; break;
        case 'N': element = Element::N; break;
        case 'O': element = Element::O; break;
        case 'P': element = Element::P; break;
        case 'S': element = Element::S; break;
        case 'F': element = Element::F; break;
        case 'I': element = Element::I; break;
        case 'b': element = Element::B; aromatic = true; break;
        case 'c': element = Element::C; aromatic = true; break;
        case 'n': element = Element::N; aromatic = true; break;
        case 'o': element = Element::O; aromatic = true; break;
        case 'p': element = Element::P; aromatic = true; break;
        case 's': element = Element::S; aromatic = true; break;
        default:
          fail<SyntaxError>(std::string("unexpected character '") + c + "'", i_);
      }
      ++i_;
    }
    Atom atom;
    atom.element = *element;
    atom.aromatic = aromatic;
    add_atom(std::move(atom), start);
  }

  void bracket_atom() {
    const std::size_t start = i_;
    const auto close = s_.find(']', i_);
    if (close == std::string_view::npos) fail<SyntaxError>("unterminated bracket atom", i_);
    std::string_view body = s_.substr(i_ + 1, close - i_ - 1);
    std::size_t k = 0;
    auto at_end = [&] { return k >= body.size(); };

    if (!at_end() && std::isdigit(static_cast<unsigned char>(body[k]))) {
      fail<SyntaxError>("isotopes are not supported", start + 1);
    }
    if (at_end()) fail<SyntaxError>("empty bracket atom", start);

    Atom atom;
    const char first = body[k];
    if (std::islower(static_cast<unsigned char>(first))) {
      auto e = element_from_symbol(std::string(1, static_cast<char>(std::toupper(first))));
      if (!e || !can_be_aromatic(*e)) {
        fail<SyntaxError>(std::string("unsupported aromatic symbol '") + first + "'", start + 1);
      }
      atom.element = *e;
      atom.aromatic = true;
      ++k;
    } else if (std::isupper(static_cast<unsigned char>(first))) {
      std::optional<Element> e;
      if (k + 1 < body.size() && std::islower(static_cast<unsigned char>(body[k + 1]))) {
        e = element_from_symbol(body.substr(k, 2));
        if (e) k += 2;
      }
      if (!e) {
        e = element_from_symbol(body.substr(k, 1));
        if (!e) fail<SyntaxError>("unsupported element in '" + std::string(body) + "'", start + 1);
        ++k;
      }
      // Reject two-letter symbols outside the supported set (e.g. [Si]).
      if (k < body.size() && std::islower(static_cast<unsigned char>(body[k]))) {
        fail<SyntaxError>("unsupported element in '" + std::string(body) + "'", start + 1);
      }
      atom.element = *e;
    } else {
      fail<SyntaxError>("bracket atom must start with an element symbol", start + 1);
    }

    if (!at_end() && body[k] == '@') {
      std::size_t j = k;
      while (j < body.size() && body[j] == '@') ++j;
      if (j - k > 2) fail<SyntaxError>("malformed chirality", start + 1 + k);
      atom.stereo = std::string(body.substr(k, j - k));
      k = j;
    }

    int h = 0;
    if (!at_end() && body[k] == 'H') {
      ++k;
      h = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(body[k]))) {
        h = body[k] - '0';
        ++k;
      }
    }
    atom.explicit_h = h;

    if (!at_end() && (body[k] == '+' || body[k] == '-')) {
      const char sign = body[k];
      int magnitude = 1;
      ++k;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(body[k]))) {
        magnitude = body[k] - '0';
        ++k;
      } else {
        while (!at_end() && body[k] == sign) {
          ++magnitude;
          ++k;
        }
      }
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (!at_end()) {
      fail<SyntaxError>("unexpected '" + std::string(body.substr(k)) + "' in bracket atom",
                        start + 1 + k);
    }
    i_ = close + 1;
    add_atom(std::move(atom), start);
  }

  void bond_symbol(char c) {
    if (prev_ < 0) fail<SyntaxError>("bond symbol must follow an atom", i_);
    if (pending_.set) fail<SyntaxError>("consecutive bond symbols", i_);
    pending_.set = true;
    switch (c) {
      case '-': pending_.order = BondOrder::single; break;
      case '=': pending_.order = BondOrder::double_; break;
      case '#': pending_.order = BondOrder::triple; break;
      case ':': pending_.order = BondOrder::aromatic; break;
      default:
        pending_.order = BondOrder::single;
        pending_.direction = c;
        break;
    }
    ++i_;
  }

  BondOrder implicit_order(int a, int b) const {
    return mol_.atom(a).aromatic && mol_.atom(b).aromatic ? BondOrder::aromatic : BondOrder::single;
  }

  void connect(int a, int b, const PendingBond& bond, std::size_t pos) {
    try {
      if (bond.set) {
        mol_.add_bond(a, b, bond.order, bond.direction);
      } else {
        const auto order = implicit_order(a, b);
        const int index = mol_.add_bond(a, b, order);
        if (order == BondOrder::aromatic) implicit_aromatic_.push_back(index);
      }
    } catch (const std::invalid_argument& e) {
      fail<RingError>(e.what(), pos);
    }
  }

  void add_atom(Atom atom, std::size_t pos) {
    const int index = mol_.add_atom(std::move(atom));
    if (prev_ >= 0) connect(prev_, index, pending_, pos);
    pending_ = {};
    prev_ = index;
  }

  void ring_bond(int digit, std::size_t pos) {
    if (prev_ < 0) fail<SyntaxError>("ring closure must follow an atom", pos);
    auto it = rings_.find(digit);
    if (it == rings_.end()) {
      rings_.emplace(digit, OpenRing{prev_, pending_, pos});
      pending_ = {};
      return;
    }
    OpenRing open = it->second;
    rings_.erase(it);
    if (open.atom == prev_) fail<RingError>("ring closure to the same atom", pos);
    PendingBond bond = open.bond;
    if (pending_.set) {
      if (bond.set && (bond.order != pending_.order)) {
        fail<SyntaxError>("conflicting ring closure bond symbols", pos);
      }
      bond = pending_;
    }
    connect(open.atom, prev_, bond, pos);
    pending_ = {};
  }

  std::string_view s_;
  std::size_t i_ = 0;
  MolGraph mol_;
  int prev_ = -1;
  PendingBond pending_;
  std::vector<int> branches_;
  std::map<int, OpenRing> rings_;
  std::vector<int> implicit_aromatic_;
};

// ---------------------------------------------------------------------------
// Writer

std::string charge_text(int charge) {
  if (charge == 0) return {};
  std::string out(1, charge > 0 ? '+' : '-');
  const int magnitude = charge > 0 ? charge : -charge;
  if (magnitude > 1) out += std::to_string(magnitude);
  return out;
}

class SmilesWriter {
 public:
  SmilesWriter(const MolGraph& mol, const Perception& perception, std::span<const int> rank,
               bool canonical)
      : mol_(mol), p_(perception), rank_(rank), canonical_(canonical) {}

  std::string write() {
    const int n = mol_.num_atoms();
    visited_.assign(n, false);
    children_.assign(n, {});
    ring_at_.assign(n, {});
    preorder_.assign(n, -1);
    std::vector<bool> recorded(mol_.num_bonds(), false);

    std::vector<int> by_rank(n);
    for (int i = 0; i < n; ++i) by_rank[i] = i;
    std::sort(by_rank.begin(), by_rank.end(), [&](int a, int b) { return rank_[a] < rank_[b]; });

    std::vector<int> roots;
    for (int start : by_rank) {
      if (visited_[start]) continue;
      roots.push_back(start);
      explore(start, -1, recorded);
    }

    std::string out;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      if (r > 0) out += '.';
      emit(roots[r], out);
    }
    return out;
  }

 private:
  std::vector<Neighbor> ordered_neighbors(int u) const {
    std::vector<Neighbor> nbs(mol_.neighbors(u).begin(), mol_.neighbors(u).end());
    std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& a, const Neighbor& b) {
      return rank_[a.atom] < rank_[b.atom];
    });
    return nbs;
  }

  void explore(int u, int parent_bond, std::vector<bool>& recorded) {
    visited_[u] = true;
    preorder_[u] = counter_++;
    for (const auto& nb : ordered_neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      if (!visited_[nb.atom]) {
        children_[u].push_back(nb);
        recorded[nb.bond] = true;
        explore(nb.atom, nb.bond, recorded);
      } else if (!recorded[nb.bond]) {
        recorded[nb.bond] = true;
        // nb.atom was emitted earlier: it opens, u closes.
        ring_at_[nb.atom].push_back({u, nb.bond});
        ring_at_[u].push_back({nb.atom, nb.bond});
      }
    }
  }

  std::string atom_token(int a) const {
    const Atom& atom = mol_.atom(a);
    const int h = p_.hydrogens[a];
    bool bare = atom.formal_charge == 0;
    if (canonical_) {
      bare = bare && bare_hydrogens_match(a);
    } else {
      bare = bare && !atom.explicit_h.has_value() && atom.stereo.empty();
    }
    std::string symbol(element_symbol(atom.element));
    if (atom.aromatic) {
      for (auto& ch : symbol) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (bare) return symbol;
    std::string out = "[" + symbol;
    if (!canonical_) out += atom.stereo;
    if (h > 0) {
      out += 'H';
      if (h > 1) out += std::to_string(h);
    }
    out += charge_text(atom.formal_charge);
    out += ']';
    return out;
  }

  // Would an organic-subset token for this atom derive the same hydrogens and
  // Kekule role when re-parsed?
  bool bare_hydrogens_match(int a) const {
    const Atom& atom = mol_.atom(a);
    const auto allowed = allowed_valences(atom.element, 0);
    auto smallest = [&](int v) {
      for (int x : allowed) {
        if (x >= v) return x;
      }
      return -1;
    };
    if (!atom.aromatic) {
      int sum = 0;
      for (const auto& nb : mol_.neighbors(a)) sum += p_.kekule_order[nb.bond];
      const int target = smallest(sum);
      return target >= 0 && target - sum == p_.hydrogens[a];
    }
    int s = 0;
    bool has_double = false;
    for (const auto& nb : mol_.neighbors(a)) {
      const Bond& b = mol_.bond(nb.bond);
      if (b.order == BondOrder::aromatic) {
        s += 1;
        if (p_.kekule_order[nb.bond] == 2) has_double = true;
      } else {
        s += static_cast<int>(b.order);
      }
    }
    const int target = smallest(s);
    if (target < 0) return false;
    const bool needs = target - s >= 1;
    return needs == has_double && target - s - (needs ? 1 : 0) == p_.hydrogens[a];
  }

  std::string bond_token(int bond) const {
    const Bond& b = mol_.bond(bond);
    const bool both_aromatic = mol_.atom(b.begin).aromatic && mol_.atom(b.end).aromatic;
    switch (b.order) {
      case BondOrder::single:
        if (!canonical_ && b.direction) return std::string(1, b.direction);
        return both_aromatic ? "-" : "";
      case BondOrder::double_: return "=";
      case BondOrder::triple: return "#";
      case BondOrder::aromatic: return both_aromatic ? "" : ":";
    }
    return "";
  }

  void emit(int u, std::string& out) {
    out += atom_token(u);

    // Closures first (partner emitted earlier), then openings, each ordered
    // by partner rank.
    auto rings = ring_at_[u];
    std::sort(rings.begin(), rings.end(), [&](const Neighbor& a, const Neighbor& b) {
      const bool ca = preorder_[a.atom] < preorder_[u];
      const bool cb = preorder_[b.atom] < preorder_[u];
      if (ca != cb) return ca;
      return rank_[a.atom] < rank_[b.atom];
    });
    for (const auto& r : rings) {
      if (preorder_[r.atom] < preorder_[u]) {
        const int digit = digit_of_bond_.at(r.bond);
        out += digit_text(digit);
        free_digits_.insert(digit);
      } else {
        const int digit = take_digit();
        digit_of_bond_[r.bond] = digit;
        out += bond_token(r.bond);
        out += digit_text(digit);
      }
    }

    const auto& kids = children_[u];
    for (std::size_t c = 0; c < kids.size(); ++c) {
      const bool last = c + 1 == kids.size();
      if (!last) out += '(';
      out += bond_token(kids[c].bond);
      emit(kids[c].atom, out);
      if (!last) out += ')';
    }
  }

  int take_digit() {
    if (!free_digits_.empty()) {
      const int d = *free_digits_.begin();
      free_digits_.erase(free_digits_.begin());
      return d;
    }
    return next_digit_++;
  }

  static std::string digit_text(int d) {
    if (d < 10) return std::to_string(d);
    return "%" + std::to_string(d);
  }

  const MolGraph& mol_;
  const Perception& p_;
  std::span<const int> rank_;
  bool canonical_;
  std::vector<bool> visited_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> ring_at_;
  std::vector<int> preorder_;
  int counter_ = 0;
  std::map<int, int> digit_of_bond_;
  std::set<int> free_digits_;
  int next_digit_ = 1;
};

// ---------------------------------------------------------------------------
// Canonical ranking: iterative refinement plus individualization search.

class Canonicalizer {
 public:
  explicit Canonicalizer(const MolGraph& mol) : mol_(mol), p_(perceive(mol)) {}

  std::string run() {
    const int n = mol_.num_atoms();
    if (n == 0) return {};
    std::vector<std::vector<int>> initial(n);
    for (int a = 0; a < n; ++a) {
      const Atom& atom = mol_.atom(a);
      initial[a] = {mol_.degree(a),          atomic_number(atom.element), atom.aromatic ? 1 : 0,
                    atom.formal_charge,      p_.hydrogens[a],             p_.ring_atom[a] ? 1 : 0};
    }
    search(compress(initial));
    return best_;
  }

 private:
  static std::vector<int> compress(const std::vector<std::vector<int>>& signatures) {
    std::vector<std::vector<int>> unique = signatures;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    std::vector<int> classes(signatures.size());
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      classes[i] = static_cast<int>(std::lower_bound(unique.begin(), unique.end(), signatures[i]) -
                                    unique.begin());
    }
    return classes;
  }

  static int count_classes(const std::vector<int>& classes) {
    return classes.empty() ? 0 : *std::max_element(classes.begin(), classes.end()) + 1;
  }

  std::vector<int> refine(std::vector<int> classes) const {
    const int n = mol_.num_atoms();
    int count = count_classes(classes);
    while (true) {
      std::vector<std::vector<int>> sig(n);
      for (int a = 0; a < n; ++a) {
        std::vector<std::pair<int, int>> nbs;
        for (const auto& nb : mol_.neighbors(a)) {
          nbs.emplace_back(static_cast<int>(mol_.bond(nb.bond).order), classes[nb.atom]);
        }
        std::sort(nbs.begin(), nbs.end());
        sig[a].push_back(classes[a]);
        for (const auto& [order, cls] : nbs) {
          sig[a].push_back(order);
          sig[a].push_back(cls);
        }
      }
      auto next = compress(sig);
      const int next_count = count_classes(next);
      classes = std::move(next);
      if (next_count == count) return classes;
      count = next_count;
    }
  }

  bool twins(int u, int v) const {
    auto profile = [&](int x, int skip) {
      std::vector<std::pair<int, int>> out;
      for (const auto& nb : mol_.neighbors(x)) {
        if (nb.atom == skip) continue;
        out.emplace_back(nb.atom, static_cast<int>(mol_.bond(nb.bond).order));
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    return profile(u, v) == profile(v, u);
  }

  void search(std::vector<int> classes) {
    if (leaves_ >= kLeafLimit) return;
    classes = refine(std::move(classes));
    const int n = mol_.num_atoms();
    if (count_classes(classes) == n) {
      ++leaves_;
      SmilesWriter writer(mol_, p_, classes, true);
      std::string s = writer.write();
      if (!have_best_ || s < best_) {
        best_ = std::move(s);
        have_best_ = true;
      }
      return;
    }
    // First non-singleton class.
    std::vector<int> size(n, 0);
    for (int c : classes) ++size[c];
    int target = 0;
    while (size[target] < 2) ++target;
    std::vector<int> tried;
    for (int a = 0; a < n; ++a) {
      if (classes[a] != target) continue;
      if (std::any_of(tried.begin(), tried.end(), [&](int t) { return twins(a, t); })) continue;
      tried.push_back(a);
      std::vector<int> split(n);
      for (int b = 0; b < n; ++b) split[b] = 2 * classes[b] + 1;
      split[a] = 2 * target;
      std::vector<std::vector<int>> sig(n);
      for (int b = 0; b < n; ++b) sig[b] = {split[b]};
      search(compress(sig));
      if (leaves_ >= kLeafLimit) return;
    }
  }

  // Bounds the individualization tree on highly symmetric inputs.
  static constexpr int kLeafLimit = 4096;
  const MolGraph& mol_;
  Perception p_;
  std::string best_;
  bool have_best_ = false;
  int leaves_ = 0;
};

}  // namespace

MolGraph parse_smiles(std::string_view text, const ParseOptions& options) {
  const auto trimmed = trim(text);
  if (trimmed.empty()) throw SyntaxError("empty SMILES", 0);
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    if (is_space(trimmed[i])) throw SyntaxError("whitespace inside SMILES at position " + std::to_string(i), i);
  }
  return SmilesParser(trimmed).parse(options);
}

std::string write_smiles(const MolGraph& mol) {
  const Perception p = perceive(mol);
  std::vector<int> rank(mol.num_atoms());
  for (int i = 0; i < mol.num_atoms(); ++i) rank[i] = i;
  return SmilesWriter(mol, p, rank, false).write();
}

std::string canonical_form(const MolGraph& mol) { return Canonicalizer(mol).run(); }

std::string canonicalize(std::string_view text) { return canonical_form(parse_smiles(text)); }

bool isomorphic(const MolGraph& a, const MolGraph& b) {
  return a.num_atoms() == b.num_atoms() && a.num_bonds() == b.num_bonds() &&
         canonical_form(a) == canonical_form(b);
}

}  // namespace leadopt

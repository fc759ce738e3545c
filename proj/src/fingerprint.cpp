#include "leadopt/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <utility>

namespace leadopt {

namespace {

using BondSet = std::vector<std::uint64_t>;

void insert_bond(BondSet& set, int bond) {
  set[static_cast<std::size_t>(bond) / 64] |= std::uint64_t{1} << (bond % 64);
}

void merge_into(BondSet& dst, const BondSet& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
}

}  // namespace

Fingerprint::Fingerprint(int nbits, int radius) : nbits_(nbits), radius_(radius) {
  if (nbits <= 0 || nbits % 64 != 0) throw std::invalid_argument("fingerprint width must be a positive multiple of 64");
  if (radius < 0) throw std::invalid_argument("fingerprint radius must be non-negative");
  words_.assign(static_cast<std::size_t>(nbits / 64), 0);
}

void Fingerprint::set(int bit) {
  if (bit < 0 || bit >= nbits_) throw std::out_of_range("fingerprint bit");
  words_[static_cast<std::size_t>(bit / 64)] |= std::uint64_t{1} << (bit % 64);
}

bool Fingerprint::test(int bit) const {
  if (bit < 0 || bit >= nbits_) throw std::out_of_range("fingerprint bit");
  return (words_[static_cast<std::size_t>(bit / 64)] >> (bit % 64)) & 1U;
}

int Fingerprint::popcount() const {
  int count = 0;
  for (auto w : words_) count += std::popcount(w);
  return count;
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> out;
  for (int b = 0; b < nbits_; ++b) {
    if (test(b)) out.push_back(b);
  }
  return out;
}

std::string Fingerprint::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(nbits_ / 4), '0');
  for (int j = 0; j < nbits_ / 4; ++j) {
    const auto word = words_[static_cast<std::size_t>(j / 16)];
    out[static_cast<std::size_t>(j)] = kDigits[(word >> ((j % 16) * 4)) & 0xF];
  }
  return out;
}

Fingerprint Fingerprint::from_hex(std::string_view hex, int nbits, int radius) {
  Fingerprint fp(nbits, radius);
  if (hex.size() != static_cast<std::size_t>(nbits / 4)) {
    throw std::invalid_argument("fingerprint hex length does not match width");
  }
  for (std::size_t j = 0; j < hex.size(); ++j) {
    const char c = hex[j];
    std::uint64_t nibble;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw std::invalid_argument("fingerprint hex must be lowercase hexadecimal");
    }
    fp.words_[j / 16] |= nibble << ((j % 16) * 4);
  }
  return fp;
}

Similarity::Similarity(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("similarity outside [0, 1]");
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ (mix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

Fingerprint morgan_fp(const MolGraph& mol, const FingerprintParams& params) {
  if (params.radius < 0) throw InvalidInput("fingerprint radius must be non-negative");
  if (params.nbits < 256 || !std::has_single_bit(static_cast<unsigned>(params.nbits))) {
    throw InvalidInput("fingerprint width must be a power of two >= 256");
  }
  if (!validate(mol).valid) throw InvalidInput("cannot fingerprint an invalid molecule");

  const int n = mol.num_atoms();
  const auto mask = static_cast<std::uint64_t>(params.nbits - 1);
  const Perception p = perceive(mol);
  Fingerprint fp(params.nbits, params.radius);

  std::vector<std::uint64_t> ids(n);
  for (int a = 0; a < n; ++a) {
    const Atom& atom = mol.atom(a);
    std::uint64_t h = mix64(static_cast<std::uint64_t>(atomic_number(atom.element)));
    h = hash_combine(h, static_cast<std::uint64_t>(mol.degree(a)));
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(atom.formal_charge)));
    h = hash_combine(h, static_cast<std::uint64_t>(p.hydrogens[a]));
    h = hash_combine(h, atom.aromatic ? 1U : 0U);
    h = hash_combine(h, p.ring_atom[a] ? 1U : 0U);
    ids[a] = h;
    fp.set(static_cast<int>(h & mask));
  }

  const std::size_t words = static_cast<std::size_t>((mol.num_bonds() + 63) / 64);
  std::vector<BondSet> env(n, BondSet(words, 0));
  std::set<BondSet> seen{BondSet(words, 0)};

  for (int r = 1; r <= params.radius; ++r) {
    std::vector<std::uint64_t> next(n);
    std::vector<BondSet> next_env = env;
    for (int a = 0; a < n; ++a) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> nbs;
      for (const auto& nb : mol.neighbors(a)) {
        nbs.emplace_back(static_cast<std::uint64_t>(mol.bond(nb.bond).order), ids[nb.atom]);
        insert_bond(next_env[a], nb.bond);
        merge_into(next_env[a], env[nb.atom]);
      }
      std::sort(nbs.begin(), nbs.end());
      std::uint64_t h = hash_combine(mix64(static_cast<std::uint64_t>(r)), ids[a]);
      for (const auto& [order, id] : nbs) h = hash_combine(hash_combine(h, order), id);
      next[a] = h;
    }

    std::vector<std::pair<BondSet, std::uint64_t>> round;
    round.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) round.emplace_back(next_env[a], next[a]);
    std::sort(round.begin(), round.end());
    for (std::size_t i = 0; i < round.size(); ++i) {
      if (i > 0 && round[i].first == round[i - 1].first) continue;
      if (!seen.insert(round[i].first).second) continue;
      fp.set(static_cast<int>(round[i].second & mask));
    }
    ids = std::move(next);
    env = std::move(next_env);
  }
  return fp;
}

Similarity tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits() != b.nbits() || a.radius() != b.radius()) {
    throw ShapeMismatch("fingerprints differ in width or radius");
  }
  int both = 0;
  int either = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    both += std::popcount(a.words()[i] & b.words()[i]);
    either += std::popcount(a.words()[i] | b.words()[i]);
  }
  if (either == 0) return Similarity(0.0);
  return Similarity(static_cast<double>(both) / static_cast<double>(either));
}

bool meets_constraint(const MolGraph& candidate, const MolGraph& lead, Similarity tau,
                      const FingerprintParams& params) {
  return tanimoto(morgan_fp(candidate, params), morgan_fp(lead, params)) >= tau;
}

}  // namespace leadopt

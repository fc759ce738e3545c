#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leadopt/molgraph.hpp"

namespace leadopt {

inline constexpr double kDefaultSimilarityThreshold = 0.5;

struct FingerprintParams {
  int radius = 2;
  int nbits = 2048;
  friend bool operator==(const FingerprintParams&, const FingerprintParams&) = default;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fixed-width bitset tagged with the parameters that produced it.
class Fingerprint {
 public:
  // nbits must be a positive multiple of 64; radius non-negative.
  Fingerprint(int nbits, int radius);

  void set(int bit);
  bool test(int bit) const;
  int popcount() const;
  int nbits() const noexcept { return nbits_; }
  int radius() const noexcept { return radius_; }
  std::vector<int> on_bits() const;
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  // Lowercase hex, nbits/4 characters. Character j holds bits 4j..4j+3 with
  // bit 4j as the nibble's least significant bit.
  std::string to_hex() const;
  static Fingerprint from_hex(std::string_view hex, int nbits, int radius);

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int nbits_;
  int radius_;
  std::vector<std::uint64_t> words_;
};

// Tanimoto value in [0, 1].
class Similarity {
 public:
  constexpr Similarity() = default;
  explicit Similarity(double value);
  double value() const noexcept { return value_; }
  friend auto operator<=>(const Similarity&, const Similarity&) = default;

 private:
  double value_ = 0.0;
};

// The 64-bit mixer used for environment identifiers (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

// Circular fingerprint. Atom seeds hash (atomic number, heavy degree, formal
// charge, total H, aromatic flag, ring membership). Each radius rehashes an
// atom's previous identifier with the sorted (bond order, neighbour id) list.
// For radius >= 1 an environment is dropped when its bond set already
// appeared (at a smaller radius, or for another atom at the same radius with
// a smaller identifier). Identifiers are folded modulo nbits.
//
// Requires a valid molecule, radius >= 0 and nbits a power of two >= 256.
Fingerprint morgan_fp(const MolGraph& mol, const FingerprintParams& params = {});

// |a & b| / |a | b|; 0 when both are empty. Throws ShapeMismatch when widths
// or radii differ.
Similarity tanimoto(const Fingerprint& a, const Fingerprint& b);

bool meets_constraint(const MolGraph& candidate, const MolGraph& lead,
                      Similarity tau = Similarity(kDefaultSimilarityThreshold),
                      const FingerprintParams& params = {});

}  // namespace leadopt

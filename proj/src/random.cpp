#include "leadopt/random.hpp"

#include "leadopt/fingerprint.hpp"

namespace leadopt {

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hash_combine(mix64(parent), h);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_combine(hash_combine(hash_combine(mix64(parent), a), b), c);
}

}  // namespace leadopt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leadopt/molgraph.hpp"

namespace leadopt {

// Base of every SMILES rejection. `position` is a byte offset into the
// trimmed input, or npos when the error concerns the whole molecule.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SyntaxError : public ParseError {
 public:
  using ParseError::ParseError;
};

class RingError : public ParseError {
 public:
  using ParseError::ParseError;
};

class FragmentError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Aromatic atoms that admit no Kekule form, or sit outside rings.
class AromaticityError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ValenceError : public ParseError {
 public:
  ValenceError(const std::string& what, std::vector<Violation> violations)
      : ParseError(what, std::string::npos), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct ParseOptions {
  // Run validate() and throw on violations.
  bool validate = true;
  // Keep the largest dot-separated component instead of throwing FragmentError.
  bool keep_largest_fragment = false;
};

MolGraph parse_smiles(std::string_view text, const ParseOptions& options = {});

// Depth-first writer following atom index order. The output re-parses to a
// graph isomorphic to `mol`.
std::string write_smiles(const MolGraph& mol);

// Stable identity string: identical for every atom relabeling of a graph.
// Stereo annotations are not part of the identity.
std::string canonical_form(const MolGraph& mol);

// Convenience: canonical_form(parse_smiles(text)).
std::string canonicalize(std::string_view text);

// True when both graphs have the same canonical form.
bool isomorphic(const MolGraph& a, const MolGraph& b);

}  // namespace leadopt

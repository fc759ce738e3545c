#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leadopt/molgraph.hpp"
#include "leadopt/random.hpp"

// Seeded molecule generators for the simulated testbed and property tests.
namespace leadopt::testbed {

// Random connected, valid heavy-atom graph with roughly `atoms` atoms: a
// grown tree of organic atoms with occasional double bonds, ring closures
// and attached aromatic rings.
MolGraph random_molecule(Rng& rng, int atoms);

struct LeadSetOptions {
  int families = 24;
  // Groups attached to a family's scaffold to form its shared core.
  int base_groups = 4;
  // Substituents added on top of a family's base decoration.
  int min_extra = 0;
  int max_extra = 2;
};

// Drug-like leads drawn from scaffold families. A family is a core ring
// system with a fixed base decoration; members add further substituents, so
// leads of one family share most of their structure. Families depend only on
// `family_seed`; members on `member_seed`. Returns canonical SMILES, unique.
struct GeneratedLead {
  std::string smiles;  // canonical
  int family = 0;
};

std::vector<GeneratedLead> generate_lead_set(std::uint64_t family_seed, std::uint64_t member_seed, int count,
                                             const LeadSetOptions& options = {});

// generate_lead_set without the family labels.
std::vector<std::string> generate_leads(std::uint64_t family_seed, std::uint64_t member_seed,
                                        int count, const LeadSetOptions& options = {});

}  // namespace leadopt::testbed

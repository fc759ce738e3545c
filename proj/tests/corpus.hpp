#pragma once

#include <array>
#include <string_view>

namespace leadopt::test {

// Curated SMILES covering the supported subset: aromatic heterocycles,
// charges, bracket hydrogens, stereo marks, two-digit ring labels.
inline constexpr std::array<std::string_view, 50> kCorpus{
    "C",
    "CC",
    "CCO",
    "OCC",
    "C=C",
    "C#N",
    "CC(=O)O",
    "CC(C)(C)C",
    "C1CC1",
    "C1CCCCC1",
    "c1ccccc1",
    "C1=CC=CC=C1",
    "c1ccncc1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "c1ccc2ncccc2c1",
    "c1cncnc1",
    "c1ccc(cc1)-c1ccccc1",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "O=C(O)CN1c2cccc3cccc(c23)S1(=O)=O",
    "CNC1CCC(c2ccc(Cl)c(Cl)c2)c2cc(C(=O)O)ccc21",
    "O=C(c1cc2cc(Nc3nccc(-c4ccccn4)n3)ccc2[nH]1)N1CCOCC1",
    "[NH4+]",
    "[O-]C(=O)C",
    "C[N+](C)(C)C",
    "C[n+]1ccccc1",
    "[O-][N+](=O)c1ccccc1",
    "FC(F)(F)c1ccc(Br)cc1I",
    "CS(=O)(=O)N",
    "COP(=O)(OC)OC",
    "B(O)(O)c1ccccc1",
    "C[C@H](N)C(=O)O",
    "C[C@@H](O)CC",
    "F/C=C/F",
    "C/C=C\\C",
    "C%10CCCCC%10",
    "C12CC1CC2",
    "C1CC2CCC1CC2",
    "c1ccc2c(c1)oc1ccccc12",
    "Clc1ccc(cc1)C(c1ccccc1)N1CCNCC1",
    "N#Cc1ccccc1C#N",
    "OC1C(O)C(O)C(O)C(O)C1O",
    "CCN(CC)CC",
    "S1C=CC=C1",
    "C1=CC2=CC=CC=C2C=C1",
};

}  // namespace leadopt::test

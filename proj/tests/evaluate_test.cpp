#include "leadopt/evaluate.hpp"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <json.hpp>

#include "corpus.hpp"
#include "leadopt/random.hpp"
#include "leadopt/smiles.hpp"
#include "leadopt/testbed.hpp"

namespace leadopt {
namespace {

using nlohmann::json;

PropertyValue pv(const std::string& id, double v) { return PropertyValue{v, id}; }

TEST(Surrogates, HandSummedValues) {
  EXPECT_NEAR(surrogate_logp(parse_smiles("CC")), 0.28, 1e-12);
  EXPECT_NEAR(surrogate_plogp(parse_smiles("c1ccccc1")), 1.74, 1e-12);
  // Aspirin: 6 aromatic C, 3 aliphatic C, 4 O.
  EXPECT_NEAR(surrogate_logp(parse_smiles("CC(=O)Oc1ccccc1C(=O)O")), 6 * 0.29 + 3 * 0.14 - 4 * 0.64, 1e-12);
  // Cyclooctane: 8 aliphatic C, ring penalty 2.
  EXPECT_NEAR(surrogate_plogp(parse_smiles("C1CCCCCCC1")), 8 * 0.14 - 2.0, 1e-12);
  EXPECT_NEAR(surrogate_logp(parse_smiles("ClC(Br)(I)F")), 0.14 + 0.65 + 0.86 + 1.12 + 0.21, 1e-12);
  EXPECT_NEAR(surrogate_logp(parse_smiles("OB(O)c1ccsc1")), 4 * 0.29 + 0.26 + 0.05 - 2 * 0.64, 1e-12);
  EXPECT_NEAR(surrogate_logp(parse_smiles("CP(C)C")), 3 * 0.14 + 0.12, 1e-12);
  // Balanced contributions give exactly zero, not a rounding residue.
  EXPECT_EQ(surrogate_logp(parse_smiles("CC(C(O)OCC(=O)O)c1cc(Cl)c(Br)nc1CO")), 0.0);
}

TEST(Surrogates, DrugLikenessSizeTermPeaksAt25Atoms) {
  // 25 heavy atoms, 6 of them N: the size factor is exactly 1, leaving the
  // heteroatom factor. A fraction of exactly 0.3 is impossible at 25 atoms.
  const std::string smiles = "NCCNCCNCCNCCNCCNCCCCCCCCC";
  const auto mol = parse_smiles(smiles);
  ASSERT_EQ(mol.num_atoms(), 25);
  const double hf = 6.0 / 25.0;
  EXPECT_DOUBLE_EQ(surrogate_dlk(mol), std::exp(-std::pow((hf - 0.3) / 0.3, 2)));
  // Same heteroatom fraction at 50 atoms is scored lower.
  const auto big = parse_smiles(smiles + smiles);
  EXPECT_LT(surrogate_dlk(big), surrogate_dlk(mol));
}

TEST(Surrogates, LogisticScoresInUnitInterval) {
  for (auto s : test::kCorpus) {
    const auto mol = parse_smiles(s);
    for (const auto& id : builtin_property_ids()) {
      const double v = builtin_value(id, mol);
      EXPECT_TRUE(std::isfinite(v)) << id << " " << s;
      if (id != "plogp") {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Surrogates, MutagenicityRisesWithAromaticRings) {
  const double one = surrogate_mutagenicity(parse_smiles("c1ccccc1"));
  const double two = surrogate_mutagenicity(parse_smiles("c1ccc(cc1)-c1ccccc1"));
  EXPECT_GT(two, one);
  const double x = 0.9 * 1 + 0.25 * 1.74 - 1.5;
  EXPECT_NEAR(one, 1.0 / (1.0 + std::exp(-x)), 1e-12);
}

TEST(PropertySpec, Directions) {
  EXPECT_EQ(builtin_property("mutagenicity").direction, Direction::minimize);
  for (const auto& id : {"plogp", "qed", "bbbp", "hia"}) EXPECT_EQ(builtin_property(id).direction, Direction::maximize);
  EXPECT_THROW(builtin_property("solubility"), InvalidInput);
}

TEST(Evaluate, DeterministicAndIsomorphismInvariant) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto mol = testbed::random_molecule(rng, rng.uniform_int(2, 25));
    std::vector<int> perm(static_cast<std::size_t>(mol.num_atoms()));
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    const auto copy = mol.permuted(perm);
    for (const auto& id : builtin_property_ids()) {
      const auto spec = builtin_property(id);
      EXPECT_EQ(evaluate(spec, mol).value, evaluate(spec, mol).value);
      EXPECT_EQ(evaluate(spec, mol).value, evaluate(spec, copy).value);
    }
  }
}

TEST(Evaluate, RejectsInvalidMolecule) {
  EXPECT_THROW(evaluate(builtin_property("qed"), MolGraph{}), InvalidInput);
}

TEST(IsImprovement, Examples) {
  const auto qed = builtin_property("qed");
  EXPECT_TRUE(is_improvement(qed, pv("qed", 0.55), pv("qed", 0.50)));
  const auto mut = builtin_property("mutagenicity");
  EXPECT_TRUE(is_improvement(mut, pv("mutagenicity", 0.60), pv("mutagenicity", 0.80)));
  EXPECT_FALSE(is_improvement(mut, pv("mutagenicity", 0.80), pv("mutagenicity", 0.60)));
  EXPECT_FALSE(is_improvement(qed, pv("qed", 0.5), pv("qed", 0.5)));
  EXPECT_THROW(is_improvement(qed, pv("hia", 0.5), pv("qed", 0.4)), PropertyMismatch);
}

TEST(IsImprovement, NeverBothWays) {
  Rng rng(8);
  for (const auto& id : builtin_property_ids()) {
    const auto spec = builtin_property(id);
    for (int i = 0; i < 200; ++i) {
      const auto a = pv(id, rng.uniform() - 0.5);
      const auto b = pv(id, rng.bernoulli(0.1) ? a.value : rng.uniform() - 0.5);
      EXPECT_FALSE(is_improvement(spec, a, b) && is_improvement(spec, b, a));
      const auto imp = relative_improvement(spec, b, a);
      if (is_improvement(spec, a, b) && imp.relative) EXPECT_GE(*imp.relative, 0.0);
    }
  }
}

TEST(RelativeImprovement, Examples) {
  const auto qed = builtin_property("qed");
  auto imp = relative_improvement(qed, pv("qed", 0.40), pv("qed", 0.50));
  ASSERT_TRUE(imp.relative);
  EXPECT_NEAR(*imp.relative, 0.25, 1e-12);
  EXPECT_NEAR(imp.absolute, 0.10, 1e-12);

  const auto mut = builtin_property("mutagenicity");
  imp = relative_improvement(mut, pv("mutagenicity", 0.80), pv("mutagenicity", 0.60));
  ASSERT_TRUE(imp.relative);
  EXPECT_NEAR(*imp.relative, 0.25, 1e-12);
  EXPECT_NEAR(imp.absolute, 0.20, 1e-12);

  imp = relative_improvement(qed, pv("qed", 0.0), pv("qed", 0.3));
  EXPECT_FALSE(imp.relative);
  EXPECT_TRUE(imp.zero_reference);

  // Regression: absolute is negative, no relative value.
  imp = relative_improvement(qed, pv("qed", 0.5), pv("qed", 0.4));
  EXPECT_FALSE(imp.relative);
  EXPECT_LT(imp.absolute, 0.0);

  // Negative initial value uses magnitudes.
  const auto plogp = builtin_property("plogp");
  imp = relative_improvement(plogp, pv("plogp", -2.0), pv("plogp", -1.0));
  ASSERT_TRUE(imp.relative);
  EXPECT_NEAR(*imp.relative, 0.5, 1e-12);
}

TEST(ExternalEvaluator, ParsesValuesAndErrors) {
  auto transport = std::make_shared<FunctionTransport>([](const std::string& line) {
    const auto req = json::parse(line);
    EXPECT_EQ(req.at("property_id"), "bbbp");
    return json{{"id", req.at("id")}, {"values", {0.5, nullptr, 2.0}}, {"errors", {{1, "no model"}}}}.dump();
  });
  ExternalEvaluator evaluator(transport);
  const auto out = evaluator.evaluate("bbbp", {"CC", "CO", "CN"});
  ASSERT_EQ(out.size(), 3U);
  EXPECT_EQ(out[0].value, 0.5);
  EXPECT_FALSE(out[1].value);
  EXPECT_EQ(out[1].error, "no model");
  EXPECT_EQ(out[2].value, 2.0);
}

TEST(ExternalEvaluator, FailuresBecomeUnavailable) {
  auto wrong_count = std::make_shared<FunctionTransport>([](const std::string&) { return R"({"values":[1.0]})"; });
  EXPECT_THROW(ExternalEvaluator(wrong_count).evaluate("qed", {"C", "CC"}), EvaluatorUnavailable);
  auto garbage = std::make_shared<FunctionTransport>([](const std::string&) { return "not json"; });
  EXPECT_THROW(ExternalEvaluator(garbage).evaluate("qed", {"C"}), EvaluatorUnavailable);
  auto broken = std::make_shared<FunctionTransport>([](const std::string&) -> std::string {
    throw TransportError("gone");
  });
  EXPECT_THROW(ExternalEvaluator(broken).evaluate("qed", {"C"}), EvaluatorUnavailable);
  auto wrong_id = std::make_shared<FunctionTransport>([](const std::string&) { return R"({"id":999,"values":[1.0]})"; });
  EXPECT_THROW(ExternalEvaluator(wrong_id).evaluate("qed", {"C"}), EvaluatorUnavailable);
}

TEST(ExternalEvaluator, DispatchThroughPropertySpec) {
  auto transport = std::make_shared<FunctionTransport>([](const std::string& line) {
    const auto req = json::parse(line);
    json values = json::array();
    for (const auto& s : req.at("smiles_list")) values.push_back(static_cast<double>(s.get<std::string>().size()));
    return json{{"id", req.at("id")}, {"values", values}}.dump();
  });
  PropertySpec spec{"custom", Direction::maximize, std::make_shared<ExternalEvaluator>(transport)};
  EXPECT_EQ(evaluate(spec, parse_smiles("OCC")).value, 3.0);
  const auto many = evaluate_many(spec, {parse_smiles("C"), parse_smiles("CCCC")});
  EXPECT_EQ(many[0].value, 1.0);
  EXPECT_EQ(many[1].value, 4.0);
}

TEST(SubprocessTransport, TalksToChildProcess) {
  auto transport = std::make_shared<SubprocessTransport>(std::string(FAKE_ENDPOINT) + " evaluator");
  PropertySpec spec{"custom", Direction::maximize, std::make_shared<ExternalEvaluator>(transport)};
  EXPECT_EQ(evaluate(spec, parse_smiles("CCO")).value, 3.0);
  const auto many = evaluate_many(spec, {parse_smiles("CBr"), parse_smiles("CCCC")});
  EXPECT_FALSE(many[0].value);
  EXPECT_EQ(many[0].error, "bromine not supported");
  EXPECT_EQ(many[1].value, 4.0);
  EXPECT_THROW(evaluate(spec, parse_smiles("CBr")), EvaluatorUnavailable);
}

TEST(SubprocessTransport, DeadOrSilentEndpoint) {
  auto dead = std::make_shared<SubprocessTransport>(std::string(FAKE_ENDPOINT) + " exit");
  EXPECT_THROW(dead->exchange("{}"), TransportError);
  auto silent = std::make_shared<SubprocessTransport>(std::string(FAKE_ENDPOINT) + " silent", std::chrono::milliseconds(200));
  EXPECT_THROW(silent->exchange("{}"), TransportError);
}

}  // namespace
}  // namespace leadopt

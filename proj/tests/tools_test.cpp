#include "leadopt/tools.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "leadopt/fingerprint.hpp"
#include "leadopt/random.hpp"
#include "leadopt/smiles.hpp"
#include "leadopt/testbed.hpp"

namespace leadopt {
namespace {

using nlohmann::json;

bool parses(const std::string& s) {
  try {
    parse_smiles(s);
    return true;
  } catch (const ParseError&) {
    return false;
  }
}

std::optional<std::string> canonical_or_none(const MolGraph& mol) {
  try {
    if (!validate(mol).valid) return std::nullopt;
    return canonical_form(mol);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Canonical forms of every connected subgraph left after deleting up to
// `max_removed` atoms.
std::set<std::string> reduced_forms(const MolGraph& mol, int max_removed, std::size_t size) {
  std::set<std::string> out;
  const int n = mol.num_atoms();
  auto keep = [&](std::vector<int> removed) {
    std::vector<int> atoms;
    for (int a = 0; a < n; ++a) {
      if (std::find(removed.begin(), removed.end(), a) == removed.end()) atoms.push_back(a);
    }
    if (atoms.size() != size) return;
    if (auto c = canonical_or_none(mol.induced_subgraph(atoms))) out.insert(*c);
  };
  keep({});
  if (max_removed >= 1) {
    for (int a = 0; a < n; ++a) keep({a});
  }
  if (max_removed >= 2) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) keep({a, b});
    }
  }
  return out;
}

// True when both graphs share a common subgraph covering all but at most two
// atoms of the larger one.
bool differ_in_at_most_two_atoms(const MolGraph& a, const MolGraph& b) {
  const auto larger = static_cast<std::size_t>(std::max(a.num_atoms(), b.num_atoms()));
  for (std::size_t size = larger; size + 2 >= larger && size > 0; --size) {
    const auto fa = reduced_forms(a, 2, size);
    for (const auto& f : reduced_forms(b, 2, size)) {
      if (fa.contains(f)) return true;
    }
  }
  return false;
}

Instruction plain_instruction(const ToolSpec& tool, int index = 0, std::vector<FailedCase> failed = {}) {
  return build_instruction(tool, index, builtin_property("bbbp"), failed, "CCO");
}

TEST(BuildInstruction, AvoidListRendering) {
  const auto tool = builtin_tool("ToolA");
  const auto plain = plain_instruction(tool);
  EXPECT_EQ(plain.text(), plain.base_text);
  EXPECT_NE(plain.base_text.find("CCO"), std::string::npos);
  EXPECT_NE(plain.base_text.find("bbbp"), std::string::npos);
  EXPECT_EQ(plain.base_text.find("{"), std::string::npos);

  const auto one = plain_instruction(tool, 0, {{"C1CC", FailureKind::invalid_structure, ""}});
  EXPECT_NE(one.text().find("C1CC: invalid SMILES"), std::string::npos);
  EXPECT_EQ(one.text().rfind(one.base_text, 0), 0U);

  const auto two = plain_instruction(tool, 1,
                                     {{"CCN", FailureKind::no_improvement, ""},
                                      {"CCCl", FailureKind::similarity_violation, "sim 0.31"}});
  ASSERT_EQ(two.failed_cases.size(), 2U);
  const auto text = two.text();
  EXPECT_LT(text.find("CCN"), text.find("CCCl"));
  EXPECT_NE(text.find("sim 0.31"), std::string::npos);

  const auto capped = plain_instruction(tool, 2,
                                        {{"A", FailureKind::invalid_structure, ""},
                                         {"B", FailureKind::invalid_structure, ""},
                                         {"C", FailureKind::invalid_structure, ""}});
  ASSERT_EQ(capped.failed_cases.size(), 2U);
  EXPECT_EQ(capped.failed_cases[0].smiles, "A");
  EXPECT_EQ(capped.failed_cases[1].smiles, "B");

  EXPECT_THROW(plain_instruction(tool, 6), std::out_of_range);
  EXPECT_THROW(plain_instruction(tool, -1), std::out_of_range);
}

TEST(BuildInstruction, SixDistinctTemplates) {
  for (const auto& tool : default_tool_set()) {
    std::set<std::string> texts(tool.prompt_templates.begin(), tool.prompt_templates.end());
    EXPECT_EQ(texts.size(), 6U);
  }
}

TEST(SimulatedTools, SubstituentEditIsSmall) {
  const auto mol = parse_smiles("CCO");
  const auto tool = builtin_tool("ToolA");
  const auto result = invoke(tool, plain_instruction(tool), mol, 7);
  ASSERT_EQ(result.candidates.size(), 1U);
  const auto edited = parse_smiles(result.candidates.front());
  EXPECT_NE(canonical_form(edited), canonical_form(mol));
  EXPECT_TRUE(differ_in_at_most_two_atoms(mol, edited)) << result.candidates.front();

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto r = invoke(tool, plain_instruction(tool, static_cast<int>(seed % 6)), mol, seed);
    EXPECT_TRUE(differ_in_at_most_two_atoms(mol, parse_smiles(r.candidates.front()))) << r.candidates.front();
  }
}

TEST(SimulatedTools, MutationChangesOneElement) {
  const auto mol = parse_smiles("CCO");
  std::set<std::string> single_swaps;
  for (int a = 0; a < mol.num_atoms(); ++a) {
    for (Element e : {Element::B, Element::C, Element::N, Element::O, Element::F, Element::P, Element::S,
                      Element::Cl, Element::Br, Element::I}) {
      if (e == mol.atom(a).element) continue;
      MolGraph copy = mol;
      copy.atom(a).element = e;
      if (auto c = canonical_or_none(copy)) single_swaps.insert(*c);
    }
  }
  const auto tool = builtin_tool("ToolB");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = invoke(tool, plain_instruction(tool, static_cast<int>(seed % 6)), mol, seed);
    ASSERT_EQ(r.candidates.size(), 1U);
    const auto edited = parse_smiles(r.candidates.front());
    EXPECT_TRUE(validate(edited).valid);
    EXPECT_TRUE(single_swaps.contains(canonical_form(edited))) << r.candidates.front();
  }
}

TEST(SimulatedTools, RingEditorAddsRingToHexane) {
  const auto mol = parse_smiles("CCCCCC");
  const auto tool = builtin_tool("ToolC");
  const auto r = invoke(tool, plain_instruction(tool), mol, 3);
  ASSERT_EQ(r.candidates.size(), 1U);
  EXPECT_EQ(ring_info(parse_smiles(r.candidates.front())).ring_count, ring_info(mol).ring_count + 1);
}

TEST(SimulatedTools, ForcedFailureEmitsUnparseableText) {
  auto tool = builtin_tool("ToolD");
  tool.builtin->p_fail = 1.0;
  const auto mol = parse_smiles("c1ccccc1CCO");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = invoke(tool, plain_instruction(tool), mol, seed);
    ASSERT_EQ(r.candidates.size(), 1U);
    EXPECT_FALSE(parses(r.candidates.front())) << r.candidates.front();
  }
}

TEST(SimulatedTools, DampedFailureProbability) {
  BehaviorProfile profile{ProfileKind::flaky, 0.5, 0.5, 0.05};
  EXPECT_DOUBLE_EQ(profile.effective_failure_probability(0), 0.5);
  EXPECT_DOUBLE_EQ(profile.effective_failure_probability(1), 0.25);
  EXPECT_DOUBLE_EQ(profile.effective_failure_probability(2), 0.125);
  EXPECT_DOUBLE_EQ(profile.effective_failure_probability(10), 0.05);
  BehaviorProfile low{ProfileKind::flaky, 0.02, 0.5, 0.05};
  EXPECT_DOUBLE_EQ(low.effective_failure_probability(3), 0.02);
}

TEST(SimulatedTools, SeededDeterminism) {
  const auto leads = testbed::generate_leads(1, 1, 20);
  for (const auto& tool : default_tool_set()) {
    for (std::size_t i = 0; i < leads.size(); ++i) {
      const auto mol = parse_smiles(leads[i]);
      const auto ins = plain_instruction(tool, static_cast<int>(i % 6));
      const auto a = invoke(tool, ins, mol, i);
      const auto b = invoke(tool, ins, mol, i);
      EXPECT_EQ(a.candidates, b.candidates);
      EXPECT_EQ(a.raw_payload, b.raw_payload);
    }
  }
}

TEST(SimulatedTools, FlakyToolRespondsToFailedCases) {
  const auto tool = builtin_tool("ToolD");
  const auto leads = testbed::generate_leads(2, 2, 50);
  int fail_plain = 0, fail_with_case = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto mol = parse_smiles(leads[static_cast<std::size_t>(i) % leads.size()]);
    const auto seed = static_cast<std::uint64_t>(i);
    fail_plain += !parses(invoke(tool, plain_instruction(tool, i % 6), mol, seed).candidates.front());
    const auto retry = plain_instruction(tool, i % 6, {{"C1CC", FailureKind::invalid_structure, ""}});
    fail_with_case += !parses(invoke(tool, retry, mol, seed).candidates.front());
  }
  EXPECT_LT(fail_with_case, fail_plain);
  EXPECT_NEAR(fail_plain / 1000.0, 0.5, 0.06);
  EXPECT_NEAR(fail_with_case / 1000.0, 0.25, 0.06);
}

TEST(SimulatedTools, EditSizesSeparateTools) {
  const auto leads = testbed::generate_leads(3, 3, 100);
  std::map<std::string, double> mean;
  for (const auto* id : {"ToolA", "ToolB", "ToolC"}) {
    const auto tool = builtin_tool(id);
    double sum = 0;
    for (int i = 0; i < 500; ++i) {
      const auto mol = parse_smiles(leads[static_cast<std::size_t>(i) % leads.size()]);
      const auto r = invoke(tool, plain_instruction(tool, i % 6), mol, static_cast<std::uint64_t>(i));
      sum += tanimoto(morgan_fp(parse_smiles(r.candidates.front())), morgan_fp(mol)).value();
    }
    mean[id] = sum / 500;
  }
  EXPECT_GT(mean["ToolA"], mean["ToolB"]);
  EXPECT_GT(mean["ToolB"], mean["ToolC"]);
}

TEST(ExternalTool, ExtractsSpans) {
  ToolSpec tool;
  tool.tool_id = "remote";
  tool.prompt_templates = default_templates("group");
  std::string seen_request;
  tool.endpoint = std::make_shared<FunctionTransport>([&](const std::string& line) {
    seen_request = line;
    return std::string("ok <SMILES>CCN</SMILES>");
  });
  const auto result = invoke(tool, plain_instruction(tool), parse_smiles("CCO"), 1);
  EXPECT_EQ(result.candidates, std::vector<std::string>{"CCN"});
  const auto req = json::parse(seen_request);
  EXPECT_EQ(req.at("tool_id"), "remote");
  EXPECT_EQ(req.at("smiles"), "CCO");
  EXPECT_EQ(req.at("property_id"), "bbbp");
  EXPECT_EQ(req.at("direction"), "maximize");
  EXPECT_TRUE(req.at("instruction_text").is_string());

  tool.endpoint = std::make_shared<FunctionTransport>([](const std::string&) { return std::string("no answer"); });
  EXPECT_TRUE(invoke(tool, plain_instruction(tool), parse_smiles("CCO"), 1).candidates.empty());

  tool.endpoint = std::make_shared<FunctionTransport>([](const std::string&) -> std::string {
    throw TransportError("down");
  });
  EXPECT_THROW(invoke(tool, plain_instruction(tool), parse_smiles("CCO"), 1), ToolUnavailable);
}

TEST(ExternalTool, SubprocessEndpoint) {
  ToolSpec tool;
  tool.tool_id = "remote";
  tool.prompt_templates = default_templates("group");
  tool.endpoint = std::make_shared<SubprocessTransport>(std::string(FAKE_ENDPOINT) + " tool");
  const auto result = invoke(tool, plain_instruction(tool), parse_smiles("CCO"), 1);
  EXPECT_EQ(result.candidates, std::vector<std::string>{"CCOC"});
  EXPECT_NE(result.raw_payload.find('\n'), std::string::npos);
}

TEST(ExtractSpans, Totality) {
  EXPECT_EQ(extract_smiles_spans("<SMILES>a</SMILES> x <SMILES> b </SMILES>"),
            (std::vector<std::string>{"a", " b "}));
  EXPECT_TRUE(extract_smiles_spans("<SMILES>open").empty());
  EXPECT_EQ(extract_smiles_spans("<SMILES></SMILES>"), std::vector<std::string>{""});
  EXPECT_EQ(extract_smiles_spans("</SMILES><SMILES>C</SMILES>"), std::vector<std::string>{"C"});
  Rng rng(4);
  const std::string alphabet = "<>/SMILEScC1()= \n\0x";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const int len = rng.uniform_int(0, 60);
    for (int k = 0; k < len; ++k) s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(alphabet.size()) - 1))];
    EXPECT_NO_THROW(extract_smiles_spans(s));
  }
}

}  // namespace
}  // namespace leadopt

#include "leadopt/campaign.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "leadopt/smiles.hpp"
#include "leadopt/testbed.hpp"

namespace leadopt {
namespace {

using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("leadopt_campaign_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset(const std::vector<std::string>& leads, const std::string& property) {
  std::string out;
  for (const auto& s : leads) out += json{{"smiles", s}, {"property", property}}.dump() + "\n";
  return out;
}

TEST(Ingest, WellFormedAndSkips) {
  TempDir dir;
  write_file(dir / "d.jsonl",
             "{\"smiles\":\"CCO\",\"property\":\"qed\"}\n"
             "{\"smiles\":\"c1ccccc1\",\"property\":\"plogp\",\"reference\":\"c1ccccc1C\"}\n"
             "\n"
             "{\"smiles\":\"CCN\",\"property\":\"hia\"}\n");
  auto r = ingest(dir / "d.jsonl", builtin_property_table());
  EXPECT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.rows, 3);
  EXPECT_EQ(r.skipped, 0);
  EXPECT_EQ(r.entries[1].reference, "c1ccccc1C");

  write_file(dir / "bad.jsonl",
             "{\"smiles\":\"CCO\",\"property\":\"qed\"}\n"
             "{\"smiles\":\"C1CC\",\"property\":\"qed\"}\n"
             "{\"smiles\":\"CCO\",\"property\":\"solubility\"}\n"
             "not json\n"
             "{\"smiles\":3,\"property\":\"qed\"}\n");
  r = ingest(dir / "bad.jsonl", builtin_property_table());
  EXPECT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.skipped, 4);
  EXPECT_EQ(r.rows, static_cast<int>(r.entries.size()) + r.skipped);
  ASSERT_EQ(r.diagnostics.size(), 4u);
  EXPECT_NE(r.diagnostics[0].find(":2:"), std::string::npos);
  EXPECT_NE(r.diagnostics[1].find("solubility"), std::string::npos);

  write_file(dir / "empty.jsonl", "\n");
  EXPECT_THROW(ingest(dir / "empty.jsonl", builtin_property_table()), EmptyDataset);
  EXPECT_THROW(ingest(dir / "missing.jsonl", builtin_property_table()), IoError);
}

CampaignManifest manifest_for(const TempDir& dir, Mode mode, std::uint64_t seed = 42) {
  CampaignManifest m;
  m.config.mode = mode;
  m.config.seed = seed;
  m.config.tools = default_tool_set();
  m.dataset = dir / "leads.jsonl";
  m.out = dir / "out.jsonl";
  return m;
}

TEST(Run, OrderedDeterministicOutput) {
  TempDir dir;
  const auto leads = testbed::generate_leads(7, 8, 10);
  write_file(dir / "leads.jsonl", dataset(leads, "qed"));
  auto m = manifest_for(dir, Mode::online);
  m.jobs = 4;
  const auto s = run(m);
  EXPECT_EQ(s.records, 10);
  const auto first = read_file(m.out);
  const auto results = load_results(m.out);
  ASSERT_EQ(results.size(), 10u);
  for (std::size_t i = 0; i < leads.size(); ++i) EXPECT_EQ(results[i].lead, canonicalize(leads[i]));

  m.jobs = 1;
  run(m);
  EXPECT_EQ(read_file(m.out), first);
}

TEST(Run, RetrieveWithoutBufferFailsBeforeWork) {
  TempDir dir;
  write_file(dir / "leads.jsonl", dataset({"CCO"}, "qed"));
  auto m = manifest_for(dir, Mode::retrieve);
  EXPECT_THROW(run(m), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(m.out));
  m.config.mode = Mode::online;
  m.config.budget = 4;
  EXPECT_THROW(run(m), ConfigError);
}

TEST(Run, StagnantLeadStillRecorded) {
  TempDir dir;
  // A lone carbon: most edits fall below the similarity gate.
  write_file(dir / "leads.jsonl", dataset({"C", "CCCCCCO"}, "qed"));
  auto m = manifest_for(dir, Mode::online);
  const auto s = run(m);
  EXPECT_EQ(s.records, 2);
  EXPECT_EQ(load_results(m.out).size(), 2u);
}

TEST(Run, PerLeadEvaluatorFailureIsRecorded) {
  TempDir dir;
  write_file(dir / "leads.jsonl", dataset({"CCO", "CCN"}, "ext"));
  auto m = manifest_for(dir, Mode::online);
  m.properties["ext"] = PropertySpec{
      "ext", Direction::maximize,
      std::make_shared<ExternalEvaluator>(std::make_shared<FunctionTransport>(
          [](const std::string&) -> std::string { throw TransportError("down"); }))};
  const auto s = run(m);
  EXPECT_EQ(s.records, 2);
  EXPECT_EQ(s.failed_leads, 2);
  for (const auto& r : load_results(m.out)) EXPECT_FALSE(r.error.empty());
}

TEST(Run, PropertyFilter) {
  TempDir dir;
  write_file(dir / "leads.jsonl", dataset({"CCO", "CCN"}, "qed") + dataset({"CCCO"}, "hia"));
  auto m = manifest_for(dir, Mode::online);
  m.property_filter = "hia";
  EXPECT_EQ(run(m).records, 1);
  m.property_filter = "nope";
  EXPECT_THROW(run(m), ConfigError);
}

TEST(BuildBuffer, StoresSuccessfulTrajectoriesDeterministically) {
  TempDir dir;
  const auto leads = testbed::generate_leads(3, 5, 12);
  write_file(dir / "leads.jsonl", dataset(leads, "plogp"));
  auto m = manifest_for(dir, Mode::online, 5);
  m.buffer = dir / "buf.jsonl";
  m.jobs = 3;
  const auto s = build_buffer(m);
  EXPECT_EQ(s.campaigns, 12);
  const auto buf = TrajectoryBuffer::load(*m.buffer);
  EXPECT_EQ(static_cast<int>(buf->size()), s.stored);
  EXPECT_GT(s.stored, 0);
  for (const auto& r : buf->entries()) EXPECT_EQ(r.actions.size(), 3u);
  const auto bytes = read_file(*m.buffer);
  m.jobs = 1;
  build_buffer(m);
  EXPECT_EQ(read_file(*m.buffer), bytes);

  // The stored count equals the number of successful parallel campaigns.
  auto pm = manifest_for(dir, Mode::parallel, 5);
  pm.out = dir / "par.jsonl";
  EXPECT_EQ(run(pm).succeeded, s.stored);
}

TEST(ToolsConfig, BuiltinAndExternal) {
  TempDir dir;
  write_file(dir / "tools.json", R"({"tools":[
    {"tool_id":"A","builtin":{"kind":"substituent"}},
    {"tool_id":"D","builtin":{"kind":"flaky","p_fail":0.3,"damping":0.4,"floor":0.1}},
    {"tool_id":"X","command":"cat","templates":["a","b","c","d","e","f"]}]})");
  const auto tools = load_tools_config(dir / "tools.json");
  ASSERT_EQ(tools.size(), 3u);
  EXPECT_EQ(tools[1].builtin->kind, ProfileKind::flaky);
  EXPECT_DOUBLE_EQ(tools[1].builtin->p_fail, 0.3);
  EXPECT_DOUBLE_EQ(tools[1].builtin->damping, 0.4);
  EXPECT_TRUE(tools[2].endpoint);
  EXPECT_EQ(tools[2].prompt_templates[5], "f");

  write_file(dir / "bad.json", R"({"tools":[{"tool_id":"A"}]})");
  EXPECT_THROW(load_tools_config(dir / "bad.json"), ConfigError);
  write_file(dir / "bad2.json", R"({"tools":[{"tool_id":"A","builtin":{"kind":"laser"}}]})");
  EXPECT_THROW(load_tools_config(dir / "bad2.json"), ConfigError);
  write_file(dir / "bad3.json", "{");
  EXPECT_THROW(load_tools_config(dir / "bad3.json"), ConfigError);
  EXPECT_THROW(load_tools_config(dir / "none.json"), IoError);
}

TEST(EvaluatorsConfig, ExternalEndpoint) {
  TempDir dir;
  write_file(dir / "ev.json", std::string(R"({"evaluators":[{"property_id":"len","direction":"minimize","command":")") +
                                  FAKE_ENDPOINT + R"( evaluator"}]})");
  const auto table = load_evaluators_config(dir / "ev.json");
  ASSERT_TRUE(table.count("len"));
  EXPECT_TRUE(table.count("qed"));
  EXPECT_EQ(table.at("len").direction, Direction::minimize);
  EXPECT_DOUBLE_EQ(evaluate(table.at("len"), parse_smiles("CCO")).value, 3.0);
}

TEST(LoadResults, RejectsMalformed) {
  TempDir dir;
  write_file(dir / "r.jsonl", "{\"lead\":\"CCO\"}\n");
  try {
    load_results(dir / "r.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
  EXPECT_THROW(load_results(dir / "none.jsonl"), IoError);
}

}  // namespace
}  // namespace leadopt

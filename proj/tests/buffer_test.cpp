#include "leadopt/buffer.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "leadopt/random.hpp"
#include "leadopt/smiles.hpp"
#include "leadopt/testbed.hpp"

namespace leadopt {
namespace {

TrajectoryRecord make_record(const std::string& smiles, const std::string& property, std::vector<ToolAction> actions,
                             double final_ri = 0.5, const std::string& run_id = "r") {
  TrajectoryRecord r;
  const auto mol = parse_smiles(smiles);
  r.lead = canonical_form(mol);
  r.lead_fp = morgan_fp(mol);
  r.property_id = property;
  for (std::size_t i = 0; i < actions.size(); ++i) r.step_outcomes.push_back({r.lead, 1.0 + i, 0.9});
  r.actions = std::move(actions);
  r.final_ri = final_ri;
  r.run_id = run_id;
  return r;
}

const std::vector<ToolAction> kABC{{"ToolA", 0}, {"ToolB", 1}, {"ToolC", 2}};

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("leadopt_buffer_" + std::to_string(::getpid()) + "_" + name);
}

TEST(PrefixMatch, Examples) {
  const auto a = make_record("CCO", "qed", kABC);
  EXPECT_TRUE(prefix_match(a, a, 3));
  auto b = make_record("CCN", "qed", {{"ToolD", 0}, {"ToolB", 1}, {"ToolC", 2}});
  EXPECT_FALSE(prefix_match(a, b, 1));
  auto c = make_record("CCN", "qed", {{"ToolA", 0}, {"ToolB", 1}, {"ToolC", 5}});
  EXPECT_TRUE(prefix_match(a, c, 2));
  EXPECT_FALSE(prefix_match(a, c, 3));
  // Same tool, different template index.
  auto d = make_record("CCN", "qed", {{"ToolA", 1}});
  EXPECT_FALSE(prefix_match(a, d, 1));
  // Too short.
  EXPECT_FALSE(prefix_match(a, make_record("CCN", "qed", {{"ToolA", 0}}), 2));
  EXPECT_THROW(prefix_match(a, a, 0), std::invalid_argument);
}

TEST(TrajectoryTemplate, ReturnsActionsVerbatim) {
  EXPECT_EQ(trajectory_template(make_record("CCO", "qed", kABC)), kABC);
}

TEST(Buffer, InsertAndPartition) {
  TrajectoryBuffer buf;
  buf.insert(make_record("CCO", "qed", kABC));
  buf.insert(make_record("c1ccccc1O", "plogp", kABC));
  buf.insert(make_record("CCO", "qed", kABC));  // duplicates are kept
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.partition("qed").size(), 2u);
  EXPECT_EQ(buf.partition("plogp").size(), 1u);
  EXPECT_TRUE(buf.partition("hia").empty());
}

TEST(Buffer, SchemaViolations) {
  TrajectoryBuffer buf;
  auto r = make_record("CCO", "qed", kABC);

  auto bad = r;
  bad.actions.clear();
  bad.step_outcomes.clear();
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.step_outcomes.pop_back();
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.actions[1].prompt_index = 6;
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.final_ri = -0.1;
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.lead = "OCC";  // parses but is not the canonical spelling
  if (bad.lead != r.lead) EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.lead = "C1CC";
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.lead_fp = morgan_fp(parse_smiles("CCCC"));
  EXPECT_THROW(buf.insert(bad), SchemaError);

  bad = r;
  bad.property_id.clear();
  EXPECT_THROW(buf.insert(bad), SchemaError);

  EXPECT_EQ(buf.size(), 0u);
}

TEST(Buffer, Top1EmptyAndExact) {
  TrajectoryBuffer buf;
  EXPECT_FALSE(buf.top1_similar(parse_smiles("CCO"), "qed"));
  buf.insert(make_record("c1ccccc1CCN", "qed", kABC));
  buf.insert(make_record("CCOCC", "qed", kABC));
  buf.insert(make_record("CCOCC", "plogp", kABC));
  const auto hit = buf.top1_similar(parse_smiles("NCCc1ccccc1"), "qed");
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->index, 0u);
  EXPECT_DOUBLE_EQ(hit->similarity.value(), 1.0);
  EXPECT_FALSE(buf.top1_similar(parse_smiles("CCO"), "hia"));
}

TEST(Buffer, TieBreakOnFinalRiThenLead) {
  TrajectoryBuffer buf;
  buf.insert(make_record("CCO", "qed", kABC, 0.2, "low"));
  buf.insert(make_record("CCO", "qed", kABC, 0.7, "high"));
  buf.insert(make_record("CCO", "qed", kABC, 0.7, "high-later"));
  for (int i = 0; i < 5; ++i) {
    const auto hit = buf.top1_similar(parse_smiles("CCO"), "qed");
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->record.run_id, "high");
  }

  // Two different leads equally similar to the query.
  TrajectoryBuffer tied;
  tied.insert(make_record("CCCO", "qed", kABC, 0.3));
  tied.insert(make_record("CCCN", "qed", kABC, 0.3));
  const auto q = parse_smiles("CCCC");
  const auto s1 = tanimoto(morgan_fp(q), morgan_fp(parse_smiles("CCCO")));
  const auto s2 = tanimoto(morgan_fp(q), morgan_fp(parse_smiles("CCCN")));
  ASSERT_EQ(s1, s2);
  const auto hit = tied.top1_similar(q, "qed");
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->record.lead, std::min(canonicalize("CCCO"), canonicalize("CCCN")));
}

TEST(Buffer, RetrievalMatchesBruteForce) {
  const auto leads = testbed::generate_leads(11, 12, 120);
  TrajectoryBuffer buf;
  for (std::size_t i = 0; i < 80; ++i) buf.insert(make_record(leads[i], i % 3 ? "qed" : "hia", kABC));
  for (std::size_t i = 80; i < leads.size(); ++i) {
    const auto q = parse_smiles(leads[i]);
    const auto qfp = morgan_fp(q);
    for (const std::string prop : {"qed", "hia"}) {
      double best = -1;
      for (const auto& r : buf.partition(prop)) best = std::max(best, tanimoto(qfp, r.lead_fp).value());
      const auto hit = buf.top1_similar(q, prop);
      ASSERT_TRUE(hit);
      EXPECT_EQ(hit->similarity.value(), best);
      EXPECT_EQ(hit->record.property_id, prop);
      EXPECT_EQ(buf.entries()[hit->index], hit->record);
    }
  }
}

TEST(Buffer, PersistenceRoundTrip) {
  const auto leads = testbed::generate_leads(3, 4, 20);
  TrajectoryBuffer buf;
  for (std::size_t i = 0; i < leads.size(); ++i) {
    buf.insert(make_record(leads[i], i % 2 ? "qed" : "mutagenicity", kABC, 0.1 * static_cast<double>(i),
                           "run" + std::to_string(i)));
  }
  const auto path = temp_file("roundtrip.jsonl");
  buf.flush(path);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  const auto loaded = TrajectoryBuffer::load(path);
  EXPECT_EQ(loaded->entries(), buf.entries());

  // Flushing the reloaded buffer reproduces the file byte for byte.
  const auto path2 = temp_file("roundtrip2.jsonl");
  loaded->flush(path2);
  std::ifstream a(path), b(path2);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST(Buffer, LoadRejectsBadLinesAndParams) {
  TrajectoryBuffer buf;
  buf.insert(make_record("CCO", "qed", kABC));
  const auto path = temp_file("params.jsonl");
  buf.flush(path);
  EXPECT_THROW(TrajectoryBuffer::load(path, FingerprintParams{3, 2048}), SchemaError);
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"lead\": 3}\n";
  }
  EXPECT_THROW(TrajectoryBuffer::load(path), SchemaError);
  std::filesystem::remove(path);
  EXPECT_THROW(TrajectoryBuffer::load(path), std::runtime_error);
}

TEST(Buffer, ConcurrentReaders) {
  const auto leads = testbed::generate_leads(5, 6, 30);
  TrajectoryBuffer buf;
  for (const auto& s : leads) buf.insert(make_record(s, "qed", kABC));
  std::vector<std::size_t> expected;
  for (const auto& s : leads) expected.push_back(buf.top1_similar(parse_smiles(s), "qed")->index);
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = 0; i < leads.size(); ++i) {
        if (buf.top1_similar(parse_smiles(leads[i]), "qed")->index != expected[i]) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace leadopt

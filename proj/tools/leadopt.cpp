// leadopt: campaign runner.
//
//   leadopt make-dataset --out leads.jsonl --count 100
//   leadopt build-buffer --dataset train.jsonl --buffer buf.jsonl
//   leadopt run --mode retrieve --dataset test.jsonl --buffer buf.jsonl --out results.jsonl
//   leadopt report results.jsonl --series series.csv

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "leadopt/campaign.hpp"
#include "leadopt/metrics.hpp"
#include "leadopt/testbed.hpp"

namespace {

using namespace leadopt;

struct RunOptions {
  std::string mode = "online";
  int steps = 3;
  double tau = kDefaultSimilarityThreshold;
  int budget = 0;
  std::uint64_t seed = 0;
  std::string property;
  std::string dataset;
  std::string buffer;
  std::string tools_config;
  std::string evaluators_config;
  std::string out;
  int jobs = 1;
  std::string planner_command;
  bool no_retry = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_mode) {
  if (with_mode) {
    cmd->add_option("--mode", o.mode, "online | retrieve | parallel")->capture_default_str();
    cmd->add_option("--budget", o.budget, "planned tool calls per step (checked against the mode)");
    cmd->add_option("--out", o.out, "results file (one JSON line per lead)")->required();
  }
  cmd->add_option("--steps", o.steps, "exploration steps")->capture_default_str();
  cmd->add_option("--tau", o.tau, "similarity threshold")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--property", o.property, "only run entries for this property");
  cmd->add_option("--dataset", o.dataset, "dataset file")->required();
  cmd->add_option("--buffer", o.buffer, with_mode ? "trajectory buffer (retrieve mode)" : "buffer file to write");
  cmd->add_option("--tools-config", o.tools_config, "tool definitions (default: ToolA-ToolD)");
  cmd->add_option("--evaluators-config", o.evaluators_config, "external property evaluators");
  cmd->add_option("--jobs", o.jobs, "leads run concurrently")->capture_default_str();
  cmd->add_option("--planner-command", o.planner_command, "external planner process");
  cmd->add_flag("--no-retry", o.no_retry, "disable the self-correction retry");
}

CampaignManifest make_manifest(const RunOptions& o) {
  CampaignManifest m;
  m.config.mode = mode_from_string(o.mode);
  m.config.steps = o.steps;
  if (!(o.tau >= 0.0 && o.tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  m.config.tau = Similarity(o.tau);
  m.config.budget = o.budget;
  m.config.seed = o.seed;
  m.config.self_correction = !o.no_retry;
  m.config.tools = o.tools_config.empty() ? default_tool_set() : load_tools_config(o.tools_config);
  if (!o.planner_command.empty()) {
    m.config.planner = std::make_shared<ExternalPlanner>(std::make_shared<SubprocessTransport>(o.planner_command));
  }
  if (!o.evaluators_config.empty()) m.properties = load_evaluators_config(o.evaluators_config);
  if (!o.property.empty()) m.property_filter = o.property;
  m.dataset = o.dataset;
  m.out = o.out;
  if (!o.buffer.empty()) m.buffer = o.buffer;
  m.jobs = o.jobs;
  return m;
}

void print_diagnostics(const IngestReport& r) {
  for (const auto& d : r.diagnostics) std::cerr << "skipped " << d << '\n';
}

int cmd_run(const RunOptions& o) {
  const auto m = make_manifest(o);
  const auto s = run(m);
  print_diagnostics(s.ingest);
  std::cerr << s.records << " campaigns, " << s.succeeded << " succeeded, " << s.failed_leads << " failed to run, "
            << s.ingest.skipped << " rows skipped -> " << m.out.string() << '\n';
  return 0;
}

int cmd_build_buffer(const RunOptions& o) {
  if (o.buffer.empty()) throw ConfigError("--buffer is required");
  const auto m = make_manifest(o);
  const auto s = build_buffer(m);
  print_diagnostics(s.ingest);
  std::cerr << s.campaigns << " training campaigns, " << s.stored << " trajectories stored -> " << o.buffer << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& series, bool ungated) {
  std::vector<std::pair<std::string, MetricReport>> rows;
  for (const auto& f : files) {
    const auto results = load_results(f);
    if (results.empty()) throw EmptyInput(f + " has no records");
    const auto label = std::filesystem::path(f).stem().string() + " (" + std::string(to_string(results.front().mode)) + ")";
    rows.emplace_back(label, build_report(outcomes_from_campaigns(results)));
  }
  std::cout << format_table(rows);
  if (ungated) {
    for (const auto& [label, r] : rows) std::cout << label << " SR without similarity gate: " << r.sr_ungated << '\n';
  }
  for (const auto& [label, r] : rows) {
    std::cout << label << ": " << r.samples << " samples, " << r.succeeded << " succeeded, RI over " << r.ri.eligible
              << " (" << r.ri.excluded_low_sim << " below 0.5 similarity, " << r.ri.excluded_zero_reference
              << " with zero initial value), " << r.generated << " candidates\n";
  }
  if (!series.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::string path = series;
      if (rows.size() > 1) {
        const std::filesystem::path p(series);
        path = (p.parent_path() / (p.stem().string() + "_" + std::filesystem::path(files[i]).stem().string() +
                                   p.extension().string()))
                   .string();
      }
      std::ofstream out(path, std::ios::binary);
      if (!out) throw IoError("cannot write " + path);
      out << format_series_csv(rows[i].second);
      std::cerr << "series -> " << path << '\n';
    }
  }
  return 0;
}

int cmd_validate(const std::string& dataset, const std::string& evaluators_config) {
  const auto table = evaluators_config.empty() ? builtin_property_table() : load_evaluators_config(evaluators_config);
  const auto r = ingest(dataset, table);
  print_diagnostics(r);
  std::cout << r.rows << " rows, " << r.entries.size() << " usable, " << r.skipped << " skipped\n";
  return r.skipped == 0 ? 0 : 2;
}

int cmd_make_dataset(const std::string& out_path, int count, std::uint64_t family_seed, std::uint64_t member_seed,
                     const std::vector<std::string>& properties) {
  for (const auto& p : properties) {
    if (!is_builtin_property(p)) throw ConfigError("no builtin surrogate for " + p);
  }
  if (properties.empty()) throw ConfigError("--properties must name at least one property");
  const auto leads = testbed::generate_lead_set(family_seed, member_seed, count);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path);
  // One property per scaffold family.
  for (const auto& lead : leads) {
    const auto& property = properties[static_cast<std::size_t>(lead.family) % properties.size()];
    out << nlohmann::json{{"smiles", lead.smiles}, {"property", property}}.dump() << '\n';
  }
  std::cerr << leads.size() << " leads -> " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tool-orchestrated lead optimization campaigns"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "run one campaign per dataset entry");
  add_run_options(run_cmd, run_opts, true);

  RunOptions buf_opts;
  auto* buf_cmd = app.add_subcommand("build-buffer", "collect parallel-mode trajectories from training leads");
  add_run_options(buf_cmd, buf_opts, false);

  std::vector<std::string> report_files;
  std::string series;
  bool ungated = false;
  auto* report_cmd = app.add_subcommand("report", "metric table and per-step series from results files");
  report_cmd->add_option("results", report_files, "results files")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--series", series, "CSV for per-step error, rescue, best-from and novelty");
  report_cmd->add_flag("--ungated-sr", ungated, "also print SR without the similarity gate");

  std::string validate_dataset, validate_evaluators;
  auto* validate_cmd = app.add_subcommand("validate-dataset", "check a dataset file row by row");
  validate_cmd->add_option("dataset", validate_dataset, "dataset file")->required();
  validate_cmd->add_option("--evaluators-config", validate_evaluators, "external property evaluators");

  std::string make_out;
  int make_count = 100;
  std::uint64_t family_seed = 1, member_seed = 1;
  std::vector<std::string> make_props{"plogp", "qed", "bbbp", "hia", "mutagenicity"};
  auto* make_cmd = app.add_subcommand("make-dataset", "write seeded testbed leads");
  make_cmd->add_option("--out", make_out, "dataset file")->required();
  make_cmd->add_option("--count", make_count, "number of leads")->capture_default_str();
  make_cmd->add_option("--family-seed", family_seed, "scaffold family seed")->capture_default_str();
  make_cmd->add_option("--member-seed", member_seed, "lead decoration seed")->capture_default_str();
  make_cmd->add_option("--properties", make_props, "properties assigned round-robin over scaffold families")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_opts);
    if (*buf_cmd) return cmd_build_buffer(buf_opts);
    if (*report_cmd) return cmd_report(report_files, series, ungated);
    if (*validate_cmd) return cmd_validate(validate_dataset, validate_evaluators);
    if (*make_cmd) return cmd_make_dataset(make_out, make_count, family_seed, member_seed, make_props);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

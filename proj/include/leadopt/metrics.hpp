#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leadopt/orchestrate.hpp"

namespace leadopt {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoSuccesses : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GeneratedCandidate {
  std::string canonical;  // empty when invalid
  bool valid = false;
  int step = 0;  // 0-based
  bool passed = false;
};

struct ActionOutcome {
  int step = 0;
  bool first_failed = false;
  bool rescued = false;
};

// Per-lead digest of a CampaignResult.
struct SampleOutcome {
  std::string lead;
  bool succeeded = false;
  std::optional<double> sim;
  std::optional<double> ri;
  bool zero_reference = false;
  std::optional<int> best_step;
  // Some valid candidate improved on the lead, similarity aside.
  bool improved_ungated = false;
  int steps = 0;
  std::vector<GeneratedCandidate> generated;
  std::vector<ActionOutcome> actions;
};

SampleOutcome outcome_from_campaign(const CampaignResult& result);
std::vector<SampleOutcome> outcomes_from_campaigns(const std::vector<CampaignResult>& results);

// Percentages in [0, 100].
double success_rate(const std::vector<SampleOutcome>& outcomes);
// SR counting any improving valid candidate, without the similarity gate.
double success_rate_ungated(const std::vector<SampleOutcome>& outcomes);
double similarity_avg(const std::vector<SampleOutcome>& outcomes);

struct RiAverage {
  std::optional<double> value;  // absent when nothing is eligible
  int eligible = 0;
  int excluded_low_sim = 0;
  int excluded_zero_reference = 0;
};
// Succeeded samples with sim >= sim_gate and a nonzero initial value.
RiAverage relative_improvement_avg(const std::vector<SampleOutcome>& outcomes, double sim_gate = 0.5);

double validity_rate(const std::vector<SampleOutcome>& outcomes);

// Entry s: share of succeeded samples whose best came from step s.
std::vector<double> best_from(const std::vector<SampleOutcome>& outcomes);

// Entry s: passing candidates at s whose canonical form was not generated at
// an earlier step of the same campaign, pooled over samples. Absent when no
// candidate passed at s.
std::vector<std::optional<double>> novelty(const std::vector<SampleOutcome>& outcomes);

struct StepErrorRescue {
  std::optional<double> error_rate;   // absent without candidates
  std::optional<double> rescue_rate;  // absent without first-attempt failures
  int generated = 0;
  int failed = 0;
  int failing_actions = 0;
  int rescued = 0;
};
std::vector<StepErrorRescue> error_and_rescue(const std::vector<SampleOutcome>& outcomes);

struct MetricReport {
  int samples = 0;
  int succeeded = 0;
  int generated = 0;
  int valid = 0;
  double sr = 0.0;
  double sr_ungated = 0.0;
  std::optional<double> sim;
  RiAverage ri;
  std::optional<double> vr;
  std::vector<double> best_from;  // empty without successes
  std::vector<std::optional<double>> novelty;
  std::vector<StepErrorRescue> error_rescue;
};

MetricReport build_report(const std::vector<SampleOutcome>& outcomes);

// Aligned SR/SIM/RI/VR table, two decimals, "-" for absent values.
std::string format_table(const std::vector<std::pair<std::string, MetricReport>>& rows);
// step,error_rate,rescue_rate,best_from,novelty with 1-based steps; absent
// values are left empty.
std::string format_series_csv(const MetricReport& report);

}  // namespace leadopt

#include "leadopt/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace leadopt {

SampleOutcome outcome_from_campaign(const CampaignResult& r) {
  SampleOutcome o;
  o.lead = r.lead;
  o.steps = static_cast<int>(r.steps.size());
  if (r.best_seen) {
    o.succeeded = true;
    o.sim = r.best_seen->sim;
    o.ri = r.best_seen->relative_improvement;
    o.zero_reference = r.best_seen->zero_reference;
    o.best_step = r.best_seen->step;
  }
  for (const auto& s : r.steps) {
    std::vector<int> attempts_per_action;
    std::vector<bool> first_failed, rescued;
    for (const auto& a : s.attempts) {
      for (const auto& c : a.checks) {
        o.generated.push_back({c.canonical, c.valid, s.step_index, c.passed()});
        if (c.valid && c.improved) o.improved_ungated = true;
      }
      const auto k = static_cast<std::size_t>(a.ordinal);
      if (k >= first_failed.size()) {
        first_failed.resize(k + 1, false);
        rescued.resize(k + 1, false);
      }
      if (!a.retry) first_failed[k] = !a.any_passed();
      else if (a.any_passed()) rescued[k] = true;
    }
    for (std::size_t k = 0; k < first_failed.size(); ++k) {
      if (first_failed[k]) o.actions.push_back({s.step_index, true, bool(rescued[k])});
      else o.actions.push_back({s.step_index, false, false});
    }
  }
  return o;
}

std::vector<SampleOutcome> outcomes_from_campaigns(const std::vector<CampaignResult>& results) {
  std::vector<SampleOutcome> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(outcome_from_campaign(r));
  return out;
}

double success_rate(const std::vector<SampleOutcome>& outcomes) {
  if (outcomes.empty()) throw EmptyInput("no samples");
  const auto n = std::count_if(outcomes.begin(), outcomes.end(), [](const SampleOutcome& o) { return o.succeeded; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(outcomes.size());
}

double success_rate_ungated(const std::vector<SampleOutcome>& outcomes) {
  if (outcomes.empty()) throw EmptyInput("no samples");
  const auto n = std::count_if(outcomes.begin(), outcomes.end(), [](const SampleOutcome& o) { return o.improved_ungated; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(outcomes.size());
}

double similarity_avg(const std::vector<SampleOutcome>& outcomes) {
  double sum = 0.0;
  int n = 0;
  for (const auto& o : outcomes) {
    if (!o.succeeded) continue;
    sum += *o.sim;
    ++n;
  }
  if (n == 0) throw NoSuccesses("no succeeded samples");
  return 100.0 * sum / n;
}

RiAverage relative_improvement_avg(const std::vector<SampleOutcome>& outcomes, double sim_gate) {
  RiAverage out;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.succeeded) continue;
    if (*o.sim < sim_gate) {
      ++out.excluded_low_sim;
    } else if (o.zero_reference || !o.ri) {
      ++out.excluded_zero_reference;
    } else {
      sum += *o.ri;
      ++out.eligible;
    }
  }
  if (out.eligible > 0) out.value = 100.0 * sum / out.eligible;
  return out;
}

double validity_rate(const std::vector<SampleOutcome>& outcomes) {
  std::size_t all = 0, valid = 0;
  for (const auto& o : outcomes) {
    all += o.generated.size();
    for (const auto& g : o.generated) valid += g.valid;
  }
  if (all == 0) throw EmptyInput("no generated candidates");
  return 100.0 * static_cast<double>(valid) / static_cast<double>(all);
}

namespace {

int max_steps(const std::vector<SampleOutcome>& outcomes) {
  int n = 0;
  for (const auto& o : outcomes) n = std::max(n, o.steps);
  return n;
}

}  // namespace

std::vector<double> best_from(const std::vector<SampleOutcome>& outcomes) {
  std::vector<int> counts(static_cast<std::size_t>(max_steps(outcomes)), 0);
  int succeeded = 0;
  for (const auto& o : outcomes) {
    if (!o.succeeded) continue;
    ++succeeded;
    ++counts[static_cast<std::size_t>(*o.best_step)];
  }
  if (succeeded == 0) throw NoSuccesses("no succeeded samples");
  std::vector<double> out;
  for (int c : counts) out.push_back(100.0 * c / succeeded);
  return out;
}

std::vector<std::optional<double>> novelty(const std::vector<SampleOutcome>& outcomes) {
  const auto steps = static_cast<std::size_t>(max_steps(outcomes));
  std::vector<int> novel(steps, 0), passing(steps, 0);
  for (const auto& o : outcomes) {
    std::set<std::string> earlier;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<std::string> here;
      for (const auto& g : o.generated) {
        if (static_cast<std::size_t>(g.step) != s) continue;
        if (g.passed) {
          ++passing[s];
          if (!earlier.count(g.canonical)) ++novel[s];
        }
        if (g.valid) here.push_back(g.canonical);
      }
      earlier.insert(here.begin(), here.end());
    }
  }
  std::vector<std::optional<double>> out(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    if (passing[s] > 0) out[s] = 100.0 * novel[s] / passing[s];
  }
  return out;
}

std::vector<StepErrorRescue> error_and_rescue(const std::vector<SampleOutcome>& outcomes) {
  std::vector<StepErrorRescue> out(static_cast<std::size_t>(max_steps(outcomes)));
  for (const auto& o : outcomes) {
    for (const auto& g : o.generated) {
      auto& e = out[static_cast<std::size_t>(g.step)];
      ++e.generated;
      if (!g.passed) ++e.failed;
    }
    for (const auto& a : o.actions) {
      if (!a.first_failed) continue;
      auto& e = out[static_cast<std::size_t>(a.step)];
      ++e.failing_actions;
      if (a.rescued) ++e.rescued;
    }
  }
  for (auto& e : out) {
    if (e.generated > 0) e.error_rate = 100.0 * e.failed / e.generated;
    if (e.failing_actions > 0) e.rescue_rate = 100.0 * e.rescued / e.failing_actions;
  }
  return out;
}

MetricReport build_report(const std::vector<SampleOutcome>& outcomes) {
  MetricReport r;
  r.samples = static_cast<int>(outcomes.size());
  r.sr = success_rate(outcomes);
  r.sr_ungated = success_rate_ungated(outcomes);
  for (const auto& o : outcomes) {
    r.succeeded += o.succeeded;
    r.generated += static_cast<int>(o.generated.size());
    for (const auto& g : o.generated) r.valid += g.valid;
  }
  if (r.succeeded > 0) {
    r.sim = similarity_avg(outcomes);
    r.best_from = best_from(outcomes);
  }
  r.ri = relative_improvement_avg(outcomes);
  if (r.generated > 0) r.vr = validity_rate(outcomes);
  r.novelty = novelty(outcomes);
  r.error_rescue = error_and_rescue(outcomes);
  return r;
}

namespace {

std::string fixed2(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

std::string format_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [label, _] : rows) width = std::max(width, label.size());
  std::ostringstream os;
  auto cell = [&os](const std::string& s) {
    os << std::string(s.size() < 9 ? 9 - s.size() : 0, ' ') << s;
  };
  os << "Setup" << std::string(width - 5, ' ');
  for (const char* h : {"SR", "SIM", "RI", "VR"}) cell(h);
  os << '\n';
  for (const auto& [label, r] : rows) {
    os << label << std::string(width - label.size(), ' ');
    cell(fixed2(r.sr));
    cell(fixed2(r.sim));
    cell(fixed2(r.ri.value));
    cell(fixed2(r.vr));
    os << '\n';
  }
  return os.str();
}

std::string format_series_csv(const MetricReport& report) {
  std::ostringstream os;
  os << "step,error_rate,rescue_rate,best_from,novelty\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (std::size_t s = 0; s < report.error_rescue.size(); ++s) {
    const auto& e = report.error_rescue[s];
    os << s + 1 << ',' << num(e.error_rate) << ',' << num(e.rescue_rate) << ','
       << num(s < report.best_from.size() ? std::optional<double>(report.best_from[s]) : std::nullopt) << ','
       << num(s < report.novelty.size() ? report.novelty[s] : std::nullopt) << '\n';
  }
  return os.str();
}

}  // namespace leadopt

#include "leadopt/orchestrate.hpp"

#include <algorithm>
#include <future>
#include <json.hpp>
#include <set>
#include <sstream>

#include "leadopt/random.hpp"
#include "leadopt/smiles.hpp"

namespace leadopt {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::online: return "online";
    case Mode::retrieve: return "retrieve";
    case Mode::parallel: return "parallel";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "online") return Mode::online;
  if (s == "retrieve") return Mode::retrieve;
  if (s == "parallel") return Mode::parallel;
  throw ConfigError("unknown mode: " + std::string(s));
}

bool Attempt::any_passed() const {
  return std::any_of(checks.begin(), checks.end(), [](const CandidateCheck& c) { return c.passed(); });
}

// ---- planners

double BuiltinPlanner::success_score(const std::vector<StepRecord>& history, const std::string& tool_id) {
  double s = 0.5;
  for (const auto& step : history) {
    for (std::size_t ordinal = 0; ordinal < step.plan.tool_calls.size(); ++ordinal) {
      if (step.plan.tool_calls[ordinal].tool_id != tool_id) continue;
      bool passed = false;
      for (const auto& a : step.attempts) {
        if (a.ordinal == static_cast<int>(ordinal) && a.any_passed()) passed = true;
      }
      s = 0.7 * (passed ? 1.0 : 0.0) + 0.3 * s;
    }
  }
  return s;
}

PlanCommand BuiltinPlanner::plan(const PlanContext& ctx) const {
  if (!ctx.tools || ctx.tools->empty()) throw ConfigError("planner needs a nonempty tool set");
  const auto& tools = *ctx.tools;
  const int index = ctx.step % kTemplateCount;
  PlanCommand out;
  if (ctx.mode == Mode::parallel) {
    for (const auto& t : tools) out.tool_calls.push_back({t.tool_id, index});
    return out;
  }
  static const std::vector<StepRecord> kNoHistory;
  const auto& history = ctx.history ? *ctx.history : kNoHistory;
  const std::size_t n = tools.size();
  const std::size_t start = static_cast<std::size_t>(ctx.step) % n;
  std::size_t best = start;
  double best_score = success_score(history, tools[start].tool_id);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t pos = (start + i) % n;
    const double s = success_score(history, tools[pos].tool_id);
    if (s > best_score) {
      best = pos;
      best_score = s;
    }
  }
  out.tool_calls.push_back({tools[best].tool_id, index});
  return out;
}

std::string render_planner_prompt(const PlanContext& ctx) {
  std::ostringstream os;
  os << "Input SMILES: " << ctx.smiles << '\n';
  if (ctx.property) {
    os << "Target property: " << ctx.property->id << " (goal: "
       << (ctx.property->direction == Direction::maximize ? "increase" : "decrease") << ")\n";
  }
  os << "Mode: " << to_string(ctx.mode) << ", step " << ctx.step + 1 << '\n';
  if (!ctx.retrieval_hint.empty()) os << "Retrieved trajectory: " << ctx.retrieval_hint << '\n';
  os << "Tools:\n";
  if (ctx.tools) {
    for (const auto& t : *ctx.tools) {
      os << "- " << t.tool_id << ": " << t.description << '\n';
      for (int i = 0; i < kTemplateCount; ++i) os << "  [" << i << "] " << t.prompt_templates[static_cast<std::size_t>(i)] << '\n';
    }
  }
  os << "Reply with exactly {\"tool_calls\":[{\"tool_name\":\"<string>\",\"prompt_index\":<0-5>}, ...]}";
  if (ctx.mode == Mode::parallel) os << " naming every tool once";
  os << '.';
  return os.str();
}

PlanCommand parse_plan_reply(const std::string& reply, const std::vector<ToolSpec>& tools, Mode mode) {
  json doc;
  try {
    doc = json::parse(reply);
  } catch (const json::parse_error& e) {
    throw PlannerProtocolError(std::string("planner reply is not JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.size() != 1 || !doc.contains("tool_calls") || !doc["tool_calls"].is_array()) {
    throw PlannerProtocolError("planner reply must be exactly {\"tool_calls\":[...]}");
  }
  std::set<std::string> known;
  for (const auto& t : tools) known.insert(t.tool_id);
  PlanCommand out;
  for (const auto& call : doc["tool_calls"]) {
    if (!call.is_object() || call.size() != 2 || !call.contains("tool_name") || !call.contains("prompt_index") ||
        !call["tool_name"].is_string() || !call["prompt_index"].is_number_integer()) {
      throw PlannerProtocolError("malformed tool call: " + call.dump());
    }
    const auto name = call["tool_name"].get<std::string>();
    const auto index = call["prompt_index"].get<long long>();
    if (!known.count(name)) throw PlannerProtocolError("unknown tool: " + name);
    if (index < 0 || index >= kTemplateCount) throw PlannerProtocolError("prompt_index out of range: " + std::to_string(index));
    out.tool_calls.push_back({name, static_cast<int>(index)});
  }
  if (out.tool_calls.empty()) throw PlannerProtocolError("planner returned no tool calls");
  if (mode == Mode::parallel) {
    std::set<std::string> seen;
    for (const auto& c : out.tool_calls) seen.insert(c.tool_id);
    if (out.tool_calls.size() != tools.size() || seen.size() != tools.size()) {
      throw PlannerProtocolError("parallel plan must name every tool exactly once");
    }
  }
  return out;
}

ExternalPlanner::ExternalPlanner(std::shared_ptr<LineTransport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw std::invalid_argument("planner transport is null");
}

PlanCommand ExternalPlanner::plan(const PlanContext& ctx) const {
  const json request = {{"prompt", render_planner_prompt(ctx)}, {"mode", to_string(ctx.mode)}, {"step", ctx.step}};
  std::string reply;
  try {
    reply = transport_->exchange(request.dump());
  } catch (const TransportError& e) {
    throw PlannerProtocolError(std::string("planner unreachable: ") + e.what());
  }
  return parse_plan_reply(reply, ctx.tools ? *ctx.tools : std::vector<ToolSpec>{}, ctx.mode);
}

// ---- configuration

int planned_budget(const RunConfig& config) {
  return config.mode == Mode::parallel ? static_cast<int>(config.tools.size()) : 1;
}

void validate_config(const RunConfig& config) {
  if (config.steps < 1) throw ConfigError("steps must be positive");
  if (config.tools.empty()) throw ConfigError("tool set is empty");
  std::set<std::string> ids;
  for (const auto& t : config.tools) {
    if (t.tool_id.empty()) throw ConfigError("tool without id");
    if (!ids.insert(t.tool_id).second) throw ConfigError("duplicate tool id: " + t.tool_id);
    if (t.builtin.has_value() == (t.endpoint != nullptr)) {
      throw ConfigError("tool " + t.tool_id + " needs exactly one of a builtin profile or an endpoint");
    }
  }
  if (config.budget != 0 && config.budget != planned_budget(config)) {
    throw ConfigError("budget " + std::to_string(config.budget) + " does not fit mode " +
                      std::string(to_string(config.mode)) + " (expected " + std::to_string(planned_budget(config)) + ")");
  }
  if (config.mode == Mode::retrieve && !config.buffer) throw ConfigError("retrieve mode requires a buffer");
  if (config.property.id.empty()) throw ConfigError("property id is empty");
  if (!config.property.external && !is_builtin_property(config.property.id)) {
    throw ConfigError("no evaluator for property " + config.property.id);
  }
  if (config.buffer && config.buffer->params() != config.fp) {
    throw ConfigError("buffer fingerprint parameters differ from the run's");
  }
}

// ---- execution

namespace {

struct Lead {
  MolGraph mol;
  std::string canonical;
  Fingerprint fp{2048, 2};
  double value = 0.0;
  std::uint64_t seed = 0;
};

double signed_change(Direction d, double value, double reference) {
  return d == Direction::maximize ? value - reference : reference - value;
}

std::vector<CandidateCheck> check_candidates(const RunConfig& config, const Lead& lead,
                                             const std::vector<std::string>& candidates) {
  std::vector<CandidateCheck> checks(candidates.size());
  std::vector<MolGraph> mols;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = checks[i];
    c.smiles = candidates[i];
    try {
      auto mol = parse_smiles(candidates[i]);
      c.valid = true;
      c.canonical = canonical_form(mol);
      c.sim = tanimoto(morgan_fp(mol, config.fp), lead.fp).value();
      mols.push_back(std::move(mol));
      where.push_back(i);
    } catch (const ParseError& e) {
      c.failure = FailureKind::invalid_structure;
      c.message = e.what();
    }
  }

  std::vector<EvalResult> results;
  std::string batch_error;
  if (!mols.empty()) {
    try {
      results = evaluate_many(config.property, mols);
    } catch (const EvaluatorUnavailable& e) {
      batch_error = e.what();
    }
  }
  const PropertyValue reference{lead.value, config.property.id};
  for (std::size_t k = 0; k < where.size(); ++k) {
    auto& c = checks[where[k]];
    if (batch_error.empty() && results[k].value) {
      c.value = *results[k].value;
      c.improvement = signed_change(config.property.direction, *c.value, lead.value);
      c.improved = is_improvement(config.property, {*c.value, config.property.id}, reference);
    } else {
      c.message = batch_error.empty() ? results[k].error : batch_error;
    }
    if (*c.sim < config.tau.value()) {
      c.failure = FailureKind::similarity_violation;
    } else if (!c.value) {
      c.failure = FailureKind::evaluator_error;
    } else if (!c.improved) {
      c.failure = FailureKind::no_improvement;
    }
  }
  return checks;
}

Attempt run_attempt(const RunConfig& config, const Lead& lead, const ToolSpec& tool, const ToolAction& action,
                    int ordinal, int step, int attempt_no, const MolGraph& mol, const std::string& smiles,
                    const std::vector<FailedCase>& failed) {
  Attempt a;
  a.action = action;
  a.ordinal = ordinal;
  a.retry = attempt_no > 0;
  const auto instruction = build_instruction(tool, action.prompt_index, config.property, failed, smiles);
  try {
    auto result = invoke(tool, instruction, mol,
                         derive_seed(lead.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(ordinal),
                                     static_cast<std::uint64_t>(attempt_no)));
    a.candidates = std::move(result.candidates);
    a.raw_payload = std::move(result.raw_payload);
  } catch (const ToolUnavailable& e) {
    a.tool_error = e.what();
  }
  a.checks = check_candidates(config, lead, a.candidates);
  return a;
}

// First attempt, then one retry carrying the failed outputs, newest first.
std::vector<Attempt> run_action(const RunConfig& config, const Lead& lead, const ToolSpec& tool,
                                const ToolAction& action, int ordinal, int step, const MolGraph& mol,
                                const std::string& smiles) {
  std::vector<Attempt> out;
  out.push_back(run_attempt(config, lead, tool, action, ordinal, step, 0, mol, smiles, {}));
  if (out.front().any_passed() || !config.self_correction) return out;
  std::vector<FailedCase> failed;
  const auto& checks = out.front().checks;
  for (auto it = checks.rbegin(); it != checks.rend(); ++it) {
    failed.push_back({it->smiles, *it->failure, it->message});
  }
  out.push_back(run_attempt(config, lead, tool, action, ordinal, step, 1, mol, smiles, failed));
  return out;
}

const ToolSpec* find_tool(const std::vector<ToolSpec>& tools, const std::string& id) {
  for (const auto& t : tools) {
    if (t.tool_id == id) return &t;
  }
  return nullptr;
}

std::string describe(const TrajectoryRecord& r) {
  std::string out = r.lead + " ->";
  for (const auto& a : r.actions) out += " " + a.tool_id + "[" + std::to_string(a.prompt_index) + "]";
  return out;
}

}  // namespace

CampaignResult run_campaign(const RunConfig& config, const MolGraph& lead_mol) {
  validate_config(config);
  if (!validate(lead_mol).valid) throw InvalidInput("lead molecule is not valid");

  Lead lead;
  lead.canonical = canonical_form(lead_mol);
  // Edits depend on atom order, so work on the canonical spelling.
  lead.mol = parse_smiles(lead.canonical);
  lead.fp = morgan_fp(lead_mol, config.fp);
  lead.seed = derive_seed(config.seed, lead.canonical);

  CampaignResult result;
  result.lead = lead.canonical;
  result.property_id = config.property.id;
  result.direction = config.property.direction;
  result.mode = config.mode;
  try {
    lead.value = evaluate(config.property, lead_mol).value;
    result.lead_value = lead.value;
  } catch (const EvaluatorUnavailable& e) {
    result.error = std::string("lead could not be evaluated: ") + e.what();
    return result;
  }

  MolGraph current = lead.mol;
  std::string current_smiles = lead.canonical;
  std::vector<ToolAction> traj;
  std::size_t cursor = 0;
  std::optional<std::size_t> template_source;
  const BuiltinPlanner builtin;

  auto plan_step = [&](const PlanContext& ctx, int step) {
    if (config.planner) {
      try {
        auto p = config.planner->plan(ctx);
        // Re-check replies from any planner implementation.
        json doc = {{"tool_calls", json::array()}};
        for (const auto& c : p.tool_calls) doc["tool_calls"].push_back({{"tool_name", c.tool_id}, {"prompt_index", c.prompt_index}});
        return parse_plan_reply(doc.dump(), config.tools, config.mode);
      } catch (const PlannerProtocolError& e) {
        result.notes.push_back("step " + std::to_string(step + 1) + ": planner reply rejected (" + e.what() +
                               "); builtin plan used");
      }
    }
    return builtin.plan(ctx);
  };

  for (int step = 0; step < config.steps; ++step) {
    StepRecord record;
    record.step_index = step;
    record.start_molecule = current_smiles;

    PlanContext ctx;
    ctx.smiles = current_smiles;
    ctx.property = &config.property;
    ctx.mode = config.mode;
    ctx.step = step;
    ctx.tools = &config.tools;
    ctx.history = &result.steps;

    if (config.mode == Mode::parallel) {
      record.plan = plan_step(ctx, step);
    } else {
      if (config.mode == Mode::retrieve) {
        const auto hit = config.buffer->top1_similar(current, config.property.id);
        if (hit && hit->similarity >= config.tau) {
          ctx.retrieval_hint = describe(hit->record);
          if (template_source != hit->index) {
            traj = trajectory_template(hit->record);
            cursor = 0;
            template_source = hit->index;
          }
        }
      }
      if (cursor >= traj.size()) {
        traj = plan_step(ctx, step).tool_calls;
        cursor = 0;
      }
      ToolAction action = traj[cursor++];
      if (!find_tool(config.tools, action.tool_id)) {
        result.notes.push_back("step " + std::to_string(step + 1) + ": template names unknown tool " + action.tool_id +
                               "; builtin plan used");
        action = builtin.plan(ctx).tool_calls.front();
      }
      record.plan.tool_calls = {action};
    }

    const auto& calls = record.plan.tool_calls;
    std::vector<std::vector<Attempt>> per_action(calls.size());
    if (config.mode == Mode::parallel && calls.size() > 1) {
      std::vector<std::future<std::vector<Attempt>>> futures;
      for (std::size_t i = 0; i < calls.size(); ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
          return run_action(config, lead, *find_tool(config.tools, calls[i].tool_id), calls[i], static_cast<int>(i),
                            step, current, current_smiles);
        }));
      }
      for (std::size_t i = 0; i < calls.size(); ++i) per_action[i] = futures[i].get();
    } else {
      for (std::size_t i = 0; i < calls.size(); ++i) {
        per_action[i] = run_action(config, lead, *find_tool(config.tools, calls[i].tool_id), calls[i],
                                   static_cast<int>(i), step, current, current_smiles);
      }
    }

    for (auto& attempts : per_action) {
      if (attempts.size() == 2 && attempts[1].any_passed()) record.rescued = true;
      for (auto& a : attempts) {
        for (const auto& c : a.checks) {
          if (!c.passed()) continue;
          const bool better = !record.chosen || *c.improvement > record.chosen->improvement ||
                              (*c.improvement == record.chosen->improvement && c.canonical < record.chosen->smiles);
          if (better) record.chosen = Chosen{c.canonical, *c.value, *c.sim, *c.improvement, a.action, a.retry};
        }
        ++result.invocation_count;
        record.attempts.push_back(std::move(a));
      }
    }

    if (record.chosen) {
      current = parse_smiles(record.chosen->smiles);
      current_smiles = record.chosen->smiles;
      if (!result.best_seen || record.chosen->improvement > result.best_seen->improvement) {
        BestSeen best;
        best.smiles = record.chosen->smiles;
        best.value = record.chosen->value;
        best.sim = record.chosen->sim;
        best.improvement = record.chosen->improvement;
        const auto ri = relative_improvement(config.property, {lead.value, config.property.id},
                                             {best.value, config.property.id});
        best.relative_improvement = ri.relative;
        best.zero_reference = ri.zero_reference;
        best.step = step;
        result.best_seen = best;
      }
    }
    result.steps.push_back(std::move(record));
  }
  return result;
}

bool invocation_budget_check(const CampaignResult& result, const RunConfig& config) {
  if (!result.error.empty()) return result.steps.empty() && result.invocation_count == 0;
  if (result.mode != config.mode || static_cast<int>(result.steps.size()) != config.steps) return false;
  const auto k = static_cast<std::size_t>(planned_budget(config));
  int total = 0;
  for (const auto& step : result.steps) {
    if (step.plan.tool_calls.size() != k) return false;
    std::vector<int> per_ordinal(k, 0);
    for (const auto& a : step.attempts) {
      if (a.ordinal < 0 || static_cast<std::size_t>(a.ordinal) >= k) return false;
      if (!(a.action == step.plan.tool_calls[static_cast<std::size_t>(a.ordinal)])) return false;
      auto& n = per_ordinal[static_cast<std::size_t>(a.ordinal)];
      if (a.retry != (n == 1)) return false;
      if (++n > 2) return false;
    }
    for (int n : per_ordinal) {
      if (n < 1) return false;
    }
    total += static_cast<int>(step.attempts.size());
  }
  if (total != result.invocation_count) return false;
  if (config.mode != Mode::parallel && total > 2 * config.steps) return false;
  return true;
}

// ---- serialization

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json action_json(const ToolAction& a) { return {{"tool_name", a.tool_id}, {"prompt_index", a.prompt_index}}; }

ToolAction action_from(const json& j) { return {j.at("tool_name").get<std::string>(), j.at("prompt_index").get<int>()}; }

}  // namespace

std::string campaign_to_json_line(const CampaignResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    json calls = json::array();
    for (const auto& c : s.plan.tool_calls) calls.push_back(action_json(c));
    json attempts = json::array();
    for (const auto& a : s.attempts) {
      json checks = json::array();
      for (const auto& c : a.checks) {
        checks.push_back({{"smiles", c.smiles},
                          {"canonical", c.canonical},
                          {"valid", c.valid},
                          {"sim", opt(c.sim)},
                          {"value", opt(c.value)},
                          {"improvement", opt(c.improvement)},
                          {"improved", c.improved},
                          {"failure_kind", c.failure ? json(to_string(*c.failure)) : json(nullptr)},
                          {"message", c.message}});
      }
      attempts.push_back({{"action", action_json(a.action)},
                          {"ordinal", a.ordinal},
                          {"retry", a.retry},
                          {"candidates", a.candidates},
                          {"raw_payload", a.raw_payload},
                          {"tool_error", a.tool_error},
                          {"checks", checks}});
    }
    json chosen = nullptr;
    if (s.chosen) {
      chosen = {{"smiles", s.chosen->smiles},         {"value", s.chosen->value},
                {"sim", s.chosen->sim},               {"improvement", s.chosen->improvement},
                {"action", action_json(s.chosen->action)}, {"from_retry", s.chosen->from_retry}};
    }
    steps.push_back({{"step_index", s.step_index},
                     {"start_molecule", s.start_molecule},
                     {"plan", {{"tool_calls", calls}}},
                     {"attempts", attempts},
                     {"chosen", chosen},
                     {"rescued", s.rescued}});
  }
  json best = nullptr;
  if (r.best_seen) {
    const auto& b = *r.best_seen;
    best = {{"smiles", b.smiles},
            {"value", b.value},
            {"sim", b.sim},
            {"improvement", b.improvement},
            {"relative_improvement", opt(b.relative_improvement)},
            {"zero_reference", b.zero_reference},
            {"step", b.step}};
  }
  const json doc = {{"lead", r.lead},
                    {"property_id", r.property_id},
                    {"direction", to_string(r.direction)},
                    {"mode", to_string(r.mode)},
                    {"lead_value", opt(r.lead_value)},
                    {"steps", steps},
                    {"best_seen", best},
                    {"invocation_count", r.invocation_count},
                    {"notes", r.notes},
                    {"error", r.error}};
  return doc.dump();
}

CampaignResult campaign_from_json_line(const std::string& line) {
  try {
    const json doc = json::parse(line);
    CampaignResult r;
    r.lead = doc.at("lead").get<std::string>();
    r.property_id = doc.at("property_id").get<std::string>();
    r.direction = direction_from_string(doc.at("direction").get<std::string>());
    r.mode = mode_from_string(doc.at("mode").get<std::string>());
    r.lead_value = opt_double(doc.at("lead_value"));
    for (const auto& s : doc.at("steps")) {
      StepRecord step;
      step.step_index = s.at("step_index").get<int>();
      step.start_molecule = s.at("start_molecule").get<std::string>();
      for (const auto& c : s.at("plan").at("tool_calls")) step.plan.tool_calls.push_back(action_from(c));
      for (const auto& a : s.at("attempts")) {
        Attempt at;
        at.action = action_from(a.at("action"));
        at.ordinal = a.at("ordinal").get<int>();
        at.retry = a.at("retry").get<bool>();
        at.candidates = a.at("candidates").get<std::vector<std::string>>();
        at.raw_payload = a.at("raw_payload").get<std::string>();
        at.tool_error = a.at("tool_error").get<std::string>();
        for (const auto& c : a.at("checks")) {
          CandidateCheck ch;
          ch.smiles = c.at("smiles").get<std::string>();
          ch.canonical = c.at("canonical").get<std::string>();
          ch.valid = c.at("valid").get<bool>();
          ch.sim = opt_double(c.at("sim"));
          ch.value = opt_double(c.at("value"));
          ch.improvement = opt_double(c.at("improvement"));
          ch.improved = c.at("improved").get<bool>();
          if (!c.at("failure_kind").is_null()) ch.failure = failure_kind_from_string(c.at("failure_kind").get<std::string>());
          ch.message = c.at("message").get<std::string>();
          at.checks.push_back(std::move(ch));
        }
        step.attempts.push_back(std::move(at));
      }
      if (const auto& c = s.at("chosen"); !c.is_null()) {
        step.chosen = Chosen{c.at("smiles").get<std::string>(), c.at("value").get<double>(), c.at("sim").get<double>(),
                             c.at("improvement").get<double>(), action_from(c.at("action")),
                             c.at("from_retry").get<bool>()};
      }
      step.rescued = s.at("rescued").get<bool>();
      r.steps.push_back(std::move(step));
    }
    if (const auto& b = doc.at("best_seen"); !b.is_null()) {
      BestSeen best;
      best.smiles = b.at("smiles").get<std::string>();
      best.value = b.at("value").get<double>();
      best.sim = b.at("sim").get<double>();
      best.improvement = b.at("improvement").get<double>();
      best.relative_improvement = opt_double(b.at("relative_improvement"));
      best.zero_reference = b.at("zero_reference").get<bool>();
      best.step = b.at("step").get<int>();
      r.best_seen = best;
    }
    r.invocation_count = doc.at("invocation_count").get<int>();
    r.notes = doc.at("notes").get<std::vector<std::string>>();
    r.error = doc.at("error").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed campaign record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("malformed campaign record: ") + e.what());
  }
}

std::optional<TrajectoryRecord> trajectory_from_campaign(const CampaignResult& result, const std::string& run_id,
                                                         const FingerprintParams& fp) {
  if (!result.best_seen || !result.lead_value || result.steps.empty()) return std::nullopt;
  TrajectoryRecord rec;
  const auto lead = parse_smiles(result.lead);
  rec.lead = canonical_form(lead);
  rec.lead_fp = morgan_fp(lead, fp);
  rec.property_id = result.property_id;
  StepOutcome last{result.lead, *result.lead_value, 1.0};
  for (const auto& s : result.steps) {
    if (s.chosen) {
      rec.actions.push_back(s.chosen->action);
      last = {s.chosen->smiles, s.chosen->value, s.chosen->sim};
    } else {
      rec.actions.push_back(s.plan.tool_calls.front());
    }
    rec.step_outcomes.push_back(last);
  }
  rec.final_ri = result.best_seen->relative_improvement.value_or(0.0);
  rec.run_id = run_id;
  return rec;
}

}  // namespace leadopt

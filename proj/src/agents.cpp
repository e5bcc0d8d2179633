#include "strides/agents.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "strides/prompts.hpp"

namespace strides {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join_snippets(const std::vector<std::string>& snippets) {
  std::string out;
  for (const auto& s : snippets) {
    if (!out.empty()) out += "\n";
    out += s;
  }
  return out;
}

ChatResponse call_backend(Backend& backend, const AgentConfig& cfg,
                          const std::string& role, const std::string& system_prompt,
                          const std::string& user_prompt, const ExchangeSink& sink) {
  ChatRequest req;
  req.system_prompt = system_prompt;
  req.user_prompt = user_prompt;
  req.temperature = cfg.temperature;
  req.role_tag = role;
  req.max_tokens = cfg.max_tokens;
  const auto t0 = std::chrono::steady_clock::now();
  ChatResponse resp = backend.complete(req);
  const auto t1 = std::chrono::steady_clock::now();
  if (sink) {
    Exchange ex;
    ex.role = role;
    ex.request = req;
    ex.response = resp;
    ex.duration_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    sink(ex);
  }
  return resp;
}

// One ask plus at most one repair re-ask. Backend errors propagate untouched;
// extraction errors become ParseFailure; parser errors keep their own codes.
template <typename T, typename Parser>
T ask_parse(Backend& backend, const AgentConfig& cfg, const std::string& role,
            const std::string& system_prompt, const std::string& user_prompt,
            const ExchangeSink& sink, Parser parser) {
  const ChatResponse first =
      call_backend(backend, cfg, role, system_prompt, user_prompt, sink);
  std::string error_text;
  try {
    return parser(extract_structured(first.text));
  } catch (const Error& e) {
    error_text = e.what();
  }
  const std::string repair_prompt =
      user_prompt +
      prompts::render(prompts::kRepairInstruction, {{"error", error_text}});
  const ChatResponse second =
      call_backend(backend, cfg, role, system_prompt, repair_prompt, sink);
  try {
    return parser(extract_structured(second.text));
  } catch (const Error& e) {
    if (e.code() == "NoObjectFound" || e.code() == "UnbalancedBraces")
      throw Error("ParseFailure", std::string("after repair re-ask: ") + e.what());
    throw;
  }
}

std::string text_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

std::vector<std::string> string_list(const json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v)
      if (e.is_string()) out.push_back(e.get<std::string>());
      else out.push_back(e.dump());
  } else if (v.is_string() && !v.get<std::string>().empty()) {
    out.push_back(v.get<std::string>());
  }
  return out;
}

double number_or(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    try {
      return std::stod(it->get<std::string>());
    } catch (...) {
      return fallback;
    }
  }
  return fallback;
}

int clamp_int(double v, int lo, int hi) {
  if (std::isnan(v)) return lo;
  return std::clamp(static_cast<int>(std::llround(v)), lo, hi);
}

std::string with_context(std::string prompt, const std::string& error_context) {
  if (!error_context.empty()) {
    prompt += "\n--- Refinement context ---\n" + error_context + "\n";
  }
  return prompt;
}

// Lexical keys a summary must contain to count as acknowledging a finding.
std::string ack_keyword(const std::string& finding_code) {
  const std::string n = normalize_term(finding_code);
  if (n.find("parallel") != std::string::npos) return "parallel trend";
  if (n.find("weak") != std::string::npos) return "weak instrument";
  if (n.find("multicollinearity") != std::string::npos) return "multicollinearity";
  if (n.find("convergence") != std::string::npos) return "converge";
  if (n.find("sign") != std::string::npos) return "sign";
  if (n.find("support") != std::string::npos) return "support";
  return n;
}

}  // namespace

const char* role_tag(AgentRole role) {
  switch (role) {
    case AgentRole::TheoryArchitect: return "theory";
    case AgentRole::Methodology: return "methodology";
    case AgentRole::DataRetrieval: return "retrieval";
    case AgentRole::SimulationPlanner: return "simulation";
    case AgentRole::AnalysisPlanner: return "analysis";
    case AgentRole::Summary: return "summary";
    case AgentRole::CriticLLM: return "critic";
    case AgentRole::DirectReasoner: return "direct";
    case AgentRole::Judge: return "judge";
  }
  return "?";
}

AgentConfig AgentConfig::defaults(AgentRole role) {
  AgentConfig cfg;
  cfg.role = role;
  switch (role) {
    case AgentRole::TheoryArchitect:
    case AgentRole::Methodology:
    case AgentRole::CriticLLM:
    case AgentRole::Judge:
      cfg.temperature = 0.0;
      break;
    default:
      cfg.temperature = 0.7;
      break;
  }
  return cfg;
}

nlohmann::json ask_structured(Backend& backend, const AgentConfig& cfg,
                              const std::string& role, std::string system_prompt,
                              std::string user_prompt, const ExchangeSink& sink) {
  return ask_parse<json>(backend, cfg, role, system_prompt, user_prompt, sink,
                         [](const json& j) { return j; });
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

HypothesisSet parse_hypotheses(const json& j) {
  HypothesisSet set;
  set.theoretical_framework = text_field(j, "theoretical_framework");
  auto it = j.find("hypotheses");
  if (it == j.end() || !it->is_array())
    throw Error("ParseFailure", "reply lacks a hypotheses array");
  int counter = 0;
  for (const auto& h : *it) {
    Hypothesis hyp;
    hyp.id = text_field(h, "id");
    if (hyp.id.empty()) hyp.id = "H" + std::to_string(counter + 1);
    hyp.statement = text_field(h, "statement");
    hyp.mechanism = text_field(h, "mechanism");
    hyp.expected_direction = direction_from_string(text_field(h, "expected_direction"));
    set.hypotheses.push_back(std::move(hyp));
    ++counter;
  }
  const ValidationReport report = validate_hypotheses(set);
  if (!report.ok())
    throw Error("ParseFailure", "invalid hypotheses: " + report.violations[0].code);
  return set;
}

DesignDraft parse_design_draft(const json& j) {
  DesignDraft draft;
  auto sel = j.find("model_selection");
  if (sel == j.end() || !sel->is_object())
    throw Error("ParseFailure", "reply lacks model_selection");
  const std::string model_name = text_field(*sel, "model_name");
  draft.model_name.raw = model_name;
  draft.model_name.family = normalize_model_type(model_name);  // UnknownModelType
  draft.reason = text_field(*sel, "reason");

  auto em = j.find("econometric_model");
  const json empty = json::object();
  const json& model = em != j.end() && em->is_object() ? *em : empty;
  draft.equation_text = text_field(model, "equation_latex");

  auto vars_it = model.find("variables_definition");
  const json& vars = vars_it != model.end() && vars_it->is_object() ? *vars_it : empty;
  draft.dependent = text_field(vars, "Y");
  draft.treatment = text_field(vars, "Treatment");
  if (vars.contains("Controls")) draft.controls = string_list(vars["Controls"]);
  const std::string inst = text_field(vars, "Instrumental_Variable");
  if (!inst.empty() && normalize_term(inst) != "null" && normalize_term(inst) != "none")
    draft.instrument = inst;

  auto grp_it = model.find("group_definition");
  const json& grp = grp_it != model.end() && grp_it->is_object() ? *grp_it : empty;
  draft.treatment_group = text_field(grp, "Treatment_Group");
  draft.control_group = text_field(grp, "Control_Group");

  if (draft.treatment.empty())
    throw Error("ParseFailure", "draft lacks a treatment variable");
  return draft;
}

VariableMapping parse_variable_mapping(const json& j, const DesignDraft& draft) {
  VariableMapping mapping;
  auto vm = j.find("variable_mapping");
  if (vm == j.end() || !vm->is_object())
    throw Error("ParseFailure", "reply lacks variable_mapping");
  for (auto it = vm->begin(); it != vm->end(); ++it) {
    VariableMapping::Entry entry;
    if (it.value().is_object()) {
      entry.source = text_field(it.value(), "source");
      const std::string proxy = text_field(it.value(), "proxy_if_needed");
      if (!proxy.empty() && normalize_term(proxy) != "null")
        entry.proxy_if_needed = proxy;
    } else {
      entry.source = it.value().is_string() ? it.value().get<std::string>()
                                            : it.value().dump();
    }
    mapping.entries[it.key()] = std::move(entry);
  }

  // The mapping must cover every draft variable; holes are backfilled and
  // flagged rather than rejected.
  auto ensure = [&](const std::string& name) {
    if (name.empty() || mapping.covers(name)) return;
    VariableMapping::Entry entry;
    entry.source = "unspecified";
    entry.proxy_if_needed = "unspecified";
    entry.backfilled = true;
    mapping.entries[name] = std::move(entry);
  };
  ensure(draft.dependent);
  ensure(draft.treatment);
  for (const auto& c : draft.controls) ensure(c);
  if (draft.instrument) ensure(*draft.instrument);
  return mapping;
}

ToolCall parse_tool_call(const json& j) {
  ToolCall call;
  const std::string tool = text_field(j, "tool");
  if (tool.empty()) throw Error("ParseFailure", "reply lacks a tool name");
  call.tool = normalize_model_type(tool);
  auto cm = j.find("column_map");
  if (cm == j.end() || !cm->is_object())
    throw Error("ParseFailure", "reply lacks column_map");
  for (auto it = cm->begin(); it != cm->end(); ++it) {
    if (it.value().is_string()) call.column_map[it.key()] = it.value().get<std::string>();
  }
  if (auto op = j.find("options"); op != j.end() && op->is_object()) {
    for (auto it = op->begin(); it != op->end(); ++it) {
      if (it.value().is_number()) {
        call.options[it.key()] = it.value().get<double>();
      } else if (it.value().is_string()) {
        try {
          call.options[it.key()] = std::stod(it.value().get<std::string>());
        } catch (...) {
        }
      }
    }
  }
  return call;
}

CausalDesign parse_design_reply(const json& j) {
  CausalDesign design = design_from_json(j);
  if (!design.model_type.family)
    throw Error("UnknownModelType", design.model_type.raw);
  const ValidationReport report = validate_design(design);
  if (!report.ok()) {
    std::string codes;
    for (const auto& v : report.violations) {
      if (!codes.empty()) codes += ", ";
      codes += v.code;
    }
    throw Error("SchemaViolation", codes);
  }
  return design;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

nlohmann::ordered_json draft_to_json(const DesignDraft& draft) {
  ordered_json j;
  j["model"] = draft.model_name.raw;
  j["reason"] = draft.reason;
  j["equation"] = draft.equation_text;
  j["dependent"] = draft.dependent;
  j["treatment"] = draft.treatment;
  j["controls"] = draft.controls;
  j["instrument"] = draft.instrument ? json(*draft.instrument) : json(nullptr);
  j["treatment_group"] = draft.treatment_group;
  j["control_group"] = draft.control_group;
  return j;
}

HypothesisSet run_theory_architect(const PolicyMetadata& meta, const AgentConfig& cfg,
                                   Backend& backend, const ExchangeSink& sink) {
  const std::string user = prompts::render(prompts::kTheoryArchitect,
                                           {{"policy_name", meta.policy_name},
                                            {"policy_type", meta.policy_type},
                                            {"region", meta.country_region},
                                            {"aim", meta.aim}});
  return ask_parse<HypothesisSet>(backend, cfg, role_tag(AgentRole::TheoryArchitect),
                                  join_snippets(cfg.knowledge_snippets), user, sink,
                                  parse_hypotheses);
}

namespace {

std::string hypotheses_summary(const HypothesisSet& hyp) {
  ordered_json j;
  j["theoretical_framework"] = hyp.theoretical_framework;
  ordered_json arr = ordered_json::array();
  for (const auto& h : hyp.hypotheses) {
    ordered_json hj;
    hj["id"] = h.id;
    hj["statement"] = h.statement;
    hj["mechanism"] = h.mechanism;
    hj["expected_direction"] = to_string(h.expected_direction);
    arr.push_back(hj);
  }
  j["hypotheses"] = arr;
  return j.dump();
}

}  // namespace

DesignDraft run_methodology(const HypothesisSet& hyp, const PolicyMetadata& meta,
                            const AgentConfig& cfg, Backend& backend,
                            const ExchangeSink& sink) {
  const std::string user = prompts::render(prompts::kMethodology,
                                           {{"policy_name", meta.policy_name},
                                            {"impl_time", meta.implementation_time},
                                            {"region", meta.country_region},
                                            {"hypotheses", hypotheses_summary(hyp)}});
  return ask_parse<DesignDraft>(backend, cfg, role_tag(AgentRole::Methodology),
                                join_snippets(cfg.knowledge_snippets), user, sink,
                                parse_design_draft);
}

VariableMapping run_data_retrieval(const DesignDraft& draft, const AgentConfig& cfg,
                                   Backend& backend, const ExchangeSink& sink) {
  const std::string user = prompts::render(
      prompts::kDataRetrieval, {{"results", draft_to_json(draft).dump()}});
  return ask_parse<VariableMapping>(
      backend, cfg, role_tag(AgentRole::DataRetrieval),
      join_snippets(cfg.knowledge_snippets), user, sink,
      [&](const json& j) { return parse_variable_mapping(j, draft); });
}

SimulationPlan plan_simulation(const DesignDraft& draft, const HypothesisSet& hyp,
                               const AgentConfig& cfg, Backend& backend,
                               const ExchangeSink& sink) {
  if (!draft.model_name.family)
    throw Error("UnknownModelType", draft.model_name.raw);
  const ModelType family = *draft.model_name.family;

  const Direction hyp_direction = hyp.hypotheses.empty()
                                      ? Direction::Positive
                                      : hyp.hypotheses.front().expected_direction;

  auto defaults = [&] {
    DgpConfig config;
    config.family = family;
    config.effect = hyp_direction == Direction::Negative ? -2.0 : 2.0;
    config.direction = hyp_direction;
    config.noise_sd = 1.0;
    return config;
  };

  auto parser = [&](const json& j) {
    DgpConfig config = defaults();
    Direction dir = hyp_direction;
    const std::string dir_text = text_field(j, "effect_direction");
    if (!dir_text.empty()) dir = direction_from_string(dir_text);
    const double magnitude = std::abs(number_or(j, "effect_magnitude", 2.0));
    config.effect = dir == Direction::Negative ? -magnitude : magnitude;
    config.direction = dir;
    config.noise_sd = std::max(0.0, number_or(j, "noise_sd", 1.0));
    switch (family) {
      case ModelType::DiD: {
        config.n_units = clamp_int(number_or(j, "n_units", 30), 4, 50);
        config.n_periods = clamp_int(number_or(j, "n_periods", 10), 4, 16);
        const int rows = config.n_units * config.n_periods;
        if (rows < 200 || rows > 500) {
          config.n_units = 30;
          config.n_periods = 10;
        }
        config.pre_trend_gap = number_or(j, "pre_trend_gap", 0.0);
        break;
      }
      case ModelType::IV:
        config.n_rows = clamp_int(number_or(j, "n_rows", 400), 200, 500);
        config.instrument_strength = number_or(j, "instrument_strength", 0.5);
        break;
      case ModelType::RD:
        config.n_rows = clamp_int(number_or(j, "n_rows", 400), 200, 500);
        config.cutoff = number_or(j, "cutoff", 0.0);
        break;
      case ModelType::SCM: {
        config.n_donors = clamp_int(number_or(j, "n_donors", 20), 3, 40);
        config.n_pre = clamp_int(number_or(j, "n_pre", 8), 3, 16);
        config.n_post = clamp_int(number_or(j, "n_post", 4), 1, 8);
        const int rows = (config.n_donors + 1) * (config.n_pre + config.n_post);
        if (rows < 200 || rows > 500) {
          config.n_donors = 20;
          config.n_pre = 8;
          config.n_post = 4;
        }
        break;
      }
      case ModelType::PSM:
        config.n_rows = clamp_int(number_or(j, "n_rows", 400), 200, 500);
        config.n_covariates = clamp_int(number_or(j, "n_covariates", 3), 1, 8);
        break;
    }
    SimulationPlan plan;
    plan.config = config;
    return plan;
  };

  const std::string user = prompts::render(
      prompts::kSimulationParams, {{"design", draft_to_json(draft).dump()},
                                   {"hypotheses", hypotheses_summary(hyp)},
                                   {"error_context", ""}});
  try {
    return ask_parse<SimulationPlan>(backend, cfg,
                                     role_tag(AgentRole::SimulationPlanner),
                                     join_snippets(cfg.knowledge_snippets), user,
                                     sink, parser);
  } catch (const Error& e) {
    if (e.code() == "TranscriptMiss" || e.code() == "Exhausted" ||
        e.code() == "AuthMissing")
      throw;
    SimulationPlan plan;
    plan.config = defaults();
    plan.used_defaults = true;
    return plan;
  }
}

ToolCall plan_analysis(const DesignDraft& draft, const ColumnSchema& schema,
                       const AgentConfig& cfg, Backend& backend,
                       const ExchangeSink& sink) {
  ordered_json cols = ordered_json::array();
  for (const auto& e : schema.entries) {
    ordered_json c;
    c["name"] = e.name;
    c["kind"] = to_string(e.kind);
    cols.push_back(c);
  }
  const std::string user = prompts::render(
      prompts::kAnalysisPlan, {{"methodology", draft_to_json(draft).dump()},
                               {"columns", cols.dump()},
                               {"error_context", ""}});
  return ask_parse<ToolCall>(backend, cfg, role_tag(AgentRole::AnalysisPlanner),
                             join_snippets(cfg.knowledge_snippets), user, sink,
                             [&](const json& j) {
                               ToolCall call = parse_tool_call(j);
                               validate_tool_call(call, schema);
                               return call;
                             });
}

CausalDesign run_summary(const SummaryContext& ctx, const AgentConfig& cfg,
                         Backend& backend, const ExchangeSink& sink) {
  ordered_json meta_json;
  meta_json["Policy name"] = ctx.meta.policy_name;
  meta_json["Policy type"] = ctx.meta.policy_type;
  meta_json["Country/Region"] = ctx.meta.country_region;
  meta_json["Aim"] = ctx.meta.aim;

  const std::string user = prompts::render(
      prompts::kSummary,
      {{"meta", meta_json.dump()},
       {"methodology", draft_to_json(ctx.draft).dump()},
       {"results", ctx.results.dump()},
       {"critic_pass", ctx.critic_pass ? "true" : "false"},
       {"critic_critique", ctx.critic_critique},
       {"critic_suggestion", ctx.critic_suggestion}});

  // Keep the last structurally valid design so a missing acknowledgment after
  // the repair re-ask can be patched instead of failing the run.
  std::optional<CausalDesign> last_valid;
  auto parser = [&](const json& j) {
    CausalDesign design = parse_design_reply(j);
    last_valid = design;
    if (!ctx.critic_pass) {
      const std::string haystack =
          normalize_term(design.explanation + " " + design.model_significance);
      for (const auto& code : ctx.finding_codes) {
        if (haystack.find(ack_keyword(code)) == std::string::npos)
          throw Error("MissingAcknowledgment",
                      "summary must acknowledge '" + code + "'");
      }
    }
    return design;
  };

  try {
    return ask_parse<CausalDesign>(backend, cfg, role_tag(AgentRole::Summary),
                                   join_snippets(cfg.knowledge_snippets), user,
                                   sink, parser);
  } catch (const Error& e) {
    if (e.code() == "MissingAcknowledgment" && last_valid) {
      std::string codes;
      for (const auto& c : ctx.finding_codes) {
        if (!codes.empty()) codes += ", ";
        codes += c;
      }
      CausalDesign design = *last_valid;
      design.model_significance += " [unverified: critic flagged " + codes + "]";
      return design;
    }
    throw;
  }
}

CausalDesign run_direct(const PolicyMetadata& meta, const AgentConfig& cfg,
                        Backend& backend, const ExchangeSink& sink) {
  const std::string user = prompts::render(
      prompts::kDirectReasoning,
      {{"policy_name", meta.policy_name},
       {"policy_type", meta.policy_type},
       {"country_region", meta.country_region},
       {"observed_period", meta.observed_period},
       {"implementation_time", meta.implementation_time},
       {"aim", meta.aim},
       {"dataset", meta.dataset_description}});
  return ask_parse<CausalDesign>(backend, cfg, role_tag(AgentRole::DirectReasoner),
                                 join_snippets(cfg.knowledge_snippets), user, sink,
                                 parse_design_reply);
}

}  // namespace strides

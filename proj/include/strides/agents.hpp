#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "strides/backend.hpp"
#include "strides/schema.hpp"
#include "strides/simulate.hpp"
#include "strides/toolcall.hpp"

namespace strides {

enum class AgentRole {
  TheoryArchitect,
  Methodology,
  DataRetrieval,
  SimulationPlanner,
  AnalysisPlanner,
  Summary,
  CriticLLM,
  DirectReasoner,
  Judge,
};

const char* role_tag(AgentRole role);

struct AgentConfig {
  AgentRole role = AgentRole::TheoryArchitect;
  double temperature = 0.0;
  std::vector<std::string> knowledge_snippets;  // prepended to system prompts
  int max_tokens = 4096;

  // Logical-reasoning roles (TheoryArchitect, Methodology, CriticLLM, Judge)
  // default to temperature 0; simulation-adjacent and creative roles to 0.7.
  static AgentConfig defaults(AgentRole role);
};

// One backend exchange, reported to the caller for run-record telemetry.
struct Exchange {
  std::string role;
  ChatRequest request;
  ChatResponse response;
  double duration_ms = 0.0;
};
using ExchangeSink = std::function<void(const Exchange&)>;

// Methodology output before verification.
struct DesignDraft {
  ModelLabel model_name;
  std::string reason;
  std::string equation_text;
  std::string dependent;
  std::string treatment;
  std::vector<std::string> controls;
  std::optional<std::string> instrument;
  std::string treatment_group;
  std::string control_group;
};

nlohmann::ordered_json draft_to_json(const DesignDraft& draft);

struct VariableMapping {
  struct Entry {
    std::string source;
    std::optional<std::string> proxy_if_needed;
    bool backfilled = false;  // parser filled a hole the reply left
  };
  std::map<std::string, Entry> entries;

  bool covers(const std::string& variable) const { return entries.count(variable) > 0; }
};

// DGP parameters extracted from the simulation step, with everything clamped
// into the generator's valid band.
struct SimulationPlan {
  DgpConfig config;
  bool used_defaults = false;  // reply unusable after repair; defaults applied
};

// Each operation performs at most two backend calls: the initial ask plus one
// repair re-ask with the parse error appended. Parse problems surface as
// Error("ParseFailure"); semantic ones keep their own codes
// (UnknownModelType, ColumnMiss, ...).
HypothesisSet run_theory_architect(const PolicyMetadata& meta, const AgentConfig& cfg,
                                   Backend& backend, const ExchangeSink& sink = {});

DesignDraft run_methodology(const HypothesisSet& hyp, const PolicyMetadata& meta,
                            const AgentConfig& cfg, Backend& backend,
                            const ExchangeSink& sink = {});

VariableMapping run_data_retrieval(const DesignDraft& draft, const AgentConfig& cfg,
                                   Backend& backend, const ExchangeSink& sink = {});

// Extraction step behind the mock-data phase; falls back to family defaults
// when the reply is unusable, so a bad simulation reply cannot kill the run.
SimulationPlan plan_simulation(const DesignDraft& draft, const HypothesisSet& hyp,
                               const AgentConfig& cfg, Backend& backend,
                               const ExchangeSink& sink = {});

ToolCall plan_analysis(const DesignDraft& draft, const ColumnSchema& schema,
                       const AgentConfig& cfg, Backend& backend,
                       const ExchangeSink& sink = {});

// Pipeline context the summary step needs.
struct SummaryContext {
  PolicyMetadata meta;
  DesignDraft draft;
  nlohmann::ordered_json results;  // execution result payload
  bool critic_pass = true;
  std::string critic_critique;
  std::string critic_suggestion;
  std::vector<std::string> finding_codes;  // triggered findings to acknowledge
};

// When the critic flagged failures, the reply must mention each finding
// (checked lexically); after a failed repair the mention is appended to
// Model Significance instead of failing the run.
CausalDesign run_summary(const SummaryContext& ctx, const AgentConfig& cfg,
                         Backend& backend, const ExchangeSink& sink = {});

// Single-shot baseline: one generation, same parse contract as run_summary.
CausalDesign run_direct(const PolicyMetadata& meta, const AgentConfig& cfg,
                        Backend& backend, const ExchangeSink& sink = {});

// Shared ask/extract/repair helper (exposed for the critic and judge).
nlohmann::json ask_structured(Backend& backend, const AgentConfig& cfg,
                              const std::string& role, std::string system_prompt,
                              std::string user_prompt, const ExchangeSink& sink);

// Parsers are public so replies can be exercised without a backend.
HypothesisSet parse_hypotheses(const nlohmann::json& j);
DesignDraft parse_design_draft(const nlohmann::json& j);
VariableMapping parse_variable_mapping(const nlohmann::json& j, const DesignDraft& draft);
ToolCall parse_tool_call(const nlohmann::json& j);
CausalDesign parse_design_reply(const nlohmann::json& j);

}  // namespace strides

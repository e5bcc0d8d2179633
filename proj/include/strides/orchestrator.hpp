#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strides/agents.hpp"
#include "strides/backend.hpp"
#include "strides/critic.hpp"
#include "strides/estimators.hpp"
#include "strides/schema.hpp"

namespace strides {

enum class Phase {
  Theory,
  Methodology,
  Retrieval,
  Simulation,
  Analysis,
  Execution,
  Critique,
  Summary,
  Done,
  Failed,
};

const char* to_string(Phase p);

struct PipelineConfig {
  int max_iterations = 3;
  std::uint64_t seed = 42;
  bool critic_llm = true;  // run the critic prompt on top of the hard checks
  std::vector<std::string> knowledge_snippets;

  AgentConfig agent(AgentRole role) const;
};

struct StepLogEntry {
  Phase phase = Phase::Theory;
  std::string role;
  double temperature = 0.0;
  std::string prompt_digest;
  std::string response_digest;
  double duration_ms = 0.0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool tokens_estimated = false;
};

struct PipelineState {
  Phase phase = Phase::Theory;
  int iteration = 0;
  BenchInstance instance;

  // Accumulated artifacts; refinement clears everything downstream of the
  // routed phase so stale intermediates never leak forward.
  std::optional<HypothesisSet> hyp;
  std::optional<DesignDraft> draft;
  std::optional<VariableMapping> mapping;
  std::optional<SimulationPlan> sim_plan;
  std::optional<MockDataset> data;
  std::optional<ColumnSchema> schema;
  std::optional<ToolCall> call;
  std::optional<ExecutionResult> exec;
  std::optional<CritiqueReport> critique;
  std::optional<CausalDesign> final_design;

  std::vector<StepLogEntry> step_log;
  std::vector<Phase> trace;  // phases executed, in order
  std::optional<std::string> failure;
};

struct RunRecord {
  std::string instance_id;
  std::string mode;  // "strides" | "direct"
  std::optional<CausalDesign> final_design;
  int iterations_used = 0;
  bool verified = false;
  bool failed = false;
  std::string failure_detail;
  std::vector<StepLogEntry> step_log;
  long total_tokens = 0;
  std::vector<std::string> phase_trace;
};

// Applies exactly one phase transition. Agent-step errors land in
// Phase::Failed with the failure recorded; calling on Done/Failed throws
// Error("IllegalTransition").
PipelineState step(PipelineState state, const PipelineConfig& cfg, Backend& backend);

RunRecord run_pipeline(const BenchInstance& inst, const PipelineConfig& cfg,
                       Backend& backend);

RunRecord run_direct_mode(const BenchInstance& inst, const PipelineConfig& cfg,
                          Backend& backend);

nlohmann::ordered_json run_record_to_json(const RunRecord& record);

// Digest over the deterministic fields (durations excluded): fixed
// (instance, config, transcript) reproduce it bit for bit.
std::string run_record_digest(const RunRecord& record);

std::uint64_t derive_dataset_seed(std::uint64_t base_seed,
                                  const std::string& instance_id, int iteration);

}  // namespace strides

#include "strides/orchestrator.hpp"

#include <algorithm>

#include "strides/digest.hpp"
#include "strides/rng.hpp"

namespace strides {

namespace {

using nlohmann::ordered_json;

ExchangeSink make_sink(PipelineState& state, Phase phase) {
  return [&state, phase](const Exchange& ex) {
    StepLogEntry entry;
    entry.phase = phase;
    entry.role = ex.role;
    entry.temperature = ex.request.temperature;
    entry.prompt_digest =
        digest_hex(ex.request.system_prompt + "\x1f" + ex.request.user_prompt);
    entry.response_digest = digest_hex(ex.response.text);
    entry.duration_ms = ex.duration_ms;
    entry.prompt_tokens = ex.response.prompt_tokens;
    entry.completion_tokens = ex.response.completion_tokens;
    entry.tokens_estimated = ex.response.tokens_estimated;
    state.step_log.push_back(std::move(entry));
  };
}

void clear_from_methodology(PipelineState& state) {
  state.draft.reset();
  state.mapping.reset();
  state.sim_plan.reset();
  state.data.reset();
  state.schema.reset();
  state.call.reset();
  state.exec.reset();
}

void clear_from_analysis(PipelineState& state) {
  state.call.reset();
  state.exec.reset();
}

std::vector<std::string> triggered_codes(const CritiqueReport& report) {
  std::vector<std::string> codes;
  for (const auto& d : report.findings)
    if (d.triggered) codes.push_back(to_string(d.code));
  return codes;
}

}  // namespace

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Theory: return "theory";
    case Phase::Methodology: return "methodology";
    case Phase::Retrieval: return "retrieval";
    case Phase::Simulation: return "simulation";
    case Phase::Analysis: return "analysis";
    case Phase::Execution: return "execution";
    case Phase::Critique: return "critique";
    case Phase::Summary: return "summary";
    case Phase::Done: return "done";
    case Phase::Failed: return "failed";
  }
  return "?";
}

AgentConfig PipelineConfig::agent(AgentRole role) const {
  AgentConfig cfg = AgentConfig::defaults(role);
  cfg.knowledge_snippets = knowledge_snippets;
  return cfg;
}

std::uint64_t derive_dataset_seed(std::uint64_t base_seed,
                                  const std::string& instance_id, int iteration) {
  return Rng::derive(base_seed, instance_id + "#" + std::to_string(iteration))
      .next_u64();
}

PipelineState step(PipelineState state, const PipelineConfig& cfg, Backend& backend) {
  if (state.phase == Phase::Done || state.phase == Phase::Failed)
    throw Error("IllegalTransition",
                std::string("step() on terminal phase ") + to_string(state.phase));

  const Phase current = state.phase;
  state.trace.push_back(current);
  ExchangeSink sink = make_sink(state, current);

  try {
    switch (current) {
      case Phase::Theory:
        state.hyp = run_theory_architect(state.instance.metadata,
                                         cfg.agent(AgentRole::TheoryArchitect),
                                         backend, sink);
        state.phase = Phase::Methodology;
        break;

      case Phase::Methodology:
        state.draft = run_methodology(*state.hyp, state.instance.metadata,
                                      cfg.agent(AgentRole::Methodology), backend,
                                      sink);
        state.phase = Phase::Retrieval;
        break;

      case Phase::Retrieval:
        state.mapping = run_data_retrieval(
            *state.draft, cfg.agent(AgentRole::DataRetrieval), backend, sink);
        state.phase = Phase::Simulation;
        break;

      case Phase::Simulation: {
        state.sim_plan =
            plan_simulation(*state.draft, *state.hyp,
                            cfg.agent(AgentRole::SimulationPlanner), backend, sink);
        const std::uint64_t seed = derive_dataset_seed(
            cfg.seed, state.instance.instance_id, state.iteration);
        state.data = simulate(state.sim_plan->config, seed);
        state.schema = describe_schema(*state.data);
        state.phase = Phase::Analysis;
        break;
      }

      case Phase::Analysis:
        state.call = plan_analysis(*state.draft, *state.schema,
                                   cfg.agent(AgentRole::AnalysisPlanner), backend,
                                   sink);
        state.phase = Phase::Execution;
        break;

      case Phase::Execution:
        state.exec = execute_tool(*state.call, *state.data);
        state.phase = Phase::Critique;
        break;

      case Phase::Critique: {
        state.critique =
            review(*state.exec, *state.hyp, *state.draft,
                   cfg.agent(AgentRole::CriticLLM),
                   cfg.critic_llm ? &backend : nullptr, sink);
        if (state.critique->pass) {
          state.phase = Phase::Summary;
        } else {
          state.iteration += 1;
          if (state.iteration >= cfg.max_iterations) {
            state.phase = Phase::Summary;  // cap reached; summarize unverified
          } else if (state.critique->route == RefinementTarget::Methodology) {
            clear_from_methodology(state);
            state.phase = Phase::Methodology;
          } else {
            clear_from_analysis(state);
            state.phase = Phase::Analysis;
          }
        }
        break;
      }

      case Phase::Summary: {
        SummaryContext ctx;
        ctx.meta = state.instance.metadata;
        ctx.draft = *state.draft;
        ctx.results = state.exec ? execution_to_json(*state.exec)
                                 : ordered_json::object();
        if (state.critique) {
          ctx.critic_pass = state.critique->pass;
          ctx.critic_critique = state.critique->critique_text;
          ctx.critic_suggestion = state.critique->suggestion_text;
          ctx.finding_codes = triggered_codes(*state.critique);
        }
        CausalDesign design =
            run_summary(ctx, cfg.agent(AgentRole::Summary), backend, sink);
        const bool verified = state.critique && state.critique->pass;
        if (!verified &&
            normalize_term(design.model_significance).find("unverified") ==
                std::string::npos) {
          design.model_significance +=
              " [unverified: critic checks did not pass within the iteration cap]";
        }
        state.final_design = std::move(design);
        state.phase = Phase::Done;
        break;
      }

      case Phase::Done:
      case Phase::Failed:
        break;  // unreachable
    }
  } catch (const Error& e) {
    state.failure = std::string(to_string(current)) + ": " + e.what();
    state.phase = Phase::Failed;
  }
  return state;
}

RunRecord run_pipeline(const BenchInstance& inst, const PipelineConfig& cfg,
                       Backend& backend) {
  PipelineState state;
  state.instance = inst;

  // Termination bound: every run halts within (max_iterations + 1) * |phases|
  // transitions by construction; the guard only catches logic regressions.
  const int guard = (cfg.max_iterations + 1) * 10 + 10;
  int steps = 0;
  while (state.phase != Phase::Done && state.phase != Phase::Failed) {
    state = step(std::move(state), cfg, backend);
    if (++steps > guard)
      throw Error("Nontermination", "pipeline exceeded its transition bound");
  }

  RunRecord record;
  record.instance_id = inst.instance_id;
  record.mode = "strides";
  record.final_design = state.final_design;
  record.iterations_used = state.iteration;
  record.verified = state.critique && state.critique->pass;
  record.failed = state.phase == Phase::Failed;
  if (state.failure) record.failure_detail = *state.failure;
  record.step_log = state.step_log;
  for (const Phase p : state.trace) record.phase_trace.emplace_back(to_string(p));
  for (const auto& e : record.step_log)
    record.total_tokens += e.prompt_tokens + e.completion_tokens;
  return record;
}

RunRecord run_direct_mode(const BenchInstance& inst, const PipelineConfig& cfg,
                          Backend& backend) {
  RunRecord record;
  record.instance_id = inst.instance_id;
  record.mode = "direct";
  record.iterations_used = 0;

  try {
    record.final_design = run_direct(
        inst.metadata, cfg.agent(AgentRole::DirectReasoner), backend,
        [&](const Exchange& ex) {
          StepLogEntry entry;
          entry.phase = Phase::Summary;
          entry.role = ex.role;
          entry.temperature = ex.request.temperature;
          entry.prompt_digest = digest_hex(ex.request.system_prompt + "\x1f" +
                                           ex.request.user_prompt);
          entry.response_digest = digest_hex(ex.response.text);
          entry.duration_ms = ex.duration_ms;
          entry.prompt_tokens = ex.response.prompt_tokens;
          entry.completion_tokens = ex.response.completion_tokens;
          entry.tokens_estimated = ex.response.tokens_estimated;
          record.step_log.push_back(std::move(entry));
        });
    record.verified = false;  // no verification loop in direct mode
    record.phase_trace = {"direct"};
  } catch (const Error& e) {
    record.failed = true;
    record.failure_detail = std::string("direct: ") + e.what();
    record.phase_trace = {"direct", "failed"};
  }
  for (const auto& e : record.step_log)
    record.total_tokens += e.prompt_tokens + e.completion_tokens;
  return record;
}

nlohmann::ordered_json run_record_to_json(const RunRecord& record) {
  ordered_json j;
  j["instance_id"] = record.instance_id;
  j["mode"] = record.mode;
  j["failed"] = record.failed;
  if (record.failed) j["failure"] = record.failure_detail;
  j["verified"] = record.verified;
  j["iterations_used"] = record.iterations_used;
  if (record.final_design) j["final_design"] = design_to_json(*record.final_design);
  j["phase_trace"] = record.phase_trace;
  ordered_json steps = ordered_json::array();
  for (const auto& e : record.step_log) {
    ordered_json s;
    s["phase"] = record.mode == "direct" ? "direct" : to_string(e.phase);
    s["role"] = e.role;
    s["temperature"] = e.temperature;
    s["prompt_digest"] = e.prompt_digest;
    s["response_digest"] = e.response_digest;
    s["duration_ms"] = e.duration_ms;
    s["prompt_tokens"] = e.prompt_tokens;
    s["completion_tokens"] = e.completion_tokens;
    if (e.tokens_estimated) s["tokens_estimated"] = true;
    steps.push_back(std::move(s));
  }
  j["step_log"] = steps;
  j["total_tokens"] = record.total_tokens;
  return j;
}

std::string run_record_digest(const RunRecord& record) {
  ordered_json j = run_record_to_json(record);
  for (auto& s : j["step_log"]) s.erase("duration_ms");
  return digest_hex(j.dump());
}

}  // namespace strides

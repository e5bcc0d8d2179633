#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strides/agents.hpp"
#include "strides/estimators.hpp"

namespace strides {

enum class RefinementTarget { Methodology, AnalysisPlanner, None };

const char* to_string(RefinementTarget t);

struct CritiqueReport {
  bool pass = true;
  std::vector<DiagnosticResult> findings;  // triggered findings only
  std::string critique_text;
  std::string suggestion_text;
  RefinementTarget route = RefinementTarget::None;
};

// Deterministic layer first: execution failure, triggered diagnostics, and a
// sign contradiction (significant estimate whose sign opposes every
// hypothesis direction) each force pass = false. When a backend is supplied,
// the critic prompt then runs and may add findings or text, but can never
// flip a deterministic fail back to pass. Degrades to deterministic-only on
// any backend or parse trouble.
CritiqueReport review(const ExecutionResult& exec, const HypothesisSet& hyp,
                      const DesignDraft& draft, const AgentConfig& cfg,
                      Backend* backend = nullptr, const ExchangeSink& sink = {});

// Assumption-level findings (parallel trends, weak instrument, sign
// contradiction) route to Methodology; everything mechanical routes to
// AnalysisPlanner; mixed findings go to Methodology.
// Throws Error("CalledOnPass") on a passing report.
RefinementTarget route(const CritiqueReport& report, const ExecutionResult& exec);

nlohmann::ordered_json critique_to_json(const CritiqueReport& report);

}  // namespace strides

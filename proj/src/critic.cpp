#include "strides/critic.hpp"

#include <algorithm>
#include <set>

#include "strides/prompts.hpp"

namespace strides {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kAlpha = 0.05;

bool is_assumption_code(DiagCode code) {
  return code == DiagCode::ParallelTrendsFail || code == DiagCode::WeakInstrument ||
         code == DiagCode::SignContradiction;
}

std::optional<DiagnosticResult> sign_contradiction(const EstimateResult& est,
                                                   const HypothesisSet& hyp) {
  if (hyp.hypotheses.empty() || !est.p_value) return std::nullopt;
  if (est.effect == 0.0) return std::nullopt;
  const bool effect_positive = est.effect > 0.0;
  const bool opposes_all = std::all_of(
      hyp.hypotheses.begin(), hyp.hypotheses.end(), [&](const Hypothesis& h) {
        return (h.expected_direction == Direction::Positive) != effect_positive;
      });
  // Statistic is the estimate's p-value when the sign opposes every
  // hypothesis, 1 otherwise, so triggered <=> statistic < threshold.
  DiagnosticResult d;
  d.code = DiagCode::SignContradiction;
  d.statistic = opposes_all ? *est.p_value : 1.0;
  d.threshold = kAlpha;
  d.triggered = d.statistic < d.threshold;
  if (!d.triggered && !opposes_all) return std::nullopt;
  return d;
}

bool recompute_pass(const ExecutionResult& exec,
                    const std::vector<DiagnosticResult>& findings) {
  if (!exec.ok()) return false;
  return std::none_of(findings.begin(), findings.end(),
                      [](const DiagnosticResult& d) { return d.triggered; });
}

}  // namespace

const char* to_string(RefinementTarget t) {
  switch (t) {
    case RefinementTarget::Methodology: return "Methodology";
    case RefinementTarget::AnalysisPlanner: return "AnalysisPlanner";
    case RefinementTarget::None: return "None";
  }
  return "?";
}

CritiqueReport review(const ExecutionResult& exec, const HypothesisSet& hyp,
                      const DesignDraft& draft, const AgentConfig& cfg,
                      Backend* backend, const ExchangeSink& sink) {
  CritiqueReport report;

  if (!exec.ok()) {
    report.critique_text = "Execution failure (" + exec.failure->kind +
                           ", " + exec.failure->code + "): " + exec.failure->detail;
  } else {
    for (const auto& d : exec.estimate->diagnostics)
      if (d.triggered) report.findings.push_back(d);
    if (auto contradiction = sign_contradiction(*exec.estimate, hyp))
      if (contradiction->triggered) report.findings.push_back(*contradiction);
  }
  report.pass = recompute_pass(exec, report.findings);

  if (backend != nullptr) {
    try {
      const json reply = ask_structured(
          *backend, cfg, role_tag(AgentRole::CriticLLM),
          /*system_prompt=*/"",
          prompts::render(prompts::kCritic,
                          {{"methodology", draft_to_json(draft).dump()},
                           {"code_results", execution_to_json(exec).dump()}}),
          sink);
      if (reply.contains("critique") && reply["critique"].is_string())
        report.critique_text = reply["critique"].get<std::string>();
      if (reply.contains("suggestion") && reply["suggestion"].is_string())
        report.suggestion_text = reply["suggestion"].get<std::string>();
      // The LLM may add findings (asserted, so triggered by construction);
      // deterministic findings stay regardless of its verdict.
      if (reply.contains("findings") && reply["findings"].is_array()) {
        for (const auto& f : reply["findings"]) {
          if (!f.is_string()) continue;
          const auto code = diag_code_from_string(f.get<std::string>());
          if (!code) continue;
          const bool already =
              std::any_of(report.findings.begin(), report.findings.end(),
                          [&](const DiagnosticResult& d) { return d.code == *code; });
          if (!already) report.findings.push_back({*code, 1.0, 0.0, true});
        }
      }
    } catch (const Error&) {
      if (report.critique_text.empty())
        report.critique_text = "critic reply unusable; deterministic checks only";
    }
    report.pass = recompute_pass(exec, report.findings);
  }

  report.route = report.pass ? RefinementTarget::None : route(report, exec);
  return report;
}

RefinementTarget route(const CritiqueReport& report, const ExecutionResult& exec) {
  if (report.pass) throw Error("CalledOnPass", "route() needs a failing report");
  (void)exec;
  const bool any_assumption =
      std::any_of(report.findings.begin(), report.findings.end(),
                  [](const DiagnosticResult& d) {
                    return d.triggered && is_assumption_code(d.code);
                  });
  // Dominant-cause rule: any assumption-level finding means the design itself
  // is suspect; purely mechanical trouble re-plans the analysis.
  return any_assumption ? RefinementTarget::Methodology
                        : RefinementTarget::AnalysisPlanner;
}

ordered_json critique_to_json(const CritiqueReport& report) {
  ordered_json j;
  j["pass"] = report.pass;
  ordered_json findings = ordered_json::array();
  for (const auto& d : report.findings) findings.push_back(diagnostic_to_json(d));
  j["findings"] = findings;
  j["critique"] = report.critique_text;
  j["suggestion"] = report.suggestion_text;
  j["route"] = to_string(report.route);
  return j;
}

}  // namespace strides

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strides/agents.hpp"
#include "strides/backend.hpp"
#include "strides/orchestrator.hpp"
#include "strides/schema.hpp"

namespace strides {

// The 45-point rubric: seven components, each on a fixed point set.
//   model_type  {0,10}   core_iv {0,5,10}   group {0,5,10}
//   controls    {0,2,5}  dependent {0,5}    reasoning {0,2}  explanation {0,3}
struct ScoreBreakdown {
  int model_type_score = 0;
  int core_iv_score = 0;
  int group_score = 0;
  int control_var_score = 0;
  int dependent_var_score = 0;
  int reasoning_score = 0;
  int explanation_score = 0;
  int total = 0;
  double normalized = 0.0;  // total / 45
  std::string comments;
};

enum class GradingMode { Judge, Lexical };

// Enforces the arithmetic invariants: component values snapped into their
// point sets, reasoning gated on a correct model type, total = component sum,
// normalized = total / 45.
ScoreBreakdown assemble_breakdown(int model_type, int core_iv, int group,
                                  int controls, int dependent, int reasoning,
                                  int explanation, std::string comments = "");

// Model type is always decided locally (family agreement through
// normalize_model_type). Judge mode delegates the semantic partial-credit
// calls to the judge prompt and re-enforces arithmetic and gating; on
// JudgeParseFailure it falls back to lexical with a note in comments.
ScoreBreakdown grade(const CausalDesign& pred, const CausalDesign& gt,
                     GradingMode mode, Backend* backend = nullptr,
                     const ExchangeSink& sink = {});

namespace lexical {
// Lowercases, expands the built-in alias list (gdp, r&d, fdi, ...), drops
// filler tokens, and measures |pred ∩ gt| / |gt| over the token sets.
double overlap(const std::string& pred, const std::string& gt);
enum class Match { Full, Partial, None };  // >= 0.8 / >= 0.4 of gt tokens
Match match(const std::string& pred, const std::string& gt);
}  // namespace lexical

struct GradedRun {
  std::string instance_id;
  std::string mode;  // "strides" | "direct"
  std::string domain;  // policy type
  std::optional<ModelType> gt_family;
  std::optional<ModelType> pred_family;
  ScoreBreakdown score;
};

struct ReportRow {
  double final_score = 0.0;
  double model_type = 0.0;
  double core_iv = 0.0;
  double group_def = 0.0;
  double controls = 0.0;
  double dep_var = 0.0;
  double reasoning = 0.0;
  double explanation = 0.0;
  int n = 0;
};

struct ReportTable {
  std::map<std::string, ReportRow> rows;  // keyed by mode
  std::optional<double> improve_pct;      // strides vs direct, when both exist
  std::array<std::array<int, 5>, 5> confusion{};  // [gt][pred] over ModelType
  int unclassified_predictions = 0;
  std::map<std::string, double> per_method_accuracy;
  std::map<std::string, double> per_domain_score;
  int total_records = 0;
};

// Per-configuration means of normalized scores (component / component max),
// relative improvement, confusion counts, and per-family/per-domain slices.
// Throws Error("EmptyInput") on an empty list.
ReportTable aggregate(const std::vector<GradedRun>& records);

double improve_pct(double direct_mean, double strides_mean);
std::string format_improve(double pct);  // "+15.1%"

std::string render_report_text(const ReportTable& table);
nlohmann::ordered_json report_to_json(const ReportTable& table);
nlohmann::ordered_json breakdown_to_json(const ScoreBreakdown& score);

}  // namespace strides

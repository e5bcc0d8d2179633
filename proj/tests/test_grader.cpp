#include <doctest.h>

#include "helpers.hpp"
#include "strides/grader.hpp"

using namespace strides;
using namespace strides::testing;

namespace {

CausalDesign iv_ground_truth() {
  CausalDesign d;
  d.model_type = ModelLabel::of("Instrumental Variables (IV)");
  d.reasons =
      "Innovative human capital may be endogenous to supply chain resilience "
      "due to reverse causality and omitted variables; a two-stage least "
      "squares design with a lagged instrument mitigates these concerns.";
  d.core_independent_variable = "Innovative Human Capital";
  d.control_variables = {"GOV", "FIN", "URB", "GDP", "CON", "INDUS"};
  d.instrumental_variable = "Lagged innovative human capital";
  d.group = {"Provinces with high innovative human capital intensity",
             "Provinces with low innovative human capital intensity"};
  d.model_significance = "Positive effect significant at the 1 percent level.";
  d.dependent_variable = "Supply chain resilience";
  d.explanation =
      "Innovative human capital strengthens regional supply chain resilience "
      "through technological and institutional innovation.";
  return d;
}

}  // namespace

TEST_CASE("grading a design against itself is a perfect 45") {
  const CausalDesign gt = iv_ground_truth();
  const ScoreBreakdown b = grade(gt, gt, GradingMode::Lexical);
  CHECK(b.model_type_score == 10);
  CHECK(b.core_iv_score == 10);
  CHECK(b.group_score == 10);
  CHECK(b.control_var_score == 5);
  CHECK(b.dependent_var_score == 5);
  CHECK(b.reasoning_score == 2);
  CHECK(b.explanation_score == 3);
  CHECK(b.total == 45);
  CHECK(b.normalized == doctest::Approx(1.0));
}

TEST_CASE("model type grading is invariant over alias surface forms") {
  const CausalDesign gt = iv_ground_truth();
  for (const char* alias : {"IV", "iv", "Instrumental Variables",
                            "Two-Stage Least Squares", "2SLS"}) {
    CausalDesign pred = gt;
    pred.model_type = ModelLabel::of(alias);
    const ScoreBreakdown b = grade(pred, gt, GradingMode::Lexical);
    CHECK(b.model_type_score == 10);
    CHECK(b.total == 45);
  }
  CausalDesign did_gt = gt;
  did_gt.model_type = ModelLabel::of("DiD");
  did_gt.instrumental_variable.reset();
  CausalDesign pred = did_gt;
  pred.model_type = ModelLabel::of("Difference-in-Differences");
  CHECK(grade(pred, did_gt, GradingMode::Lexical).model_type_score == 10);
}

TEST_CASE("control coverage thresholds: >50% gives 5, partial gives 2, none 0") {
  const CausalDesign gt = iv_ground_truth();  // six controls
  CausalDesign pred = gt;

  pred.control_variables = {"GOV", "FIN", "URB", "GDP"};  // 4/6
  CHECK(grade(pred, gt, GradingMode::Lexical).control_var_score == 5);

  pred.control_variables = {"GOV", "FIN"};  // 2/6
  CHECK(grade(pred, gt, GradingMode::Lexical).control_var_score == 2);

  pred.control_variables = {"rainfall", "temperature"};
  CHECK(grade(pred, gt, GradingMode::Lexical).control_var_score == 0);

  SUBCASE("alias expansion matches synonymous control names") {
    CausalDesign alias_gt = gt;
    alias_gt.control_variables = {"GDP per capita", "foreign direct investment"};
    CausalDesign alias_pred = gt;
    alias_pred.control_variables = {"per capita gross domestic product", "FDI"};
    CHECK(grade(alias_pred, alias_gt, GradingMode::Lexical).control_var_score == 5);
  }
}

TEST_CASE("lexical monotonicity: adding a matched control never lowers the score") {
  const CausalDesign gt = iv_ground_truth();
  CausalDesign pred = gt;
  pred.control_variables = {};
  int prev = grade(pred, gt, GradingMode::Lexical).control_var_score;
  for (const auto& c : gt.control_variables) {
    pred.control_variables.push_back(c);
    const int now = grade(pred, gt, GradingMode::Lexical).control_var_score;
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("reasoning is gated on a correct model type") {
  const CausalDesign gt = iv_ground_truth();
  CausalDesign pred = gt;
  pred.model_type = ModelLabel::of("Difference-in-Differences");
  pred.reasons = gt.reasons;  // eloquent but moot
  const ScoreBreakdown b = grade(pred, gt, GradingMode::Lexical);
  CHECK(b.model_type_score == 0);
  CHECK(b.reasoning_score == 0);
}

TEST_CASE("assemble_breakdown enforces point sets, gating, and arithmetic") {
  const ScoreBreakdown b = assemble_breakdown(7, 6, 11, 3, 4, 2, 2, "judge says");
  CHECK(b.model_type_score == 10);  // snapped
  CHECK(b.core_iv_score == 5);
  CHECK(b.group_score == 10);
  CHECK(b.control_var_score == 2);
  CHECK(b.dependent_var_score == 5);
  CHECK(b.explanation_score == 3);
  CHECK(b.total == b.model_type_score + b.core_iv_score + b.group_score +
                       b.control_var_score + b.dependent_var_score +
                       b.reasoning_score + b.explanation_score);
  CHECK(b.normalized == doctest::Approx(b.total / 45.0));

  const ScoreBreakdown gated = assemble_breakdown(0, 10, 10, 5, 5, 2, 3);
  CHECK(gated.reasoning_score == 0);
}

TEST_CASE("judge mode delegates semantics but recomputes the arithmetic") {
  const CausalDesign gt = iv_ground_truth();
  CausalDesign pred = gt;
  pred.control_variables = {"GOV"};

  SUBCASE("judge totals are ignored in favor of the local sum") {
    MockBackend backend = scripted({{"judge", R"({"breakdown": {
      "model_type_score": 0, "core_iv_score": 10, "group_score": 5,
      "control_var_score": 2, "dependent_var_score": 5,
      "reasoning_score": 2, "explanation_score": 3},
      "total_score": 999, "comments": "solid"})"}});
    const ScoreBreakdown b = grade(pred, gt, GradingMode::Judge, &backend);
    // model type is decided locally (families agree), judge's 0 is overridden
    CHECK(b.model_type_score == 10);
    CHECK(b.core_iv_score == 10);
    CHECK(b.group_score == 5);
    CHECK(b.total == 10 + 10 + 5 + 2 + 5 + 2 + 3);
    CHECK(b.normalized == doctest::Approx(b.total / 45.0));
    CHECK(b.comments == "solid");
  }
  SUBCASE("out-of-set judge values fall back to lexical with a note") {
    MockBackend backend = scripted({{"judge", R"({"breakdown": {
      "model_type_score": 10, "core_iv_score": 7, "group_score": 5,
      "control_var_score": 2, "dependent_var_score": 5,
      "reasoning_score": 2, "explanation_score": 3}})"},
      {"judge", R"({"breakdown": {
      "model_type_score": 10, "core_iv_score": 7, "group_score": 5,
      "control_var_score": 2, "dependent_var_score": 5,
      "reasoning_score": 2, "explanation_score": 3}})"}});
    const ScoreBreakdown b = grade(pred, gt, GradingMode::Judge, &backend);
    CHECK(b.comments.find("judge fallback to lexical") != std::string::npos);
    CHECK(b.total == b.model_type_score + b.core_iv_score + b.group_score +
                         b.control_var_score + b.dependent_var_score +
                         b.reasoning_score + b.explanation_score);
  }
  SUBCASE("judge mode without a backend refuses") {
    CHECK_THROWS_AS(grade(pred, gt, GradingMode::Judge, nullptr), Error);
  }
}

TEST_CASE("aggregate means, improvement, confusion, and slices") {
  auto graded = [](const std::string& mode, double normalized, ModelType gt_family,
                   std::optional<ModelType> pred_family, const std::string& domain) {
    GradedRun g;
    g.instance_id = "i";
    g.mode = mode;
    g.domain = domain;
    g.gt_family = gt_family;
    g.pred_family = pred_family;
    g.score = assemble_breakdown(10, 10, 10, 5, 5, 2, 3);
    g.score.normalized = normalized;  // means are computed over this
    return g;
  };

  SUBCASE("single record reproduces itself") {
    const GradedRun g = graded("strides", 1.0, ModelType::IV, ModelType::IV, "Macro");
    const ReportTable t = aggregate({g});
    CHECK(t.rows.at("strides").final_score == doctest::Approx(1.0));
    CHECK(t.rows.at("strides").n == 1);
    CHECK(t.confusion[1][1] == 1);
    CHECK(t.per_method_accuracy.at("IV") == doctest::Approx(1.0));
  }
  SUBCASE("two runs average and pair into an improvement") {
    std::vector<GradedRun> rs = {
        graded("strides", 0.6, ModelType::DiD, ModelType::DiD, "Macro"),
        graded("strides", 0.7, ModelType::DiD, ModelType::IV, "Health"),
        graded("direct", 0.5, ModelType::DiD, ModelType::DiD, "Macro"),
        graded("direct", 0.5, ModelType::DiD, ModelType::DiD, "Health"),
    };
    const ReportTable t = aggregate(rs);
    CHECK(t.rows.at("strides").final_score == doctest::Approx(0.65));
    CHECK(t.rows.at("direct").final_score == doctest::Approx(0.5));
    REQUIRE(t.improve_pct.has_value());
    CHECK(*t.improve_pct == doctest::Approx((0.65 - 0.5) / 0.5 * 100.0));
    // confusion rows sum to the ground-truth family counts (strides slice)
    int row_sum = 0;
    for (int p = 0; p < kModelTypeCount; ++p) row_sum += t.confusion[0][p];
    CHECK(row_sum == 2);
    CHECK(t.per_method_accuracy.at("DiD") == doctest::Approx(0.5));
    CHECK(t.per_domain_score.count("Macro") == 1);
  }
  SUBCASE("empty input throws") {
    CHECK_THROWS_WITH_AS(aggregate({}), doctest::Contains("EmptyInput"), Error);
  }
}

TEST_CASE("the published improvement pair reproduces at one decimal") {
  CHECK(format_improve(improve_pct(0.578, 0.665)) == "+15.1%");
  CHECK(format_improve(improve_pct(0.5, 0.45)) == "-10.0%");
}

TEST_CASE("report table exposes exactly the eight metric columns") {
  GradedRun g;
  g.mode = "strides";
  g.gt_family = ModelType::DiD;
  g.pred_family = ModelType::DiD;
  g.score = assemble_breakdown(10, 10, 10, 5, 5, 2, 3);
  const ReportTable t = aggregate({g});
  const std::string text = render_report_text(t);
  const std::string header = text.substr(0, text.find('\n'));
  for (const char* column : {"Final Score", "Model Type", "Core IV", "Group Def",
                             "Controls", "Dep Var", "Reasoning", "Explanation"})
    CHECK(header.find(column) != std::string::npos);

  const auto j = report_to_json(t);
  CHECK(j["configurations"]["strides"].size() == 9);  // 8 metrics + n
}

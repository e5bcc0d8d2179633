// Regenerates data/sample_instances.jsonl and data/transcripts/*.jsonl, then
// replays them through the pipeline to prove the bundle is self-consistent.
// Run from the repository root: ./build/tools/make_sample_data

#include <filesystem>
#include <fstream>
#include <iostream>

#include "strides/backend.hpp"
#include "strides/harness.hpp"
#include "strides/orchestrator.hpp"
#include "strides/schema.hpp"

using namespace strides;
namespace fs = std::filesystem;

namespace {

BenchInstance inst_001() {
  BenchInstance inst;
  inst.instance_id = "inst-001";
  inst.metadata.policy_name =
      "Innovative Human Capital Development and Government Science and "
      "Technology Support";
  inst.metadata.policy_type = "Science, Technology, and Innovation";
  inst.metadata.country_region =
      "China (30 provinces, excluding Hong Kong, Macao, Taiwan, and Tibet)";
  inst.metadata.observed_period = "2011-2022";
  inst.metadata.implementation_time =
      "Not applicable (continuous exposure observed over 2011-2022)";
  inst.metadata.aim =
      "To examine the impact of innovative human capital on regional supply "
      "chain resilience, and to analyze the moderating roles of government "
      "science and technology support, policy attention, and intellectual "
      "property protection.";
  inst.metadata.dataset_description =
      "Panel data for 30 Chinese provinces from 2011-2022, compiled from the "
      "China Statistical Yearbook, the China Science and Technology "
      "Statistical Yearbook, and the EPS database.";

  CausalDesign& gt = inst.ground_truth;
  gt.model_type = ModelLabel::of("Instrumental Variables (IV)TXT");
  gt.reasons =
      "Innovative human capital may be endogenous to supply chain resilience "
      "due to reverse causality and omitted variables; a two-stage least "
      "squares design with a lagged instrument mitigates these concerns while "
      "province and year fixed effects absorb unobserved heterogeneity.";
  gt.core_independent_variable = "Innovative Human Capital";
  gt.control_variables = {"GOV", "FIN", "URB", "GDP", "CON", "INDUS"};
  gt.instrumental_variable = "Lagged innovative human capital";
  gt.group = {"Provinces with high innovative human capital intensity "
              "(continuous exposure)",
              "Provinces with low innovative human capital intensity, "
              "conditional on covariates"};
  gt.model_significance =
      "Positive effect significant at the 1 percent level in the two-stage "
      "least squares specification; first-stage F statistic above the "
      "rule-of-thumb threshold of 10.";
  gt.dependent_variable = "Supply chain resilience";
  gt.explanation =
      "Innovative human capital enhances regional supply chain resilience "
      "through technological, managerial, and institutional innovation; the "
      "effect is amplified by government science and technology support and "
      "intellectual property protection.";
  return inst;
}

BenchInstance inst_002() {
  BenchInstance inst;
  inst.instance_id = "inst-002";
  inst.metadata.policy_name = "Low-Carbon City Pilot Program";
  inst.metadata.policy_type = "Environmental & Sustainable Development";
  inst.metadata.country_region = "China (prefecture-level cities)";
  inst.metadata.observed_period = "2008-2019";
  inst.metadata.implementation_time = "2013 (second pilot batch)";
  inst.metadata.aim =
      "To estimate the effect of low-carbon city pilot designation on urban "
      "carbon emission intensity.";
  inst.metadata.dataset_description =
      "City-year panel for 280 prefecture-level cities, 2008-2019, from city "
      "statistical yearbooks and emission inventories.";

  CausalDesign& gt = inst.ground_truth;
  gt.model_type = ModelLabel::of("Difference-in-Differences (DiD)TXT");
  gt.reasons =
      "The 2013 designation creates treated and untreated cities observed "
      "before and after the policy, supporting a two-way fixed effects "
      "comparison under parallel pre-trends.";
  gt.core_independent_variable =
      "Low-carbon pilot designation (treated city x post-2013 indicator)";
  gt.control_variables = {"GDP per capita", "Industrial structure",
                          "Population density", "Urbanization rate",
                          "Foreign direct investment"};
  gt.group = {"Cities designated as low-carbon pilots in 2013",
              "Never-designated cities with comparable pre-period trends"};
  gt.model_significance =
      "Negative and significant at the 5 percent level; event-study "
      "coefficients show no significant pre-trends.";
  gt.dependent_variable = "Urban carbon emission intensity";
  gt.explanation =
      "Pilot designation lowers carbon emission intensity through industrial "
      "restructuring and energy-efficiency investment.";
  return inst;
}

BenchInstance inst_003() {
  BenchInstance inst;
  inst.instance_id = "inst-003";
  inst.metadata.policy_name = "Need-Based College Scholarship Eligibility";
  inst.metadata.policy_type = "Education & Training";
  inst.metadata.country_region = "Chile";
  inst.metadata.observed_period = "2012-2018";
  inst.metadata.implementation_time =
      "Annual award cycles; eligibility set by an admission test score cutoff";
  inst.metadata.aim =
      "To measure the effect of scholarship eligibility on college enrollment "
      "among applicants near the qualifying score cutoff.";
  inst.metadata.dataset_description =
      "Administrative records of scholarship applicants with admission test "
      "scores, family income, and enrollment outcomes.";

  CausalDesign& gt = inst.ground_truth;
  gt.model_type = ModelLabel::of("Regression Discontinuity (RD)TXT");
  gt.reasons =
      "Eligibility changes discontinuously at the published score cutoff "
      "while applicant characteristics evolve smoothly, so local comparisons "
      "identify the effect.";
  gt.core_independent_variable =
      "Scholarship eligibility at the admission test score cutoff";
  gt.control_variables = {"Household income", "Parental education",
                          "School type"};
  gt.group = {"Applicants scoring just above the eligibility cutoff",
              "Applicants scoring just below the eligibility cutoff"};
  gt.model_significance =
      "Positive jump at the cutoff significant at the 1 percent level within "
      "the preferred bandwidth.";
  gt.dependent_variable = "College enrollment rate";
  gt.explanation =
      "Local randomization near the cutoff identifies the enrollment effect "
      "of scholarship eligibility; the award relaxes liquidity constraints.";
  return inst;
}

// --- transcript text -------------------------------------------------------

void add(Transcript& t, const std::string& role, const std::string& text) {
  // Rough but stable token figures so telemetry sums are meaningful.
  t.add(role, text, 700 + static_cast<long>(role.size()) * 3,
        static_cast<long>(text.size() / 4));
}

Transcript strides_001() {
  Transcript t;
  add(t, "theory", R"TXT(```json
{"theoretical_framework": "Endogenous Growth Theory",
 "hypotheses": [{"id": "H1",
   "statement": "Higher innovative human capital increases regional supply chain resilience.",
   "mechanism": "Skilled R&D personnel accelerate technology adoption, process redesign, and risk management capacity.",
   "expected_direction": "Positive"}]}
```)TXT");
  add(t, "methodology", R"TXT({"model_selection": {"model_name": "Instrumental Variables (IV)",
   "reason": "Innovative human capital is endogenous to resilience through reverse causality; a lagged instrument restores identification."},
 "econometric_model": {
   "equation_latex": "SCR_{it} = b0 + b1 \\widehat{IHC}_{it} + g X_{it} + u_i + l_t + e_{it}",
   "variables_definition": {
     "Y": "Supply chain resilience",
     "Treatment": "Innovative Human Capital",
     "Controls": ["GOV", "FIN", "URB", "GDP", "CON", "INDUS"],
     "Instrumental_Variable": "Lagged innovative human capital"},
   "group_definition": {
     "Treatment_Group": "Provinces with high innovative human capital intensity",
     "Control_Group": "Provinces with low innovative human capital intensity"}}})TXT");
  add(t, "retrieval", R"TXT({"variable_mapping": {
   "Supply chain resilience": {"source": "Composite index from provincial statistical yearbooks"},
   "Innovative Human Capital": {"source": "China Science and Technology Statistical Yearbook"},
   "Lagged innovative human capital": {"source": "One-period lag of the same series"},
   "GOV": {"source": "China Statistical Yearbook"},
   "FIN": {"source": "China Statistical Yearbook"},
   "URB": {"source": "China Statistical Yearbook"},
   "GDP": {"source": "China Statistical Yearbook"},
   "CON": {"source": "China Statistical Yearbook"},
   "INDUS": {"source": "China Statistical Yearbook"}}})TXT");
  add(t, "simulation", R"TXT({"effect_magnitude": 1.5, "effect_direction": "Positive",
   "noise_sd": 1.0, "n_rows": 400, "instrument_strength": 0.5})TXT");
  add(t, "analysis", R"TXT({"tool": "IV", "column_map": {
   "dependent": "outcome", "treatment": "treatment", "instrument": "instrument"},
   "options": {}})TXT");
  add(t, "critic", R"TXT({"pass": true,
   "critique": "The first-stage F statistic is far above 10 and the 2SLS estimate is positive and significant, consistent with H1.",
   "suggestion": "Report the first-stage F statistic alongside the second-stage estimate."})TXT");
  add(t, "summary", R"TXT({"Model type": "Instrumental Variables (IV)",
   "Reasons for choosing this model": "Innovative human capital is endogenous to resilience through reverse causality and omitted variables; a lagged instrument in a two-stage least squares design restores identification.",
   "Core independent variable": "Innovative Human Capital",
   "Control variables": ["GOV", "FIN", "URB", "GDP", "CON", "INDUS"],
   "Instrumental variable": "Lagged innovative human capital",
   "Group": "Treatment: Provinces with high innovative human capital intensity; Control: Provinces with low innovative human capital intensity",
   "Model Significance": "Positive and significant at the 1 percent level with a strong first stage (F well above 10).",
   "Dependent variable": "Supply chain resilience",
   "Explanation": "Innovative human capital strengthens supply chain resilience through technological, managerial, and institutional innovation; government science and technology support amplifies the effect."})TXT");
  return t;
}

Transcript strides_002() {
  Transcript t;
  add(t, "theory", R"TXT({"theoretical_framework": "Institutional Theory",
 "hypotheses": [{"id": "H1",
   "statement": "Low-carbon pilot designation reduces urban carbon emission intensity.",
   "mechanism": "Designation tightens local regulation and redirects investment toward energy efficiency.",
   "expected_direction": "Negative"}]})TXT");
  add(t, "methodology", R"TXT({"model_selection": {"model_name": "Difference-in-Differences",
   "reason": "The 2013 batch creates designated and never-designated cities observed before and after the policy."},
 "econometric_model": {
   "equation_latex": "CEI_{it} = a_i + g_t + tau (Treat_i x Post_t) + b X_{it} + e_{it}",
   "variables_definition": {
     "Y": "Urban carbon emission intensity",
     "Treatment": "Low-carbon pilot designation",
     "Controls": ["GDP per capita", "Industrial structure", "Population density", "Urbanization rate", "Foreign direct investment"],
     "Instrumental_Variable": null},
   "group_definition": {
     "Treatment_Group": "Cities designated as low-carbon pilots in 2013",
     "Control_Group": "Never-designated cities"}}})TXT");
  add(t, "retrieval", R"TXT({"variable_mapping": {
   "Urban carbon emission intensity": {"source": "City emission inventories"},
   "Low-carbon pilot designation": {"source": "Policy circulars"},
   "GDP per capita": {"source": "City statistical yearbooks"},
   "Industrial structure": {"source": "City statistical yearbooks"},
   "Population density": {"source": "Census"},
   "Urbanization rate": {"source": "Census"},
   "Foreign direct investment": {"source": "City statistical yearbooks"}}})TXT");
  add(t, "simulation", R"TXT({"effect_magnitude": 2.0, "effect_direction": "Negative",
   "noise_sd": 0.1, "n_units": 30, "n_periods": 10, "pre_trend_gap": 1.0})TXT");
  add(t, "analysis", R"TXT({"tool": "DiD", "column_map": {
   "dependent": "outcome", "treatment": "treatment_intensity",
   "time": "post_policy", "unit": "unit", "period": "year"}, "options": {}})TXT");
  add(t, "critic", R"TXT({"pass": false,
   "critique": "The parallel trends diagnostic failed on the mock panel: treated cities were already diverging before designation, so the two-way fixed effects contrast is biased.",
   "suggestion": "Re-specify the design so the comparison group tracks the treated cities in the pre-period, then regenerate the mock data.",
   "findings": ["Parallel Trends Test Failed"]})TXT");
  add(t, "methodology", R"TXT({"model_selection": {"model_name": "Difference-in-Differences",
   "reason": "Retained DiD but restricted the donor set to never-designated cities whose pre-period emission paths track the pilots, restoring parallel trends."},
 "econometric_model": {
   "equation_latex": "CEI_{it} = a_i + g_t + tau (Treat_i x Post_t) + b X_{it} + e_{it}",
   "variables_definition": {
     "Y": "Urban carbon emission intensity",
     "Treatment": "Low-carbon pilot designation",
     "Controls": ["GDP per capita", "Industrial structure", "Population density", "Urbanization rate", "Foreign direct investment"],
     "Instrumental_Variable": null},
   "group_definition": {
     "Treatment_Group": "Cities designated as low-carbon pilots in 2013",
     "Control_Group": "Matched never-designated cities with parallel pre-period emission paths"}}})TXT");
  add(t, "retrieval", R"TXT({"variable_mapping": {
   "Urban carbon emission intensity": {"source": "City emission inventories"},
   "Low-carbon pilot designation": {"source": "Policy circulars"},
   "GDP per capita": {"source": "City statistical yearbooks"},
   "Industrial structure": {"source": "City statistical yearbooks"},
   "Population density": {"source": "Census"},
   "Urbanization rate": {"source": "Census"},
   "Foreign direct investment": {"source": "City statistical yearbooks"}}})TXT");
  add(t, "simulation", R"TXT({"effect_magnitude": 2.0, "effect_direction": "Negative",
   "noise_sd": 1.0, "n_units": 30, "n_periods": 10, "pre_trend_gap": 0.0})TXT");
  add(t, "analysis", R"TXT({"tool": "DiD", "column_map": {
   "dependent": "outcome", "treatment": "treatment_intensity",
   "time": "post_policy", "unit": "unit", "period": "year"}, "options": {}})TXT");
  add(t, "critic", R"TXT({"pass": true,
   "critique": "With the matched comparison group the pre-trend test passes and the estimate is negative and significant, matching H1.",
   "suggestion": "Keep the event-study figure as supporting evidence."})TXT");
  add(t, "summary", R"TXT({"Model type": "Difference-in-Differences (DiD)",
   "Reasons for choosing this model": "Designated and never-designated cities are observed before and after 2013; a matched comparison group restores parallel pre-trends.",
   "Core independent variable": "Low-carbon pilot designation (treated city x post-2013 indicator)",
   "Control variables": ["GDP per capita", "Industrial structure", "Population density", "Urbanization rate", "Foreign direct investment"],
   "Instrumental variable": null,
   "Group": "Treatment: Cities designated as low-carbon pilots in 2013; Control: Matched never-designated cities with parallel pre-period emission paths",
   "Model Significance": "Negative and significant at the 5 percent level after the refinement; the pre-trend diagnostic passes on the verified specification.",
   "Dependent variable": "Urban carbon emission intensity",
   "Explanation": "Pilot designation lowers carbon emission intensity through industrial restructuring and energy-efficiency investment."})TXT");
  return t;
}

Transcript strides_003() {
  Transcript t;
  add(t, "theory", R"TXT({"theoretical_framework": "Human Capital Theory",
 "hypotheses": [{"id": "H1",
   "statement": "Scholarship eligibility raises college enrollment among marginal applicants.",
   "mechanism": "The award relaxes liquidity constraints at the enrollment decision.",
   "expected_direction": "Positive"}]})TXT");
  add(t, "methodology", R"TXT({"model_selection": {"model_name": "Regression Discontinuity",
   "reason": "Eligibility flips discontinuously at the published score cutoff while applicant characteristics are smooth."},
 "econometric_model": {
   "equation_latex": "Y_i = a + tau 1[S_i >= c] + f(S_i - c) + e_i",
   "variables_definition": {
     "Y": "College enrollment",
     "Treatment": "Scholarship eligibility at the score cutoff",
     "Controls": ["Household income", "Parental education", "School type"],
     "Instrumental_Variable": null},
   "group_definition": {
     "Treatment_Group": "Applicants just above the cutoff",
     "Control_Group": "Applicants just below the cutoff"}}})TXT");
  add(t, "retrieval", R"TXT({"variable_mapping": {
   "College enrollment": {"source": "Administrative enrollment records"},
   "Scholarship eligibility at the score cutoff": {"source": "Scholarship agency records"},
   "Household income": {"source": "Application forms"},
   "Parental education": {"source": "Application forms"},
   "School type": {"source": "School registry"}}})TXT");
  add(t, "simulation", R"TXT({"effect_magnitude": 3.0, "effect_direction": "Positive",
   "noise_sd": 0.5, "n_rows": 400, "cutoff": 0.0})TXT");
  add(t, "analysis", R"TXT({"tool": "RD", "column_map": {
   "dependent": "outcome", "running": "running"}, "options": {"cutoff": 0.0}})TXT");
  add(t, "critic", R"TXT({"pass": true,
   "critique": "The local linear contrast shows a clear positive jump at the cutoff with adequate support on both sides.",
   "suggestion": "Report a bandwidth sensitivity curve in the appendix."})TXT");
  add(t, "summary", R"TXT({"Model type": "Regression Discontinuity (RD)",
   "Reasons for choosing this model": "Eligibility changes discontinuously at the score cutoff while applicant characteristics evolve smoothly.",
   "Core independent variable": "Scholarship eligibility at the admission test score cutoff",
   "Control variables": ["Household income", "Parental education", "School type"],
   "Instrumental variable": null,
   "Group": "Treatment: Applicants scoring just above the eligibility cutoff; Control: Applicants scoring just below the eligibility cutoff",
   "Model Significance": "Positive jump at the cutoff significant at the 1 percent level within the default bandwidth.",
   "Dependent variable": "College enrollment rate",
   "Explanation": "Local randomization near the cutoff identifies the enrollment effect; the award relaxes liquidity constraints."})TXT");
  return t;
}

Transcript direct_001() {
  Transcript t;
  add(t, "direct", R"TXT({"Model type": "Difference-in-Differences (DiD)",
   "Reasons for choosing this model": "Provinces can be compared before and after increases in science and technology support.",
   "Core independent variable": "Government science and technology expenditure",
   "Control variables": ["GDP", "URB"],
   "Instrumental variable": null,
   "Group": "Treatment: Provinces with above-median support growth; Control: Provinces with below-median support growth",
   "Model Significance": "Expected positive and significant.",
   "Dependent variable": "Supply chain resilience",
   "Explanation": "More support should strengthen resilience through innovation funding."})TXT");
  return t;
}

Transcript direct_002() {
  Transcript t;
  add(t, "direct", R"TXT({"Model type": "Difference-in-Differences (DiD)",
   "Reasons for choosing this model": "Pilot cities and non-pilot cities are observed before and after 2013.",
   "Core independent variable": "Low-carbon pilot designation",
   "Control variables": ["GDP per capita"],
   "Instrumental variable": null,
   "Group": "Treatment: Pilot cities; Control: Other cities",
   "Model Significance": "Expected negative effect on emissions.",
   "Dependent variable": "Carbon emission intensity",
   "Explanation": "Designation pressures local governments to cut emissions."})TXT");
  return t;
}

Transcript direct_003() {
  Transcript t;
  add(t, "direct", R"TXT({"Model type": "Instrumental Variables (IV)",
   "Reasons for choosing this model": "Scholarship receipt is endogenous to motivation, so distance to the nearest college can instrument for take-up.",
   "Core independent variable": "Scholarship receipt",
   "Control variables": ["Household income", "School type"],
   "Instrumental variable": "Distance to the nearest college",
   "Group": "Treatment: Scholarship recipients; Control: Non-recipients",
   "Model Significance": "Expected positive and significant.",
   "Dependent variable": "College enrollment",
   "Explanation": "Scholarships lower the effective price of college attendance."})TXT");
  return t;
}

}  // namespace

int main() {
  const fs::path root = fs::current_path();
  const fs::path data_dir = root / "data";
  const fs::path transcripts = data_dir / "transcripts";
  fs::create_directories(transcripts);

  {
    std::ofstream out(data_dir / "sample_instances.jsonl", std::ios::binary);
    out << serialize_instance(inst_001()) << "\n";
    out << serialize_instance(inst_002()) << "\n";
    out << serialize_instance(inst_003()) << "\n";
  }
  strides_001().save((transcripts / "inst-001.strides.jsonl").string());
  strides_002().save((transcripts / "inst-002.strides.jsonl").string());
  strides_003().save((transcripts / "inst-003.strides.jsonl").string());
  direct_001().save((transcripts / "inst-001.direct.jsonl").string());
  direct_002().save((transcripts / "inst-002.direct.jsonl").string());
  direct_003().save((transcripts / "inst-003.direct.jsonl").string());
  std::cout << "wrote sample corpus and transcripts under " << data_dir << "\n";

  // Replay the bundle end-to-end and assert the intended shapes.
  HarnessConfig cfg;
  cfg.instances_path = (data_dir / "sample_instances.jsonl").string();
  cfg.backend = HarnessConfig::BackendKind::Replay;
  cfg.transcript_path = transcripts.string();
  cfg.mode = HarnessConfig::Mode::Both;
  cfg.out_dir = (fs::temp_directory_path() / "strides_sample_check").string();
  const int rc = run_harness(cfg);
  if (rc != 0) {
    std::cerr << "sample bundle replay FAILED with exit code " << rc << "\n";
    return 1;
  }

  std::ifstream runs(fs::path(cfg.out_dir) / "runs.jsonl");
  std::string line;
  int checked = 0;
  while (std::getline(runs, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["failed"].get<bool>()) {
      std::cerr << "unexpected failed run: " << line << "\n";
      return 1;
    }
    if (j["mode"] == "strides") {
      const int expected_iters = j["instance_id"] == "inst-002" ? 1 : 0;
      if (j["iterations_used"].get<int>() != expected_iters) {
        std::cerr << "unexpected iterations for " << j["instance_id"] << ": "
                  << j["iterations_used"] << "\n";
        return 1;
      }
      if (!j["verified"].get<bool>()) {
        std::cerr << "strides run not verified: " << j["instance_id"] << "\n";
        return 1;
      }
    }
    ++checked;
  }
  if (checked != 6) {
    std::cerr << "expected 6 run records, saw " << checked << "\n";
    return 1;
  }
  std::cout << "sample bundle replay OK (" << checked << " runs)\n";
  return 0;
}

#include "strides/prompts.hpp"

#include <cctype>

namespace strides::prompts {

const std::string_view kDirectReasoning = R"PROMPT(You are a distinguished social science researcher specializing in causal inference.
Your task is to design a rigorous econometric framework to evaluate the policy described below.

--- Policy Background ---
Policy Name: {policy_name}
Policy Type: {policy_type}
Region: {country_region}
Time Period: {observed_period}
Implementation: {implementation_time}
Aim: {aim}
Dataset Description: {dataset}
-------------------------

Based on the above information, generate a Causal Inference Design.

**Requirements:**
1. **Model Selection**: Choose the single most appropriate method from: [Difference-in-Differences (DiD), Propensity Score Matching (PSM), Instrumental Variables (IV), Synthetic Control Method (SCM), Regression Discontinuity (RD)].
2. **Variables**:
   - **Core Independent Variable**: The specific variable measuring the policy intervention.
   - **Dependent Variable**: The outcome variable(s) of interest.
   - **Control Variables**: A comprehensive list of confounders (e.g., demographic, economic, regional factors).
   - **Instrumental Variable**: If using IV, specify the instrument. Otherwise, return null.
3. **Groups**: Clearly define the **Treatment Group** (who is affected?) and **Control Group** (who is the counterfactual?).
4. **Significance & Explanation**: Predict the expected direction/significance of the effect and explain the mechanism.

**Output JSON (Strictly follow this schema):**
{
  "Model type": "...",
  "Reasons for choosing this model": "...",
  "Core independent variable": "...",
  "Control variables": "...",
  "Instrumental variable": "..." or null,
  "Group": "Treatment: ...; Control: ...",
  "Model Significance": "...",
  "Dependent variable": "...",
  "Explanation": "..."
}
)PROMPT";

const std::string_view kTheoryArchitect = R"PROMPT(You are a distinguished Social Science Theorist.
Your goal is to build a theoretical framework for the following policy.

--- Policy Meta Info ---
Policy Name: {policy_name},
Type: {policy_type},
Region: {region},
Aim: {aim}
------------------------

Task:
1. Propose 1-2 core Hypotheses (H1, H2) based on economic/sociological theories (e.g., Supply-Demand, Institutional Theory).
2. Explain the "Mechanism" (Channel): How does X lead to Y?
3. Define the expected direction (Positive/Negative).

Output JSON (ENGLISH ONLY):
{
  "theoretical_framework": "Theory Name",
  "hypotheses": [
    {
      "id": "H1",
      "statement": "...",
      "mechanism": "...",
      "expected_direction": "Positive/Negative"
    }
  ]
}
)PROMPT";

const std::string_view kMethodology = R"PROMPT(You are a Senior Econometrician.
Select the most appropriate causal inference model for the study.

--- Context ---
Policy: {policy_name},
Time: {impl_time},
Region: {region},
Theory: {hypotheses}
----------------

Available Models:
Difference-in-Differences (DiD), Propensity Score Matching (PSM), Instrumental Variables (IV), Synthetic Control Method (SCM), Regression Discontinuity (RD).

Task:
1. Select ONE model.
2. Formalize the regression equation (LaTeX).
3. Define variables (Dependent, Independent, Controls, IV).
4. Define Groups (Treatment/Control).

Output JSON (ENGLISH ONLY):
{
  "model_selection": {
    "model_name": "DiD/PSM/IV/etc",
    "reason": "Explain why this model fits the data structure and policy timing."
  },
  "econometric_model": {
    "equation_latex": "Y = ...",
    "variables_definition": {
      "Y": "Outcome Name",
      "Treatment": "Core Independent Variable Name (Policy Intervention)",
      "Controls": ["Control1", "Control2"],
      "Instrumental_Variable": "Name or null"
    },
    "group_definition": {
      "Treatment_Group": "Who is treated?",
      "Control_Group": "Who is the counterfactual?"
    }
  }
}
)PROMPT";

const std::string_view kDataRetrieval = R"PROMPT(You are a Data Engineer.
Based on results, map variables to data sources.

Results: {results}

Output JSON (ENGLISH ONLY):
{
  "variable_mapping": {
    "Variable_Name": { "source": "...", "proxy_if_needed": "..." }
  }
}
)PROMPT";

const std::string_view kSimulationParams = R"PROMPT(You are a Simulation Scientist.
Propose parameters for a Mock Dataset that instantiates the research design below. The dataset is produced by a built-in generator for the chosen model family; you choose the knobs.

Design: {design}
Hypotheses: {hypotheses}
{error_context}

Requirements:
1. **CRITICAL: Keep dataset size SMALL for testing efficiency.** Choose sizes such that total rows are roughly 200-500. Do NOT request thousands of rows.
2. For DiD the generator emits columns named 'treatment_intensity' and 'post_policy'; pick units and periods so units x periods stays in the 200-500 band.
3. Inject a Treatment Effect consistent with the Hypotheses (Positive/Negative).
4. Pick a noise level that leaves the injected effect detectable.

Output JSON (ENGLISH ONLY):
{
  "effect_magnitude": 2.0,
  "effect_direction": "Positive or Negative",
  "noise_sd": 1.0,
  "n_units": 30,
  "n_periods": 10,
  "n_rows": 400,
  "pre_trend_gap": 0.0,
  "instrument_strength": 0.5,
  "n_donors": 20,
  "n_pre": 8,
  "n_post": 4,
  "n_covariates": 3
}
Only the fields relevant to the chosen model family are used.
)PROMPT";

const std::string_view kAnalysisPlan = R"PROMPT(You are a Senior Statistician.
Plan one estimator tool call for the design below. The tools are built in; you bind dataset columns to the tool's semantic roles.

Methodology: {methodology}
Dataset columns: {columns}
{error_context}

Task:
1. Pick the tool matching the chosen model: DiD, IV, RD, SCM, or PSM.
2. Fill column_map with the EXACT column names listed above.
   - DiD roles: dependent, treatment, time (0/1 post indicator), unit; add "period" with the calendar column so the parallel-trends check can run.
   - IV roles: dependent, treatment, instrument.
   - RD roles: dependent, running; set options.cutoff (and optionally options.bandwidth).
   - SCM roles: dependent, unit, time, treated_unit (0/1 indicator column).
   - PSM roles: dependent, treatment, covariates (comma-separated column list); optionally options.caliper.
3. Do not invent columns that are not in the list.

Output JSON (ENGLISH ONLY):
{
  "tool": "DiD",
  "column_map": { "dependent": "...", "treatment": "..." },
  "options": { }
}
)PROMPT";

const std::string_view kCritic = R"PROMPT(You are an Adversarial Critic in a Causal Inference Pipeline.
Your function is to serve as an "Externalized Falsification Loop".

We have observed that LLMs often fail to interpret statistical feedback correctly (e.g., ignoring a failed parallel trend test).
Your goal is to reduce the "semantic-logic discordance" between the abstract Research Design and the empirical Reality (Code Execution Results).

--- Context ---
1. Research Design (Methodology):
{methodology}

2. Empirical Evidence (Code Execution Logs):
{code_results}

--- Falsification Task ---
Systematically map failed diagnostics to violated identification assumptions.

Checklist:
1. **Execution Failure**: Did the code run successfully? If not, is it a syntax error or a data issue?
2. **Assumption Violation**: If the code ran, look for diagnostic failures (e.g., "p-value > 0.05" for key estimates, "Parallel Trends Test Failed", "Weak Instruments").
3. **Logical Consistency**: Does the code output contradict the chosen model? (e.g., Running DiD code but the design called for RDD).

--- Output ---
Return a JSON object.
- If CRITICAL failures (e.g., code error, assumption violation) are found, set "pass": false.
- If the results are robust or only minor issues exist, set "pass": true.

--- Output JSON (ENGLISH ONLY) ---:
{
  "pass": true,
  "critique": "Detailed analysis of the discordance...",
  "suggestion": "Specific instructions for the Analyst to fix the interpretation or acknowledging the null result.",
  "findings": []
}
The optional "findings" array may only name: "Parallel Trends Test Failed", "Weak Instruments", "Multicollinearity", "Non-Convergence", "Sign Contradiction", "Thin Support".
)PROMPT";

const std::string_view kSummary = R"PROMPT(You are a Policy Analyst.
Based on the analysis results AND the Critic's review (if available), compile the final output. If there are incomplete fields, please make appropriate additions.

Meta Info: {meta}
Methodology: {methodology}
Results: {results}

--- CRITIC'S REVIEW (IMPORTANT) ---
The Critic has performed an adversarial review of the results:
Pass: {critic_pass}
Critique: {critic_critique}
Suggestion: {critic_suggestion}

INSTRUCTIONS:
1. If the Critic flagged specific failures (e.g., "Parallel Trends Failed"), you MUST acknowledge this in the "Explanation" or "Model Significance" section.
2. Use the Critic's suggestion to refine your interpretation.
3. Synthesize the final report.

Output JSON (ENGLISH ONLY, Strictly follow this schema):
{
  "Model type": "...",
  "Reasons for choosing this model": "...",
  "Core independent variable": "...",
  "Control variables": "...",
  "Instrumental variable": "..." or null,
  "Group": "Treatment: ...; Control: ...",
  "Model Significance": "...",
  "Dependent variable": "...",
  "Explanation": "..."
}
)PROMPT";

const std::string_view kGrader = R"PROMPT(You are an expert grader for Causal Inference exams.
Compare the Student's Answer with the Reference Answer (Ground Truth).

--- Reference Answer (Ground Truth) ---
{reference}

--- Student Answer ---
{prediction}

--- Scoring Rules (Strict) ---
1. **Model Type (Critical)**:
   - Exact match or clearly equivalent (e.g., "DiD" == "Difference-in-Differences") -> 10 points.
   - Wrong -> 0 points.

2. **Core Independent Variable (Critical)**:
   - Semantically consistent with reference -> 10 points.
   - Partially correct (captures main idea but vague) -> 5 points.
   - Wrong -> 0 points.

3. **Group Definition (Critical)**:
   - Treatment/Control groups clearly and correctly defined -> 10 points.
   - Partially wrong or vague -> 5 points.
   - Wrong -> 0 points.

4. **Control Variables**:
   - Assess semantic recall.
   - Good coverage (>50% match) -> 5 points.
   - Weak coverage (<50%) -> 2 points.
   - None/Wrong -> 0 points.

5. **Dependent Variable**:
   - Semantically consistent -> 5 points.
   - Wrong -> 0 points.

6. **Reasons**:
   - Only if Model Type is correct: Valid reasoning -> 2 points. Else 0.

7. **Significance & Explanation**:
   - Consistent direction/logic -> 3 points.
   - Wrong -> 0.

Total possible score: 45 points.
Output JSON format:
{
  "breakdown": {
    "model_type_score": 0,
    "core_iv_score": 0,
    "group_score": 0,
    "control_var_score": 0,
    "dependent_var_score": 0,
    "reasoning_score": 0,
    "explanation_score": 0
  },
  "total_score": 0,
  "comments": "Brief critique..."
}
)PROMPT";

const std::string_view kRepairInstruction = R"PROMPT(
Your previous reply could not be used: {error}
Respond again with ONLY a single valid JSON object that strictly follows the requested schema. No prose, no code fences.)PROMPT";

std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c == '{') {
      // A placeholder is {identifier}; anything else (JSON braces, spaces,
      // quotes) passes through untouched.
      std::size_t j = i + 1;
      while (j < tmpl.size() &&
             (std::isalnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_'))
        ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string key(tmpl.substr(i + 1, j - i - 1));
        auto it = vars.find(key);
        if (it != vars.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace strides::prompts

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strides/simulate.hpp"
#include "strides/toolcall.hpp"

namespace strides {

enum class DiagCode {
  ParallelTrendsFail,
  WeakInstrument,
  Multicollinearity,
  NonConvergence,
  SignContradiction,
  ThinSupport,
};

// Stable code strings used in serialized findings and transcript goldens.
const char* to_string(DiagCode code);
std::optional<DiagCode> diag_code_from_string(const std::string& s);

struct DiagnosticResult {
  DiagCode code;
  double statistic = 0.0;
  double threshold = 0.0;
  bool triggered = false;
};

struct RegressionFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  long residual_dof = 0;
  double r_squared = 0.0;
  double condition_number = 0.0;
  bool converged = true;
};

// Classical-SE least squares through an SVD. Degenerate (zero-residual) fits
// report SE 0 with t/p pinned to the exact conventions: coefficient 0 gives
// p = 1, nonzero gives p = 0.
// Throws Error("NonFinite"), Error("InsufficientRows"),
// Error("RankDeficient") when the condition number exceeds 1e12.
RegressionFit ols(const Eigen::MatrixXd& design_matrix,
                  const Eigen::VectorXd& response);

struct EstimateResult {
  ModelType tool = ModelType::DiD;
  double effect = 0.0;
  std::optional<double> standard_error;  // absent on noiseless-degenerate fits
  std::optional<double> t_stat;
  std::optional<double> p_value;
  long n_used = 0;
  std::vector<DiagnosticResult> diagnostics;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();

  const DiagnosticResult* diagnostic(DiagCode code) const;
};

struct ExecutionFailure {
  std::string kind;  // "mapping" | "statistical"
  std::string code;
  std::string detail;
};

// execute_tool never throws; failures are data for the critic.
struct ExecutionResult {
  std::optional<EstimateResult> estimate;
  std::optional<ExecutionFailure> failure;

  bool ok() const { return estimate.has_value(); }
};

// Two-way fixed effects via unit/period indicator blocks; the effect is the
// treat x post interaction coefficient. Attaches the pre-trends diagnostic
// when a "period" role is mapped.
EstimateResult run_did(const MockDataset& data, const ToolCall& call);

// Pre-period interaction-slope test: statistic is the p-value of the
// time x group term, triggered below 0.05.
// Throws Error("InsufficientPrePeriods") with fewer than 2 pre-periods.
DiagnosticResult test_parallel_trends(const MockDataset& data, const ToolCall& call);

// Exactly-identified 2SLS; first-stage F attached as the weak-instrument
// diagnostic with the rule-of-thumb threshold of 10.
EstimateResult run_iv(const MockDataset& data, const ToolCall& call);

// Sharp RD: local linear fit on each side of the cutoff within the bandwidth;
// effect is the intercept gap at the cutoff.
EstimateResult run_rd(const MockDataset& data, const ToolCall& call);

// Donor weights minimize the pre-period gap subject to w >= 0, sum(w) = 1;
// effect is the mean post-period gap treated - synthetic.
EstimateResult run_scm(const MockDataset& data, const ToolCall& call);

// Logistic propensity + 1-NN caliper matching on the log-odds scale; ATT over
// matched pairs, with VIF/convergence diagnostics and an SMD balance table in
// the detail payload.
EstimateResult run_psm(const MockDataset& data, const ToolCall& call);

ExecutionResult execute_tool(const ToolCall& call, const MockDataset& data);

// Projected-gradient least squares on the probability simplex. The recorded
// objective path is non-increasing; `converged` is false after max_iter
// iterations without the step norm dropping below tol.
struct SimplexLsqResult {
  Eigen::VectorXd weights;
  std::vector<double> objective_path;
  int iterations = 0;
  bool converged = false;
};
SimplexLsqResult simplex_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             int max_iter = 10000, double tol = 1e-8);

nlohmann::ordered_json diagnostic_to_json(const DiagnosticResult& d);
nlohmann::ordered_json estimate_to_json(const EstimateResult& e);
nlohmann::ordered_json execution_to_json(const ExecutionResult& r);

}  // namespace strides

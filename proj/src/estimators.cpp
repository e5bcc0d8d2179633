#include "strides/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

namespace strides {

namespace {

constexpr double kRankDeficientCond = 1e12;
constexpr double kCondDiagThreshold = 1e8;
constexpr double kDegenerateVar = 1e-24;
constexpr double kWeakInstrumentF = 10.0;
constexpr double kVifThreshold = 10.0;
constexpr int kThinSupportMin = 20;

double two_sided_p(double t, long dof) {
  if (dof < 1) return 1.0;
  boost::math::students_t dist(static_cast<double>(dof));
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

const std::vector<double>& numeric_column(const MockDataset& data,
                                          const std::string& name,
                                          const std::string& role) {
  const Column* col = data.find(name);
  if (!col) throw Error("ColumnMiss", name);
  if (col->storage != Column::Storage::Numeric)
    throw Error("BadColumnType", "role '" + role + "' needs a numeric column, '" +
                                     name + "' is categorical");
  return col->nums;
}

// Unit labels work from either storage.
std::vector<std::string> label_column(const MockDataset& data,
                                      const std::string& name) {
  const Column* col = data.find(name);
  if (!col) throw Error("ColumnMiss", name);
  if (col->storage == Column::Storage::Categorical) return col->cats;
  std::vector<std::string> out;
  out.reserve(col->nums.size());
  for (const double v : col->nums) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out.emplace_back(buf);
  }
  return out;
}

const std::string& mapped(const ToolCall& call, const std::string& role) {
  const std::string* name = call.column(role);
  if (!name) throw Error("RoleMissing", role);
  return *name;
}

void require_binary(const std::vector<double>& v, const std::string& role) {
  for (const double x : v)
    if (x != 0.0 && x != 1.0)
      throw Error("BadColumnType", "role '" + role + "' must be a 0/1 column");
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

void attach_estimate_stats(EstimateResult& est, double effect, double se, long dof) {
  est.effect = effect;
  if (se > 0.0 && std::isfinite(se)) {
    est.standard_error = se;
    est.t_stat = effect / se;
    est.p_value = two_sided_p(*est.t_stat, dof);
  }
}

DiagnosticResult condition_diag(double cond) {
  return {DiagCode::Multicollinearity, cond, kCondDiagThreshold,
          cond > kCondDiagThreshold};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

// Distinct values in first-appearance order.
template <typename T>
std::vector<T> distinct(const std::vector<T>& v) {
  std::vector<T> out;
  std::set<T> seen;
  for (const auto& x : v)
    if (seen.insert(x).second) out.push_back(x);
  return out;
}

}  // namespace

const char* to_string(DiagCode code) {
  switch (code) {
    case DiagCode::ParallelTrendsFail: return "Parallel Trends Test Failed";
    case DiagCode::WeakInstrument: return "Weak Instruments";
    case DiagCode::Multicollinearity: return "Multicollinearity";
    case DiagCode::NonConvergence: return "Non-Convergence";
    case DiagCode::SignContradiction: return "Sign Contradiction";
    case DiagCode::ThinSupport: return "Thin Support";
  }
  return "?";
}

std::optional<DiagCode> diag_code_from_string(const std::string& s) {
  static const std::map<std::string, DiagCode> table = {
      {"parallel trends test failed", DiagCode::ParallelTrendsFail},
      {"parallel trends failed", DiagCode::ParallelTrendsFail},
      {"weak instruments", DiagCode::WeakInstrument},
      {"weak instrument", DiagCode::WeakInstrument},
      {"multicollinearity", DiagCode::Multicollinearity},
      {"non-convergence", DiagCode::NonConvergence},
      {"non convergence", DiagCode::NonConvergence},
      {"sign contradiction", DiagCode::SignContradiction},
      {"thin support", DiagCode::ThinSupport},
  };
  auto it = table.find(normalize_term(s));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

const DiagnosticResult* EstimateResult::diagnostic(DiagCode code) const {
  for (const auto& d : diagnostics)
    if (d.code == code) return &d;
  return nullptr;
}

RegressionFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n != y.size()) throw Error("NonFinite", "design/response length mismatch");
  if (!X.allFinite() || !y.allFinite())
    throw Error("NonFinite", "non-finite entries in the regression inputs");
  if (n < p + 1)
    throw Error("InsufficientRows",
                "need rows >= columns + 1 (" + std::to_string(n) + " rows, " +
                    std::to_string(p) + " columns)");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin
                                 : std::numeric_limits<double>::infinity();
  if (!(cond <= kRankDeficientCond))
    throw Error("RankDeficient", "condition number " + std::to_string(cond));

  RegressionFit fit;
  fit.coefficients = svd.solve(y);
  const Eigen::VectorXd resid = y - X * fit.coefficients;
  const double rss = resid.squaredNorm();
  fit.residual_dof = n - p;
  fit.condition_number = cond;
  const double sigma2 = rss / static_cast<double>(fit.residual_dof);

  // (X'X)^-1 from the SVD factors.
  const Eigen::VectorXd inv_s2 = sv.array().square().inverse();
  const Eigen::MatrixXd xtx_inv =
      svd.matrixV() * inv_s2.asDiagonal() * svd.matrixV().transpose();

  fit.standard_errors.resize(p);
  fit.t_stats.resize(p);
  fit.p_values.resize(p);
  const bool degenerate = sigma2 < kDegenerateVar;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = degenerate ? 0.0 : std::sqrt(sigma2 * xtx_inv(j, j));
    fit.standard_errors(j) = se;
    const double coef = fit.coefficients(j);
    if (se > 0.0) {
      fit.t_stats(j) = coef / se;
      fit.p_values(j) = two_sided_p(fit.t_stats(j), fit.residual_dof);
    } else if (std::abs(coef) <= 1e-9) {
      fit.t_stats(j) = 0.0;
      fit.p_values(j) = 1.0;
    } else {
      fit.t_stats(j) = std::copysign(1e15, coef);
      fit.p_values(j) = 0.0;
    }
  }

  const double tss = (y.array() - y.mean()).square().sum();
  if (tss > 0.0) {
    fit.r_squared = 1.0 - rss / tss;
  } else {
    fit.r_squared = rss < kDegenerateVar ? 1.0 : 0.0;
  }
  fit.converged = true;
  return fit;
}

namespace {

struct DidFrame {
  std::vector<double> y, treat, post;
  std::vector<std::string> unit;
  std::vector<double> period;  // empty when no period role mapped
  std::vector<std::string> units;
  std::vector<double> periods;  // distinct post values or calendar periods
};

DidFrame load_did_frame(const MockDataset& data, const ToolCall& call) {
  DidFrame f;
  f.y = numeric_column(data, mapped(call, "dependent"), "dependent");
  f.treat = numeric_column(data, mapped(call, "treatment"), "treatment");
  f.post = numeric_column(data, mapped(call, "time"), "time");
  f.unit = label_column(data, mapped(call, "unit"));
  require_binary(f.treat, "treatment");
  require_binary(f.post, "time");
  if (const std::string* period_col = call.column("period"))
    f.period = numeric_column(data, *period_col, "period");
  f.units = distinct(f.unit);
  return f;
}

}  // namespace

EstimateResult run_did(const MockDataset& data, const ToolCall& call) {
  DidFrame f = load_did_frame(data, call);
  const std::size_t n = f.y.size();

  // Arm sizes at the unit level.
  std::map<std::string, double> unit_treat;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = unit_treat.emplace(f.unit[i], f.treat[i]);
    if (!inserted && it->second != f.treat[i])
      throw Error("BadColumnType",
                  "treatment indicator varies within unit '" + f.unit[i] + "'");
  }
  int treated_units = 0, control_units = 0;
  for (const auto& [u, t] : unit_treat) (t > 0.5 ? treated_units : control_units)++;
  if (treated_units < 2 || control_units < 2)
    throw Error("InsufficientData", "DiD needs >=2 units in each arm");
  const bool has_pre = std::any_of(f.post.begin(), f.post.end(),
                                   [](double v) { return v == 0.0; });
  const bool has_post = std::any_of(f.post.begin(), f.post.end(),
                                    [](double v) { return v == 1.0; });
  if (!has_pre || !has_post)
    throw Error("InsufficientData", "DiD needs both pre and post periods");

  // Period blocks come from the calendar column when mapped, else pre/post.
  std::vector<double> period_key = f.period.empty() ? f.post : f.period;
  const std::vector<double> periods = distinct(period_key);
  const std::vector<std::string>& units = f.units;

  const std::size_t p = 1 + (units.size() - 1) + (periods.size() - 1) + 1;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(p));
  std::map<std::string, std::size_t> unit_ix;
  for (std::size_t j = 1; j < units.size(); ++j) unit_ix[units[j]] = j;
  std::map<double, std::size_t> period_ix;
  for (std::size_t j = 1; j < periods.size(); ++j) period_ix[periods[j]] = j;

  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    if (auto it = unit_ix.find(f.unit[i]); it != unit_ix.end())
      X(i, static_cast<Eigen::Index>(it->second)) = 1.0;
    if (auto it = period_ix.find(period_key[i]); it != period_ix.end())
      X(i, static_cast<Eigen::Index>(units.size() - 1 + it->second)) = 1.0;
    X(i, static_cast<Eigen::Index>(p - 1)) = f.treat[i] * f.post[i];
  }

  const RegressionFit fit = ols(X, to_eigen(f.y));
  const Eigen::Index last = static_cast<Eigen::Index>(p - 1);

  EstimateResult est;
  est.tool = ModelType::DiD;
  est.n_used = static_cast<long>(n);
  attach_estimate_stats(est, fit.coefficients(last), fit.standard_errors(last),
                        fit.residual_dof);
  if (!est.standard_error) {
    // Degenerate fit: keep the exact-convention stats from the OLS core.
    est.t_stat = fit.t_stats(last);
    est.p_value = fit.p_values(last);
  }
  est.diagnostics.push_back(condition_diag(fit.condition_number));
  est.detail["r_squared"] = fit.r_squared;
  est.detail["condition_number"] = fit.condition_number;
  est.detail["treated_units"] = treated_units;
  est.detail["control_units"] = control_units;

  if (!f.period.empty()) {
    try {
      est.diagnostics.push_back(test_parallel_trends(data, call));
    } catch (const Error& e) {
      est.detail["parallel_trends_note"] = std::string(e.what());
    }
  } else {
    est.detail["parallel_trends_note"] =
        "no 'period' role mapped; pre-trends test skipped";
  }
  return est;
}

DiagnosticResult test_parallel_trends(const MockDataset& data, const ToolCall& call) {
  const std::vector<double>& y = numeric_column(data, mapped(call, "dependent"), "dependent");
  const std::vector<double>& treat =
      numeric_column(data, mapped(call, "treatment"), "treatment");
  const std::vector<double>& post = numeric_column(data, mapped(call, "time"), "time");
  const std::vector<double>& period =
      numeric_column(data, mapped(call, "period"), "period");
  require_binary(treat, "treatment");
  require_binary(post, "time");

  std::vector<double> py, pt, pg;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (post[i] == 0.0) {
      py.push_back(y[i]);
      pt.push_back(period[i]);
      pg.push_back(treat[i]);
    }
  }
  if (distinct(pt).size() < 2)
    throw Error("InsufficientPrePeriods",
                "pre-trends test needs >=2 distinct pre-periods");

  const double t_mean = mean_of(pt);
  const Eigen::Index n = static_cast<Eigen::Index>(py.size());
  Eigen::MatrixXd X(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tc = pt[static_cast<std::size_t>(i)] - t_mean;
    const double g = pg[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    X(i, 1) = tc;
    X(i, 2) = g;
    X(i, 3) = tc * g;
  }
  const RegressionFit fit = ols(X, to_eigen(py));
  const double p = fit.p_values(3);
  return {DiagCode::ParallelTrendsFail, p, 0.05, p < 0.05};
}

EstimateResult run_iv(const MockDataset& data, const ToolCall& call) {
  const std::vector<double>& y = numeric_column(data, mapped(call, "dependent"), "dependent");
  const std::vector<double>& x = numeric_column(data, mapped(call, "treatment"), "treatment");
  const std::vector<double>& z =
      numeric_column(data, mapped(call, "instrument"), "instrument");
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());

  Eigen::MatrixXd Xz(n, 2);
  Xz.col(0).setOnes();
  Xz.col(1) = to_eigen(z);
  const RegressionFit first = ols(Xz, to_eigen(x));
  const double f_stat = first.t_stats(1) * first.t_stats(1);
  const Eigen::VectorXd xhat = Xz * first.coefficients;

  Eigen::MatrixXd Xh(n, 2);
  Xh.col(0).setOnes();
  Xh.col(1) = xhat;
  const RegressionFit second = ols(Xh, to_eigen(y));
  const double tau = second.coefficients(1);
  const double b0 = second.coefficients(0);

  // 2SLS residuals use the actual regressor, not the first-stage fit.
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = y[static_cast<std::size_t>(i)] -
                     b0 - tau * x[static_cast<std::size_t>(i)];
    rss += e * e;
  }
  const long dof = n - 2;
  const double sigma2 = rss / static_cast<double>(dof);
  const Eigen::Matrix2d xtx = Xh.transpose() * Xh;
  const Eigen::Matrix2d xtx_inv = xtx.inverse();
  const double se = sigma2 < kDegenerateVar
                        ? 0.0
                        : std::sqrt(sigma2 * xtx_inv(1, 1));

  EstimateResult est;
  est.tool = ModelType::IV;
  est.n_used = static_cast<long>(n);
  attach_estimate_stats(est, tau, se, dof);
  est.diagnostics.push_back(
      {DiagCode::WeakInstrument, f_stat, kWeakInstrumentF, f_stat < kWeakInstrumentF});
  est.diagnostics.push_back(condition_diag(second.condition_number));

  // Naive OLS for the endogeneity contrast.
  Eigen::MatrixXd Xo(n, 2);
  Xo.col(0).setOnes();
  Xo.col(1) = to_eigen(x);
  const RegressionFit naive = ols(Xo, to_eigen(y));
  est.detail["first_stage_f"] = f_stat;
  est.detail["ols_coefficient"] = naive.coefficients(1);
  return est;
}

EstimateResult run_rd(const MockDataset& data, const ToolCall& call) {
  const std::vector<double>& y = numeric_column(data, mapped(call, "dependent"), "dependent");
  const std::vector<double>& running =
      numeric_column(data, mapped(call, "running"), "running");
  auto cutoff_it = call.options.find("cutoff");
  if (cutoff_it == call.options.end()) throw Error("RoleMissing", "cutoff");
  const double cutoff = cutoff_it->second;
  double bandwidth = 0.5 * sample_sd(running);
  if (auto it = call.options.find("bandwidth"); it != call.options.end())
    bandwidth = it->second;
  if (!(bandwidth > 0.0)) throw Error("NoSupport", "bandwidth must be positive");

  std::vector<double> yl, xl, yr, xr;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = running[i] - cutoff;
    if (d >= -bandwidth && d < 0.0) {
      yl.push_back(y[i]);
      xl.push_back(d);
    } else if (d >= 0.0 && d <= bandwidth) {
      yr.push_back(y[i]);
      xr.push_back(d);
    }
  }
  if (yl.size() < 3 || yr.size() < 3)
    throw Error("NoSupport", "fewer than 3 in-bandwidth points on one side "
                             "(left " + std::to_string(yl.size()) + ", right " +
                             std::to_string(yr.size()) + ")");

  auto side_fit = [](const std::vector<double>& xs, const std::vector<double>& ys) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), 2);
    X.col(0).setOnes();
    X.col(1) = to_eigen(xs);
    return ols(X, to_eigen(ys));
  };
  const RegressionFit left = side_fit(xl, yl);
  const RegressionFit right = side_fit(xr, yr);

  const double effect = right.coefficients(0) - left.coefficients(0);
  const double se = std::sqrt(left.standard_errors(0) * left.standard_errors(0) +
                              right.standard_errors(0) * right.standard_errors(0));
  const long dof = static_cast<long>(yl.size() + yr.size()) - 4;

  EstimateResult est;
  est.tool = ModelType::RD;
  est.n_used = static_cast<long>(yl.size() + yr.size());
  attach_estimate_stats(est, effect, se, dof);
  const double min_side = static_cast<double>(std::min(yl.size(), yr.size()));
  est.diagnostics.push_back({DiagCode::ThinSupport, min_side,
                             static_cast<double>(kThinSupportMin),
                             min_side < kThinSupportMin});
  est.diagnostics.push_back(
      condition_diag(std::max(left.condition_number, right.condition_number)));
  est.detail["bandwidth"] = bandwidth;
  est.detail["cutoff"] = cutoff;
  est.detail["n_left"] = static_cast<long>(yl.size());
  est.detail["n_right"] = static_cast<long>(yr.size());
  est.detail["intercept_left"] = left.coefficients(0);
  est.detail["intercept_right"] = right.coefficients(0);
  return est;
}

namespace {

Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cssv = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cssv += u[static_cast<std::size_t>(i)];
    const double t = (cssv - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  (void)rho;
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::max(v(i) - theta, 0.0);
  return v;
}

}  // namespace

SimplexLsqResult simplex_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             int max_iter, double tol) {
  const Eigen::Index J = A.cols();
  SimplexLsqResult res;
  res.weights = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));

  const Eigen::MatrixXd AtA = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(AtA);
  const double lmax = eig.eigenvalues().maxCoeff();
  double step = lmax > 0.0 ? 1.0 / (2.0 * lmax) : 1.0;

  auto objective = [&](const Eigen::VectorXd& w) {
    return (A * w - b).squaredNorm();
  };
  double obj = objective(res.weights);
  res.objective_path.push_back(obj);

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad = 2.0 * A.transpose() * (A * res.weights - b);
    double s = step;
    Eigen::VectorXd next;
    double next_obj = obj;
    // Step 1/(2L) already guarantees descent; the halving only absorbs
    // floating-point wiggle near the optimum.
    for (int h = 0; h < 60; ++h) {
      next = project_simplex(res.weights - s * grad);
      next_obj = objective(next);
      if (next_obj <= obj) break;
      s *= 0.5;
    }
    if (next_obj > obj) {
      res.converged = true;  // stalled at numerical optimum
      break;
    }
    const double move = (next - res.weights).lpNorm<Eigen::Infinity>();
    res.weights = next;
    obj = next_obj;
    res.objective_path.push_back(obj);
    res.iterations = it + 1;
    if (move <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

EstimateResult run_scm(const MockDataset& data, const ToolCall& call) {
  const std::vector<double>& y = numeric_column(data, mapped(call, "dependent"), "dependent");
  const std::vector<std::string> unit = label_column(data, mapped(call, "unit"));
  const std::vector<double>& time = numeric_column(data, mapped(call, "time"), "time");
  const std::vector<double>& treated_flag =
      numeric_column(data, mapped(call, "treated_unit"), "treated_unit");
  require_binary(treated_flag, "treated_unit");

  const std::vector<std::string> units = distinct(unit);
  std::vector<double> times = distinct(time);
  std::sort(times.begin(), times.end());

  std::map<std::string, std::size_t> unit_ix;
  for (std::size_t j = 0; j < units.size(); ++j) unit_ix[units[j]] = j;
  std::map<double, std::size_t> time_ix;
  for (std::size_t t = 0; t < times.size(); ++t) time_ix[times[t]] = t;

  const std::size_t U = units.size(), T = times.size();
  std::vector<std::vector<double>> grid(U, std::vector<double>(T));
  std::vector<std::vector<int>> filled(U, std::vector<int>(T, 0));
  std::set<std::string> flagged_units;
  std::vector<std::vector<double>> flag_grid(U, std::vector<double>(T, 0.0));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t u = unit_ix[unit[i]];
    const std::size_t t = time_ix[time[i]];
    if (filled[u][t]++)
      throw Error("UnbalancedPanel", "duplicate cell " + unit[i]);
    grid[u][t] = y[i];
    flag_grid[u][t] = treated_flag[i];
    if (treated_flag[i] == 1.0) flagged_units.insert(unit[i]);
  }
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t t = 0; t < T; ++t)
      if (!filled[u][t])
        throw Error("UnbalancedPanel", "missing cell " + units[u]);

  if (flagged_units.size() != 1)
    throw Error("RoleMissing",
                "treated_unit indicator must mark exactly one unit, found " +
                    std::to_string(flagged_units.size()));
  const std::size_t treated_u = unit_ix[*flagged_units.begin()];

  std::vector<std::size_t> pre_t, post_t;
  for (std::size_t t = 0; t < T; ++t)
    (flag_grid[treated_u][t] == 0.0 ? pre_t : post_t).push_back(t);
  const std::size_t donors = U - 1;
  if (donors < 3) throw Error("InsufficientData", "SCM needs >=3 donors");
  if (pre_t.size() < 3) throw Error("InsufficientData", "SCM needs >=3 pre-periods");
  if (post_t.empty()) throw Error("InsufficientData", "SCM needs >=1 post-period");

  std::vector<std::size_t> donor_units;
  for (std::size_t u = 0; u < U; ++u)
    if (u != treated_u) donor_units.push_back(u);

  Eigen::MatrixXd A(static_cast<Eigen::Index>(pre_t.size()),
                    static_cast<Eigen::Index>(donors));
  Eigen::VectorXd b(static_cast<Eigen::Index>(pre_t.size()));
  for (std::size_t r = 0; r < pre_t.size(); ++r) {
    b(static_cast<Eigen::Index>(r)) = grid[treated_u][pre_t[r]];
    for (std::size_t j = 0; j < donors; ++j)
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          grid[donor_units[j]][pre_t[r]];
  }

  const SimplexLsqResult sol = simplex_lsq(A, b);
  if (!sol.converged)
    throw Error("SolverFail", "simplex projected gradient did not converge in 10000 iterations");

  double gap_sum = 0.0;
  for (const std::size_t t : post_t) {
    double synth = 0.0;
    for (std::size_t j = 0; j < donors; ++j)
      synth += sol.weights(static_cast<Eigen::Index>(j)) * grid[donor_units[j]][t];
    gap_sum += grid[treated_u][t] - synth;
  }

  EstimateResult est;
  est.tool = ModelType::SCM;
  est.effect = gap_sum / static_cast<double>(post_t.size());
  est.n_used = static_cast<long>(y.size());
  nlohmann::ordered_json weights = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < donors; ++j)
    weights[units[donor_units[j]]] = sol.weights(static_cast<Eigen::Index>(j));
  est.detail["weights"] = weights;
  est.detail["pre_rmse"] =
      std::sqrt(sol.objective_path.back() / static_cast<double>(pre_t.size()));
  est.detail["iterations"] = sol.iterations;
  est.detail["n_pre"] = static_cast<long>(pre_t.size());
  est.detail["n_post"] = static_cast<long>(post_t.size());
  return est;
}

namespace {

struct LogisticFit {
  Eigen::VectorXd theta;
  Eigen::VectorXd eta;  // linear predictor per row
  bool converged = false;
  int iterations = 0;
};

LogisticFit logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                         int max_iter = 100, double tol = 1e-8) {
  const Eigen::Index n = X.rows(), p = X.cols();
  LogisticFit fit;
  fit.theta = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < max_iter; ++it) {
    fit.eta = X * fit.theta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::clamp(fit.eta(i), -30.0, 30.0);
      prob(i) = 1.0 / (1.0 + std::exp(-e));
      w(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-10);
    }
    const Eigen::VectorXd grad = X.transpose() * (t - prob);
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    H.diagonal().array() += 1e-10;
    const Eigen::VectorXd delta = H.ldlt().solve(grad);
    fit.theta += delta;
    fit.iterations = it + 1;
    if (delta.lpNorm<Eigen::Infinity>() <= tol) {
      fit.converged = true;
      break;
    }
  }
  fit.eta = X * fit.theta;
  return fit;
}

// Max variance inflation factor across covariates (1.0 for a single one).
double max_vif(const Eigen::MatrixXd& covs) {
  const Eigen::Index k = covs.cols();
  if (k < 2) return 1.0;
  double worst = 1.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::MatrixXd X(covs.rows(), k);  // intercept + the other covariates
    X.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index m = 0; m < k; ++m)
      if (m != j) X.col(c++) = covs.col(m);
    try {
      const RegressionFit fit = ols(X, covs.col(j));
      const double r2 = std::clamp(fit.r_squared, 0.0, 1.0 - 1e-12);
      worst = std::max(worst, 1.0 / (1.0 - r2));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

}  // namespace

EstimateResult run_psm(const MockDataset& data, const ToolCall& call) {
  const std::vector<double>& y = numeric_column(data, mapped(call, "dependent"), "dependent");
  const std::vector<double>& treat =
      numeric_column(data, mapped(call, "treatment"), "treatment");
  require_binary(treat, "treatment");
  const std::vector<std::string> cov_names = call.covariate_columns();
  if (cov_names.empty()) throw Error("RoleMissing", "covariates");

  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  const Eigen::Index k = static_cast<Eigen::Index>(cov_names.size());
  Eigen::MatrixXd covs(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    covs.col(j) = to_eigen(
        numeric_column(data, cov_names[static_cast<std::size_t>(j)], "covariates"));

  std::vector<Eigen::Index> treated_rows, control_rows;
  for (Eigen::Index i = 0; i < n; ++i)
    (treat[static_cast<std::size_t>(i)] > 0.5 ? treated_rows : control_rows)
        .push_back(i);
  if (treated_rows.empty() || control_rows.empty())
    throw Error("InsufficientData", "PSM needs both arms non-empty");

  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  X.rightCols(k) = covs;
  const LogisticFit prop = logistic_fit(X, to_eigen(treat));

  if (!prop.converged) {
    double min_treated = std::numeric_limits<double>::infinity();
    double max_control = -std::numeric_limits<double>::infinity();
    for (const Eigen::Index i : treated_rows)
      min_treated = std::min(min_treated, prop.eta(i));
    for (const Eigen::Index i : control_rows)
      max_control = std::max(max_control, prop.eta(i));
    const bool separated = min_treated > max_control ||
                           prop.theta.lpNorm<Eigen::Infinity>() > 1e3;
    if (separated)
      throw Error("SeparationDetected",
                  "perfect separation in the propensity model; estimate withheld");
  }

  // Caliper on the log-odds scale.
  std::vector<double> eta_v(prop.eta.data(), prop.eta.data() + n);
  double caliper = 0.2 * sample_sd(eta_v);
  if (auto it = call.options.find("caliper"); it != call.options.end())
    caliper = it->second;

  std::vector<double> diffs;
  int unmatched = 0;
  for (const Eigen::Index i : treated_rows) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = -1;
    for (const Eigen::Index j : control_rows) {
      const double d = std::abs(prop.eta(i) - prop.eta(j));
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best <= caliper && best_j >= 0) {
      diffs.push_back(y[static_cast<std::size_t>(i)] -
                      y[static_cast<std::size_t>(best_j)]);
    } else {
      ++unmatched;
    }
  }
  if (diffs.empty())
    throw Error("NoMatches", "no treated unit matched within the caliper");

  const double att = mean_of(diffs);
  const double se = diffs.size() >= 2
                        ? sample_sd(diffs) / std::sqrt(static_cast<double>(diffs.size()))
                        : 0.0;

  EstimateResult est;
  est.tool = ModelType::PSM;
  est.n_used = static_cast<long>(n);
  attach_estimate_stats(est, att, se, static_cast<long>(diffs.size()) - 1);
  const double vif = max_vif(covs);
  est.diagnostics.push_back({DiagCode::Multicollinearity, vif, kVifThreshold,
                             vif > kVifThreshold});
  est.diagnostics.push_back({DiagCode::NonConvergence,
                             prop.converged ? 0.0 : 1.0, 0.5, !prop.converged});

  // Standardized mean differences, before vs. after matching.
  nlohmann::ordered_json balance = nlohmann::ordered_json::object();
  for (Eigen::Index j = 0; j < k; ++j) {
    double mt = 0.0, mc = 0.0, vt = 0.0, vc = 0.0;
    for (const Eigen::Index i : treated_rows) mt += covs(i, j);
    for (const Eigen::Index i : control_rows) mc += covs(i, j);
    mt /= static_cast<double>(treated_rows.size());
    mc /= static_cast<double>(control_rows.size());
    for (const Eigen::Index i : treated_rows) vt += (covs(i, j) - mt) * (covs(i, j) - mt);
    for (const Eigen::Index i : control_rows) vc += (covs(i, j) - mc) * (covs(i, j) - mc);
    vt /= std::max<double>(1.0, static_cast<double>(treated_rows.size()) - 1.0);
    vc /= std::max<double>(1.0, static_cast<double>(control_rows.size()) - 1.0);
    const double pooled = std::sqrt(0.5 * (vt + vc));
    balance[cov_names[static_cast<std::size_t>(j)]] =
        pooled > 0.0 ? (mt - mc) / pooled : 0.0;
  }
  est.detail["smd_before"] = balance;
  est.detail["matched"] = static_cast<long>(diffs.size());
  est.detail["unmatched"] = unmatched;
  est.detail["caliper"] = caliper;
  est.detail["logit_iterations"] = prop.iterations;
  return est;
}

std::vector<std::string> ToolCall::covariate_columns() const {
  std::vector<std::string> out;
  const std::string* raw = column("covariates");
  if (!raw) return out;
  std::string cur;
  auto flush = [&] {
    const std::size_t b = cur.find_first_not_of(" \t");
    const std::size_t e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (const char c : *raw) {
    if (c == ',') flush();
    else cur.push_back(c);
  }
  flush();
  return out;
}

void validate_tool_call(const ToolCall& call, const ColumnSchema& schema) {
  static const std::map<ModelType, std::vector<std::string>> required = {
      {ModelType::DiD, {"dependent", "treatment", "time", "unit"}},
      {ModelType::IV, {"dependent", "treatment", "instrument"}},
      {ModelType::RD, {"dependent", "running"}},
      {ModelType::SCM, {"dependent", "unit", "time", "treated_unit"}},
      {ModelType::PSM, {"dependent", "treatment", "covariates"}},
  };
  for (const auto& role : required.at(call.tool))
    if (!call.column(role)) throw Error("RoleMissing", role);
  if (call.tool == ModelType::RD && !call.options.count("cutoff"))
    throw Error("RoleMissing", "cutoff");

  for (const auto& [role, column] : call.column_map) {
    if (role == "covariates") continue;
    if (!schema.contains(column)) throw Error("ColumnMiss", column);
  }
  for (const auto& c : call.covariate_columns())
    if (!schema.contains(c)) throw Error("ColumnMiss", c);
}

ExecutionResult execute_tool(const ToolCall& call, const MockDataset& data) {
  ExecutionResult result;
  try {
    validate_tool_call(call, describe_schema(data));
    switch (call.tool) {
      case ModelType::DiD: result.estimate = run_did(data, call); break;
      case ModelType::IV: result.estimate = run_iv(data, call); break;
      case ModelType::RD: result.estimate = run_rd(data, call); break;
      case ModelType::SCM: result.estimate = run_scm(data, call); break;
      case ModelType::PSM: result.estimate = run_psm(data, call); break;
    }
  } catch (const Error& e) {
    static const std::set<std::string> mapping_codes = {"RoleMissing", "ColumnMiss",
                                                        "BadColumnType"};
    ExecutionFailure failure;
    failure.code = e.code();
    failure.kind = mapping_codes.count(e.code()) ? "mapping" : "statistical";
    failure.detail = e.what();
    result.failure = failure;
  } catch (const std::exception& e) {
    result.failure = ExecutionFailure{"statistical", "Internal", e.what()};
  }
  return result;
}

nlohmann::ordered_json diagnostic_to_json(const DiagnosticResult& d) {
  nlohmann::ordered_json j;
  j["code"] = to_string(d.code);
  j["statistic"] = d.statistic;
  j["threshold"] = d.threshold;
  j["triggered"] = d.triggered;
  return j;
}

nlohmann::ordered_json estimate_to_json(const EstimateResult& e) {
  nlohmann::ordered_json j;
  j["tool"] = to_string(e.tool);
  j["effect"] = e.effect;
  if (e.standard_error) j["standard_error"] = *e.standard_error;
  if (e.t_stat) j["t_stat"] = *e.t_stat;
  if (e.p_value) j["p_value"] = *e.p_value;
  j["n_used"] = e.n_used;
  nlohmann::ordered_json diags = nlohmann::ordered_json::array();
  for (const auto& d : e.diagnostics) diags.push_back(diagnostic_to_json(d));
  j["diagnostics"] = diags;
  j["detail"] = e.detail;
  return j;
}

nlohmann::ordered_json execution_to_json(const ExecutionResult& r) {
  nlohmann::ordered_json j;
  j["ok"] = r.ok();
  if (r.estimate) j["estimate"] = estimate_to_json(*r.estimate);
  if (r.failure) {
    nlohmann::ordered_json f;
    f["kind"] = r.failure->kind;
    f["code"] = r.failure->code;
    f["detail"] = r.failure->detail;
    j["failure"] = f;
  }
  return j;
}

}  // namespace strides

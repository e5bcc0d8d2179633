#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "strides/estimators.hpp"
#include "strides/rng.hpp"
#include "strides/simulate.hpp"

using namespace strides;
using namespace strides::testing;

namespace {

// Group-means oracle for a 2x2 panel, independent of the OLS path.
double double_difference(const MockDataset& d) {
  const auto& y = d.find("outcome")->nums;
  const auto& g = d.find("treatment_intensity")->nums;
  const auto& p = d.find("post_policy")->nums;
  double sum[2][2] = {{0, 0}, {0, 0}};
  int cnt[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum[g[i] > 0.5][p[i] > 0.5] += y[i];
    cnt[g[i] > 0.5][p[i] > 0.5] += 1;
  }
  auto mean = [&](int a, int b) { return sum[a][b] / cnt[a][b]; };
  return (mean(1, 1) - mean(1, 0)) - (mean(0, 1) - mean(0, 0));
}

// Random balanced 2x2 panel: each unit observed pre and post.
MockDataset random_2x2(Rng& rng) {
  const int treated = static_cast<int>(rng.uniform_int(2, 6));
  const int control = static_cast<int>(rng.uniform_int(2, 6));
  std::vector<std::string> unit;
  std::vector<double> year, treat, post, y;
  int id = 0;
  for (int u = 0; u < treated + control; ++u) {
    const bool is_treated = u < treated;
    for (int t = 0; t < 2; ++t) {
      unit.push_back("u" + std::to_string(id));
      year.push_back(2000 + t);
      treat.push_back(is_treated ? 1.0 : 0.0);
      post.push_back(t);
      y.push_back(rng.normal(0.0, 3.0));
    }
    ++id;
  }
  return make_dataset({cat_col("unit", unit), num_col("year", year),
                       num_col("treatment_intensity", treat),
                       num_col("post_policy", post), num_col("outcome", y)});
}

}  // namespace

TEST_CASE("ols solves exact and closed-form cases") {
  SUBCASE("y = 2x with intercept") {
    Eigen::MatrixXd X(4, 2);
    Eigen::VectorXd y(4);
    for (int i = 0; i < 4; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = i;
      y(i) = 2.0 * i;
    }
    const RegressionFit fit = ols(X, y);
    CHECK(fit.coefficients(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    // degenerate-fit conventions
    CHECK(fit.standard_errors(1) == 0.0);
    CHECK(fit.p_values(1) == 0.0);  // nonzero coefficient, zero residual
    CHECK(fit.p_values(0) == 1.0);  // zero coefficient, zero residual
  }
  SUBCASE("three points, hand-solved normal equations") {
    // y = {1,2,4} on x = {0,1,2}: slope 3/2, intercept 5/6
    Eigen::MatrixXd X(3, 2);
    Eigen::VectorXd y(3);
    X << 1, 0, 1, 1, 1, 2;
    y << 1, 2, 4;
    const RegressionFit fit = ols(X, y);
    CHECK(fit.coefficients(1) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(fit.coefficients(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(fit.residual_dof == 1);
  }
}

TEST_CASE("ols error taxonomy") {
  Eigen::MatrixXd X(5, 2);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = 1.0;  // duplicated constant column
    y(i) = i;
  }
  CHECK_THROWS_WITH_AS(ols(X, y), doctest::Contains("RankDeficient"), Error);

  Eigen::MatrixXd Xn(5, 2);
  Xn.setOnes();
  Xn(2, 1) = std::nan("");
  CHECK_THROWS_WITH_AS(ols(Xn, y), doctest::Contains("NonFinite"), Error);

  Eigen::MatrixXd Xs(2, 2);
  Xs << 1, 0, 1, 1;
  Eigen::VectorXd ys(2);
  ys << 1, 2;
  CHECK_THROWS_WITH_AS(ols(Xs, ys), doctest::Contains("InsufficientRows"), Error);
}

TEST_CASE("p-values live in [0,1] with noisy fits") {
  Rng rng(11);
  Eigen::MatrixXd X(40, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
    y(i) = 1.0 + 0.5 * X(i, 1) + rng.normal();
  }
  const RegressionFit fit = ols(X, y);
  for (int j = 0; j < 3; ++j) {
    CHECK(fit.p_values(j) >= 0.0);
    CHECK(fit.p_values(j) <= 1.0);
    CHECK(fit.t_stats(j) ==
          doctest::Approx(fit.coefficients(j) / fit.standard_errors(j)));
  }
}

TEST_CASE("DiD recovers a noiseless effect exactly") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  cfg.effect = 2.0;
  cfg.noise_sd = 0.0;
  cfg.n_units = 4;
  cfg.n_periods = 2;
  const MockDataset d = simulate(cfg, 7);
  const EstimateResult est = run_did(d, did_call());
  CHECK(est.effect == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_FALSE(est.standard_error.has_value());  // degenerate noiseless fit
  CHECK(est.n_used == 8);
}

TEST_CASE("DiD interaction coefficient equals the double difference of cell means") {
  Rng rng(20250810);
  for (int i = 0; i < 40; ++i) {
    const MockDataset d = random_2x2(rng);
    const EstimateResult est = run_did(d, did_call());
    CHECK(est.effect == doctest::Approx(double_difference(d)).epsilon(1e-9));
  }
}

TEST_CASE("DiD attaches the pre-trends diagnostic") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  cfg.effect = 2.0;
  cfg.noise_sd = 0.1;
  cfg.pre_trend_gap = 1.0;
  const MockDataset d = simulate(cfg, 1);
  const EstimateResult est = run_did(d, did_call());
  const DiagnosticResult* pt = est.diagnostic(DiagCode::ParallelTrendsFail);
  REQUIRE(pt);
  CHECK(pt->triggered);
  CHECK(pt->statistic < 0.05);
  CHECK(pt->threshold == 0.05);
}

TEST_CASE("DiD validates roles and arms") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  const MockDataset d = simulate(cfg, 2);

  ToolCall missing = did_call();
  missing.column_map.erase("unit");
  CHECK_THROWS_WITH_AS(run_did(d, missing), doctest::Contains("RoleMissing"), Error);

  ToolCall wrong = did_call();
  wrong.column_map["time"] = "year";  // calendar column is not a 0/1 indicator
  CHECK_THROWS_WITH_AS(run_did(d, wrong), doctest::Contains("BadColumnType"), Error);
}

TEST_CASE("parallel trends test on crafted panels") {
  SUBCASE("identical linear pre-trends, zero noise: p in the 1-region") {
    std::vector<std::string> unit;
    std::vector<double> year, treat, post, y;
    for (int u = 0; u < 4; ++u) {
      const bool is_treated = u < 2;
      for (int t = 0; t < 6; ++t) {
        unit.push_back("u" + std::to_string(u));
        year.push_back(t);
        treat.push_back(is_treated);
        post.push_back(t >= 4);
        y.push_back(1.0 + 0.5 * t + (is_treated ? 2.0 : 0.0));
      }
    }
    const MockDataset d =
        make_dataset({cat_col("unit", unit), num_col("year", year),
                      num_col("treatment_intensity", treat),
                      num_col("post_policy", post), num_col("outcome", y)});
    const DiagnosticResult pt = test_parallel_trends(d, did_call());
    CHECK_FALSE(pt.triggered);
    CHECK(pt.statistic == doctest::Approx(1.0));
  }
  SUBCASE("diverging trends trigger; p matches an independent OLS rebuild") {
    DgpConfig cfg;
    cfg.family = ModelType::DiD;
    cfg.noise_sd = 0.1;
    cfg.pre_trend_gap = 1.0;
    const MockDataset d = simulate(cfg, 1);
    const DiagnosticResult pt = test_parallel_trends(d, did_call());
    CHECK(pt.triggered);

    // Oracle: rebuild the pre-period interaction regression by hand.
    const auto& y = d.find("outcome")->nums;
    const auto& g = d.find("treatment_intensity")->nums;
    const auto& p = d.find("post_policy")->nums;
    const auto& t = d.find("year")->nums;
    std::vector<double> py, pt_, pg;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (p[i] == 0.0) {
        py.push_back(y[i]);
        pt_.push_back(t[i]);
        pg.push_back(g[i]);
      }
    double tmean = 0.0;
    for (const double v : pt_) tmean += v;
    tmean /= pt_.size();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(py.size()), 4);
    Eigen::VectorXd yy(static_cast<Eigen::Index>(py.size()));
    for (std::size_t i = 0; i < py.size(); ++i) {
      X(static_cast<Eigen::Index>(i), 0) = 1.0;
      X(static_cast<Eigen::Index>(i), 1) = pt_[i] - tmean;
      X(static_cast<Eigen::Index>(i), 2) = pg[i];
      X(static_cast<Eigen::Index>(i), 3) = (pt_[i] - tmean) * pg[i];
      yy(static_cast<Eigen::Index>(i)) = py[i];
    }
    const RegressionFit oracle = ols(X, yy);
    CHECK(pt.statistic == doctest::Approx(oracle.p_values(3)).epsilon(1e-12));
  }
  SUBCASE("single pre-period is rejected") {
    DgpConfig cfg;
    cfg.family = ModelType::DiD;
    cfg.n_units = 6;
    cfg.n_periods = 2;  // one pre, one post
    const MockDataset d = simulate(cfg, 3);
    CHECK_THROWS_WITH_AS(test_parallel_trends(d, did_call()),
                         doctest::Contains("InsufficientPrePeriods"), Error);
  }
}

TEST_CASE("IV: noiseless recovery, weak-instrument flag, OLS degeneracy") {
  SUBCASE("noiseless tau = 1.5") {
    DgpConfig cfg;
    cfg.family = ModelType::IV;
    cfg.effect = 1.5;
    cfg.noise_sd = 0.0;
    const MockDataset d = simulate(cfg, 5);
    const EstimateResult est = run_iv(d, iv_call());
    CHECK(est.effect == doctest::Approx(1.5).epsilon(1e-8));
    CHECK_FALSE(est.diagnostic(DiagCode::WeakInstrument)->triggered);
  }
  SUBCASE("pi = 0 triggers the weak-instrument diagnostic") {
    DgpConfig cfg;
    cfg.family = ModelType::IV;
    cfg.instrument_strength = 0.0;
    const MockDataset d = simulate(cfg, 6);
    const EstimateResult est = run_iv(d, iv_call());
    const DiagnosticResult* weak = est.diagnostic(DiagCode::WeakInstrument);
    REQUIRE(weak);
    CHECK(weak->triggered);
    CHECK(weak->threshold == 10.0);
  }
  SUBCASE("instrument == treatment collapses 2SLS to OLS") {
    DgpConfig cfg;
    cfg.family = ModelType::IV;
    const MockDataset d = simulate(cfg, 8);
    MockDataset self = d;
    for (auto& c : self.columns)
      if (c.name == "instrument") c.nums = self.find("treatment")->nums;
    const EstimateResult est = run_iv(self, iv_call());
    const double ols_coef = est.detail["ols_coefficient"].get<double>();
    CHECK(std::abs(est.effect - ols_coef) <= 1e-9);
  }
}

TEST_CASE("RD: sharp jump recovery and support diagnostics") {
  SUBCASE("noiseless step of 3 at the cutoff") {
    DgpConfig cfg;
    cfg.family = ModelType::RD;
    cfg.effect = 3.0;
    cfg.noise_sd = 0.0;
    cfg.slope = 0.0;  // Y = 1 + 3*[x >= 0]
    const MockDataset d = simulate(cfg, 4);
    const EstimateResult est = run_rd(d, rd_call());
    CHECK(est.effect == doctest::Approx(3.0).epsilon(1e-8));
  }
  SUBCASE("zero jump estimates near zero") {
    DgpConfig cfg;
    cfg.family = ModelType::RD;
    cfg.effect = 0.0;
    cfg.noise_sd = 0.2;
    const MockDataset d = simulate(cfg, 12);
    const EstimateResult est = run_rd(d, rd_call());
    CHECK(std::abs(est.effect) < 0.5);
  }
  SUBCASE("default bandwidth reproduces side-by-side OLS fits") {
    DgpConfig cfg;
    cfg.family = ModelType::RD;
    cfg.effect = 3.0;
    cfg.noise_sd = 0.5;
    const MockDataset d = simulate(cfg, 2);
    const EstimateResult est = run_rd(d, rd_call());

    const auto& x = d.find("running")->nums;
    const auto& y = d.find("outcome")->nums;
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (const double v : x) ss += (v - mean) * (v - mean);
    const double h = 0.5 * std::sqrt(ss / (static_cast<double>(x.size()) - 1.0));
    CHECK(est.detail["bandwidth"].get<double>() == doctest::Approx(h));

    auto side = [&](bool right) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (right && x[i] >= 0.0 && x[i] <= h) {
          xs.push_back(x[i]);
          ys.push_back(y[i]);
        } else if (!right && x[i] >= -h && x[i] < 0.0) {
          xs.push_back(x[i]);
          ys.push_back(y[i]);
        }
      }
      Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), 2);
      Eigen::VectorXd yy(static_cast<Eigen::Index>(ys.size()));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        X(static_cast<Eigen::Index>(i), 1) = xs[i];
        yy(static_cast<Eigen::Index>(i)) = ys[i];
      }
      return ols(X, yy).coefficients(0);
    };
    CHECK(est.effect == doctest::Approx(side(true) - side(false)).epsilon(1e-12));
  }
  SUBCASE("narrow bandwidth triggers ThinSupport; empty side is NoSupport") {
    DgpConfig cfg;
    cfg.family = ModelType::RD;
    const MockDataset d = simulate(cfg, 3);
    ToolCall call = rd_call();
    call.options["bandwidth"] = 0.04;
    const EstimateResult est = run_rd(d, call);
    CHECK(est.diagnostic(DiagCode::ThinSupport)->triggered);

    call.options["cutoff"] = 99.0;  // everything far left of the cutoff
    CHECK_THROWS_WITH_AS(run_rd(d, call), doctest::Contains("NoSupport"), Error);
  }
}

TEST_CASE("SCM donor weights and effect") {
  SUBCASE("treated path equal to one donor concentrates the weight") {
    DgpConfig cfg;
    cfg.family = ModelType::SCM;
    cfg.n_donors = 6;
    cfg.effect = 0.0;
    cfg.noise_sd = 0.0;
    MockDataset d = simulate(cfg, 10);
    // overwrite the treated rows with donor 3's path
    const int periods = cfg.n_pre + cfg.n_post;
    auto& y = d.columns[3].nums;
    const int donor3_offset = 2 * periods;  // D03 block
    const int treated_offset = 6 * periods;
    for (int t = 0; t < periods; ++t)
      y[static_cast<std::size_t>(treated_offset + t)] =
          y[static_cast<std::size_t>(donor3_offset + t)];
    const EstimateResult est = run_scm(d, scm_call());
    CHECK(est.detail["weights"]["D03"].get<double>() >= 0.99);
    CHECK(std::abs(est.effect) < 1e-6);
  }
  SUBCASE("constructed convex combination recovers tau = 1") {
    DgpConfig cfg;
    cfg.family = ModelType::SCM;
    cfg.n_donors = 6;
    cfg.n_pre = 8;
    cfg.n_post = 4;
    cfg.effect = 0.0;
    cfg.noise_sd = 0.0;
    MockDataset d = simulate(cfg, 11);
    const int periods = 12;
    auto& y = d.columns[3].nums;
    // treated = 0.5*(donor1 + donor2) plus tau = 1 after period 8
    const int treated_offset = 6 * periods;
    for (int t = 0; t < periods; ++t) {
      const double mix = 0.5 * (y[static_cast<std::size_t>(0 * periods + t)] +
                                y[static_cast<std::size_t>(1 * periods + t)]);
      y[static_cast<std::size_t>(treated_offset + t)] = mix + (t >= 8 ? 1.0 : 0.0);
    }
    const EstimateResult est = run_scm(d, scm_call());
    CHECK(est.effect == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(est.standard_error.has_value());
  }
  SUBCASE("weights stay feasible on default draws") {
    DgpConfig cfg;
    cfg.family = ModelType::SCM;
    cfg.effect = 1.0;
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const MockDataset d = simulate(cfg, seed);
      const EstimateResult est = run_scm(d, scm_call());
      double total = 0.0;
      for (const auto& [name, w] : est.detail["weights"].items()) {
        CHECK(w.get<double>() >= -1e-9);
        total += w.get<double>();
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("too few donors") {
    DgpConfig cfg;
    cfg.family = ModelType::SCM;
    cfg.n_donors = 4;
    const MockDataset d = simulate(cfg, 13);
    const int periods = cfg.n_pre + cfg.n_post;
    // drop two donors' rows to leave only 2
    MockDataset trimmed = d;
    for (auto& c : trimmed.columns) {
      if (c.storage == Column::Storage::Numeric)
        c.nums.erase(c.nums.begin(), c.nums.begin() + 2 * periods);
      else
        c.cats.erase(c.cats.begin(), c.cats.begin() + 2 * periods);
    }
    trimmed.n_rows -= 2 * periods;
    CHECK_THROWS_WITH_AS(run_scm(trimmed, scm_call()),
                         doctest::Contains("InsufficientData"), Error);
  }
}

TEST_CASE("simplex projected gradient: monotone objective, simplex feasibility") {
  Rng rng(77);
  Eigen::MatrixXd A(8, 12);
  Eigen::VectorXd b(8);
  for (int i = 0; i < 8; ++i) {
    b(i) = rng.normal();
    for (int j = 0; j < 12; ++j) A(i, j) = rng.normal();
  }
  const SimplexLsqResult res = simplex_lsq(A, b);
  CHECK(res.converged);
  for (std::size_t i = 1; i < res.objective_path.size(); ++i)
    CHECK(res.objective_path[i] <= res.objective_path[i - 1] + 1e-15);
  CHECK(res.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.weights.minCoeff() >= -1e-12);
}

TEST_CASE("PSM: twins, balance, separation") {
  SUBCASE("identical-covariate twins recover tau exactly") {
    DgpConfig cfg;
    cfg.family = ModelType::PSM;
    cfg.effect = 2.0;
    cfg.noise_sd = 0.0;
    cfg.outcome_beta = 0.0;
    cfg.twin_pairs = true;
    const MockDataset d = simulate(cfg, 14);
    const EstimateResult est = run_psm(d, psm_call());
    CHECK(est.effect == 2.0);
    CHECK(est.detail["matched"].get<long>() == 200);
  }
  SUBCASE("randomized treatment keeps the ATT near truth") {
    DgpConfig cfg;
    cfg.family = ModelType::PSM;
    cfg.effect = 2.0;
    cfg.propensity_strength = 0.0;  // covariates independent of treatment
    const MockDataset d = simulate(cfg, 15);
    const EstimateResult est = run_psm(d, psm_call());
    REQUIRE(est.standard_error.has_value());
    CHECK(std::abs(est.effect - 2.0) < 2.0 * *est.standard_error + 0.2);
    CHECK_FALSE(est.diagnostic(DiagCode::NonConvergence)->triggered);
    CHECK(est.detail.contains("smd_before"));
  }
  SUBCASE("a perfectly separating covariate is detected") {
    std::vector<double> x, t, y;
    Rng rng(16);
    for (int i = 0; i < 80; ++i) {
      const double xi = rng.normal();
      x.push_back(xi);
      t.push_back(xi > 0.0 ? 1.0 : 0.0);
      y.push_back(2.0 * (xi > 0.0) + rng.normal());
    }
    const MockDataset d = make_dataset(
        {num_col("x1", x), num_col("treatment", t), num_col("outcome", y)});
    CHECK_THROWS_WITH_AS(run_psm(d, psm_call("x1")),
                         doctest::Contains("SeparationDetected"), Error);
  }
}

TEST_CASE("execute_tool is total over failures") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  const MockDataset d = simulate(cfg, 17);

  SUBCASE("valid call") {
    const ExecutionResult r = execute_tool(did_call(), d);
    CHECK(r.ok());
    CHECK(r.estimate->tool == ModelType::DiD);
  }
  SUBCASE("missing column is a mapping failure") {
    ToolCall call = did_call();
    call.column_map["dependent"] = "gdp2";
    const ExecutionResult r = execute_tool(call, d);
    REQUIRE_FALSE(r.ok());
    CHECK(r.failure->kind == "mapping");
    CHECK(r.failure->code == "ColumnMiss");
  }
  SUBCASE("missing role is a mapping failure") {
    ToolCall call = did_call();
    call.column_map.erase("time");
    const ExecutionResult r = execute_tool(call, d);
    REQUIRE_FALSE(r.ok());
    CHECK(r.failure->kind == "mapping");
  }
  SUBCASE("rank deficiency is a statistical failure") {
    // constant instrument makes the first stage rank deficient
    std::vector<double> z(50, 1.0), x, y;
    Rng rng(18);
    for (int i = 0; i < 50; ++i) {
      x.push_back(rng.normal());
      y.push_back(rng.normal());
    }
    const MockDataset iv_data = make_dataset(
        {num_col("instrument", z), num_col("treatment", x), num_col("outcome", y)});
    const ExecutionResult r = execute_tool(iv_call(), iv_data);
    REQUIRE_FALSE(r.ok());
    CHECK(r.failure->kind == "statistical");
    CHECK(r.failure->code == "RankDeficient");
  }
}

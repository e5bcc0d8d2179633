#include <doctest.h>

#include <numeric>

#include "strides/simulate.hpp"

using namespace strides;

namespace {

double arm_mean(const MockDataset& d, double treat, double post) {
  const Column* y = d.find("outcome");
  const Column* g = d.find("treatment_intensity");
  const Column* p = d.find("post_policy");
  double sum = 0.0;
  int n = 0;
  for (long i = 0; i < d.n_rows; ++i) {
    if (g->nums[i] == treat && p->nums[i] == post) {
      sum += y->nums[i];
      ++n;
    }
  }
  return sum / n;
}

}  // namespace

TEST_CASE("simulate is a pure function of (family, params, seed)") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  const std::string a = to_csv(simulate(cfg, 123));
  const std::string b = to_csv(simulate(cfg, 123));
  CHECK(a == b);
  CHECK(a != to_csv(simulate(cfg, 124)));
}

TEST_CASE("default DiD dataset honors the mock-data contract") {
  const MockDataset d = simulate(DgpConfig{}, 42);
  CHECK(d.n_rows == 300);
  CHECK(d.n_rows >= 200);
  CHECK(d.n_rows <= 500);
  REQUIRE(d.find("treatment_intensity"));
  REQUIRE(d.find("post_policy"));
  for (const auto& c : d.columns) CHECK(c.size() == static_cast<std::size_t>(d.n_rows));

  const ColumnSchema schema = describe_schema(d);
  for (const auto& e : schema.entries) {
    if (e.name == "post_policy" || e.name == "treatment_intensity")
      CHECK(e.kind == ColumnSchema::Kind::Binary);
    if (e.name == "unit") CHECK(e.kind == ColumnSchema::Kind::Categorical);
    if (e.name == "outcome") CHECK(e.kind == ColumnSchema::Kind::Numeric);
  }
}

TEST_CASE("noiseless DiD double difference equals the injected effect") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  cfg.effect = 2.0;
  cfg.noise_sd = 0.0;
  const MockDataset d = simulate(cfg, 7);
  const double dd = (arm_mean(d, 1, 1) - arm_mean(d, 1, 0)) -
                    (arm_mean(d, 0, 1) - arm_mean(d, 0, 0));
  CHECK(dd == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("other families emit their role columns inside the row band") {
  DgpConfig iv;
  iv.family = ModelType::IV;
  const MockDataset div = simulate(iv, 1);
  CHECK(div.find("instrument"));
  CHECK(div.n_rows == 400);

  DgpConfig rd;
  rd.family = ModelType::RD;
  const MockDataset drd = simulate(rd, 1);
  CHECK(drd.find("running"));

  DgpConfig scm;
  scm.family = ModelType::SCM;
  const MockDataset dscm = simulate(scm, 1);
  CHECK(dscm.find("treated"));
  CHECK(dscm.n_rows == 21 * 12);
  CHECK(dscm.n_rows >= 200);
  CHECK(dscm.n_rows <= 500);

  DgpConfig psm;
  psm.family = ModelType::PSM;
  const MockDataset dpsm = simulate(psm, 1);
  const ColumnSchema schema = describe_schema(dpsm);
  int numeric_covs = 0;
  for (const auto& e : schema.entries)
    if (e.name[0] == 'x' && e.kind == ColumnSchema::Kind::Numeric) ++numeric_covs;
  CHECK(numeric_covs == 3);
}

TEST_CASE("parameter validation") {
  SUBCASE("SCM needs three donors") {
    DgpConfig cfg;
    cfg.family = ModelType::SCM;
    cfg.n_donors = 2;
    CHECK_THROWS_WITH_AS(simulate(cfg, 1), doctest::Contains("InvalidParams"), Error);
  }
  SUBCASE("negative noise") {
    DgpConfig cfg;
    cfg.noise_sd = -1.0;
    CHECK_THROWS_AS(simulate(cfg, 1), Error);
  }
  SUBCASE("DiD needs two units per arm") {
    DgpConfig cfg;
    cfg.family = ModelType::DiD;
    cfg.n_units = 3;
    CHECK_THROWS_AS(simulate(cfg, 1), Error);
  }
  SUBCASE("direction must match the effect sign") {
    DgpConfig cfg;
    cfg.effect = 2.0;
    cfg.direction = Direction::Negative;
    CHECK_THROWS_AS(simulate(cfg, 1), Error);
  }
  SUBCASE("direction defaults to the effect sign") {
    DgpConfig cfg;
    cfg.effect = -1.0;
    CHECK(simulate(cfg, 1).truth.direction == Direction::Negative);
  }
}

TEST_CASE("truth records the realized parameters") {
  DgpConfig cfg;
  cfg.family = ModelType::IV;
  cfg.effect = 1.5;
  cfg.instrument_strength = 0.4;
  const MockDataset d = simulate(cfg, 9);
  CHECK(d.truth.family == ModelType::IV);
  CHECK(d.truth.true_effect == 1.5);
  CHECK(d.truth.nuisance.at("instrument_strength") == 0.4);
  CHECK(d.seed == 9);

  const auto j = truth_to_json(d.truth);
  CHECK(j["family"] == "IV");
}

TEST_CASE("CSV export is RFC 4180 shaped") {
  DgpConfig cfg;
  cfg.family = ModelType::DiD;
  cfg.n_units = 4;
  cfg.n_periods = 2;
  const std::string csv = to_csv(simulate(cfg, 3));
  CHECK(csv.substr(0, csv.find("\r\n")) ==
        "unit,year,treatment_intensity,post_policy,outcome");
  // every line terminated by CRLF, 1 header + 8 rows
  std::size_t lines = 0, pos = 0;
  while ((pos = csv.find("\r\n", pos)) != std::string::npos) {
    ++lines;
    pos += 2;
  }
  CHECK(lines == 9);
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strides/schema.hpp"

namespace strides {

struct DgpTruth {
  ModelType family = ModelType::DiD;
  double true_effect = 0.0;
  Direction direction = Direction::Positive;
  // Every realized parameter of the draw (noise_sd, pre_trend_gap,
  // instrument_strength, cutoff, ...) so tests and the critic can see exactly
  // what was injected.
  std::map<std::string, double> nuisance;
};

// Parameters for one draw: the truth to inject plus family-specific sizes.
struct DgpConfig {
  ModelType family = ModelType::DiD;
  double effect = 2.0;
  std::optional<Direction> direction;  // defaults to sign(effect)
  double noise_sd = 1.0;

  // DiD panel
  int n_units = 30;
  int n_periods = 10;
  double pre_trend_gap = 0.0;

  // IV / RD / PSM cross-sections
  int n_rows = 400;
  double instrument_strength = 0.5;  // pi in x = pi*z + u
  double latent_corr = 0.5;          // corr(u, v) through the shared shock
  double cutoff = 0.0;               // RD threshold on the running variable
  double slope = 1.0;                // RD baseline slope
  int n_covariates = 3;              // PSM
  double propensity_strength = 0.5;  // PSM logit coefficient on each covariate
  double outcome_beta = 0.5;         // PSM outcome coefficient on each covariate
  bool twin_pairs = false;           // PSM: exact-twin matched design

  // SCM panel (n_pre + n_post periods, n_donors + 1 units)
  int n_donors = 20;
  int n_pre = 8;
  int n_post = 4;
};

struct Column {
  enum class Storage { Numeric, Categorical };
  std::string name;
  Storage storage = Storage::Numeric;
  std::vector<double> nums;
  std::vector<std::string> cats;

  std::size_t size() const {
    return storage == Storage::Numeric ? nums.size() : cats.size();
  }
};

struct MockDataset {
  std::vector<Column> columns;
  long n_rows = 0;
  std::uint64_t seed = 0;
  DgpTruth truth;

  const Column* find(const std::string& name) const;
};

struct ColumnSchema {
  enum class Kind { Numeric, Binary, Categorical };
  struct Entry {
    std::string name;
    Kind kind;
  };
  std::vector<Entry> entries;

  bool contains(const std::string& name) const;
};

const char* to_string(ColumnSchema::Kind k);

// Pure function of (config, seed): same inputs give byte-identical data.
// Throws Error("InvalidParams") on inconsistent parameters.
MockDataset simulate(const DgpConfig& config, std::uint64_t seed);

ColumnSchema describe_schema(const MockDataset& data);

// RFC 4180 CSV with a header row (CRLF line endings, quoting only when needed).
void write_csv(const MockDataset& data, std::ostream& out);
std::string to_csv(const MockDataset& data);

// Sidecar record of the injected truth, for test fixtures.
nlohmann::ordered_json truth_to_json(const DgpTruth& truth);

}  // namespace strides

#include "strides/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "strides/rng.hpp"

namespace strides {

namespace {

std::string format_number(double v) {
  // Shortest exact round-trip representation; keeps CSV output byte-stable.
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

Column numeric(std::string name) {
  Column c;
  c.name = std::move(name);
  c.storage = Column::Storage::Numeric;
  return c;
}

Column categorical(std::string name) {
  Column c;
  c.name = std::move(name);
  c.storage = Column::Storage::Categorical;
  return c;
}

std::string unit_tag(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
  return buf;
}

Direction effective_direction(const DgpConfig& cfg) {
  if (cfg.direction) {
    if (cfg.effect != 0.0) {
      const bool positive = cfg.effect > 0.0;
      if (positive != (*cfg.direction == Direction::Positive))
        throw Error("InvalidParams", "direction contradicts sign of effect");
    }
    return *cfg.direction;
  }
  return cfg.effect < 0.0 ? Direction::Negative : Direction::Positive;
}

void check_common(const DgpConfig& cfg) {
  if (cfg.noise_sd < 0.0) throw Error("InvalidParams", "noise_sd < 0");
}

MockDataset simulate_did(const DgpConfig& cfg, Rng& rng) {
  const int units = cfg.n_units;
  const int periods = cfg.n_periods;
  if (units < 4) throw Error("InvalidParams", "DiD needs >=2 units per arm");
  if (periods < 2) throw Error("InvalidParams", "DiD needs >=2 periods");

  const int treated_units = units / 2;
  const int first_post = periods / 2;  // period indices >= first_post are post
  const int base_year = 2011;

  std::vector<double> alpha(units), gamma(periods);
  for (auto& a : alpha) a = rng.normal(0.0, 1.0);
  for (auto& g : gamma) g = rng.normal(0.0, 0.5);

  MockDataset data;
  Column unit = categorical("unit");
  Column year = numeric("year");
  Column treat = numeric("treatment_intensity");
  Column post = numeric("post_policy");
  Column outcome = numeric("outcome");

  for (int u = 0; u < units; ++u) {
    const bool is_treated = u < treated_units;
    for (int t = 0; t < periods; ++t) {
      const bool is_post = t >= first_post;
      double y = alpha[u] + gamma[t];
      // Divergent trend relative to the policy date; zero gap keeps the arms
      // parallel in expectation.
      y += cfg.pre_trend_gap * (is_treated ? 1.0 : 0.0) * (t - first_post);
      y += cfg.effect * (is_treated && is_post ? 1.0 : 0.0);
      y += cfg.noise_sd * rng.normal();
      unit.cats.push_back(unit_tag("U", u + 1));
      year.nums.push_back(base_year + t);
      treat.nums.push_back(is_treated ? 1.0 : 0.0);
      post.nums.push_back(is_post ? 1.0 : 0.0);
      outcome.nums.push_back(y);
    }
  }
  data.columns = {unit, year, treat, post, outcome};
  data.n_rows = static_cast<long>(units) * periods;
  data.truth.nuisance["pre_trend_gap"] = cfg.pre_trend_gap;
  data.truth.nuisance["n_units"] = units;
  data.truth.nuisance["n_periods"] = periods;
  return data;
}

MockDataset simulate_iv(const DgpConfig& cfg, Rng& rng) {
  const int n = cfg.n_rows;
  if (n < 10) throw Error("InvalidParams", "IV needs >=10 rows");
  const double rho = cfg.latent_corr;
  if (rho < 0.0 || rho > 1.0) throw Error("InvalidParams", "latent_corr outside [0,1]");
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);

  Column z = numeric("instrument");
  Column x = numeric("treatment");
  Column y = numeric("outcome");
  for (int i = 0; i < n; ++i) {
    const double zi = rng.normal();
    const double shared = rng.normal();
    const double u = cfg.noise_sd * (a * shared + b * rng.normal());
    const double v = cfg.noise_sd * (a * shared + b * rng.normal());
    const double xi = cfg.instrument_strength * zi + u;
    const double yi = cfg.effect * xi + v;
    z.nums.push_back(zi);
    x.nums.push_back(xi);
    y.nums.push_back(yi);
  }
  MockDataset data;
  data.columns = {z, x, y};
  data.n_rows = n;
  data.truth.nuisance["instrument_strength"] = cfg.instrument_strength;
  data.truth.nuisance["latent_corr"] = rho;
  return data;
}

MockDataset simulate_rd(const DgpConfig& cfg, Rng& rng) {
  const int n = cfg.n_rows;
  if (n < 10) throw Error("InvalidParams", "RD needs >=10 rows");

  Column running = numeric("running");
  Column y = numeric("outcome");
  int left = 0, right = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0) + cfg.cutoff;
    const bool above = x >= cfg.cutoff;
    (above ? right : left)++;
    const double yi = 1.0 + cfg.slope * (x - cfg.cutoff) +
                      cfg.effect * (above ? 1.0 : 0.0) +
                      cfg.noise_sd * rng.normal();
    running.nums.push_back(x);
    y.nums.push_back(yi);
  }
  if (left == 0 || right == 0)
    throw Error("InvalidParams", "RD draw left one side of the cutoff empty");
  MockDataset data;
  data.columns = {running, y};
  data.n_rows = n;
  data.truth.nuisance["cutoff"] = cfg.cutoff;
  data.truth.nuisance["slope"] = cfg.slope;
  return data;
}

MockDataset simulate_scm(const DgpConfig& cfg, Rng& rng) {
  const int donors = cfg.n_donors;
  const int pre = cfg.n_pre;
  const int post = cfg.n_post;
  if (donors < 3) throw Error("InvalidParams", "SCM needs >=3 donors");
  if (pre < 3) throw Error("InvalidParams", "SCM needs >=3 pre-periods");
  if (post < 1) throw Error("InvalidParams", "SCM needs >=1 post-period");
  const int periods = pre + post;

  // Donor paths: idiosyncratic level + trend + texture.
  std::vector<std::vector<double>> donor_path(donors, std::vector<double>(periods));
  for (int j = 0; j < donors; ++j) {
    const double level = rng.normal(0.0, 1.0);
    const double trend = rng.normal(0.0, 0.5);
    for (int t = 0; t < periods; ++t)
      donor_path[j][t] = level + trend * (t / static_cast<double>(periods)) +
                         0.3 * rng.normal();
  }
  // True weights on the simplex (exponential draws, normalized).
  std::vector<double> w(donors);
  double wsum = 0.0;
  for (auto& wi : w) {
    wi = -std::log(1.0 - rng.uniform());
    wsum += wi;
  }
  for (auto& wi : w) wi /= wsum;

  Column unit = categorical("unit");
  Column year = numeric("year");
  Column treated = numeric("treated");
  Column outcome = numeric("outcome");
  for (int j = 0; j < donors; ++j) {
    for (int t = 0; t < periods; ++t) {
      unit.cats.push_back(unit_tag("D", j + 1));
      year.nums.push_back(t + 1);
      treated.nums.push_back(0.0);
      outcome.nums.push_back(donor_path[j][t]);
    }
  }
  for (int t = 0; t < periods; ++t) {
    double y = 0.0;
    for (int j = 0; j < donors; ++j) y += w[j] * donor_path[j][t];
    const bool is_post = t >= pre;
    y += cfg.effect * (is_post ? 1.0 : 0.0) + cfg.noise_sd * rng.normal();
    unit.cats.push_back("treated");
    year.nums.push_back(t + 1);
    treated.nums.push_back(is_post ? 1.0 : 0.0);
    outcome.nums.push_back(y);
  }
  MockDataset data;
  data.columns = {unit, year, treated, outcome};
  data.n_rows = static_cast<long>(donors + 1) * periods;
  data.truth.nuisance["n_donors"] = donors;
  data.truth.nuisance["n_pre"] = pre;
  data.truth.nuisance["n_post"] = post;
  for (int j = 0; j < donors; ++j)
    data.truth.nuisance["w" + std::to_string(j + 1)] = w[j];
  return data;
}

MockDataset simulate_psm(const DgpConfig& cfg, Rng& rng) {
  const int n = cfg.n_rows;
  const int k = cfg.n_covariates;
  if (n < 10) throw Error("InvalidParams", "PSM needs >=10 rows");
  if (k < 1) throw Error("InvalidParams", "PSM needs >=1 covariate");

  std::vector<Column> covs;
  for (int j = 0; j < k; ++j) covs.push_back(numeric("x" + std::to_string(j + 1)));
  Column treat = numeric("treatment");
  Column y = numeric("outcome");

  auto outcome_of = [&](const std::vector<double>& x, double t) {
    double v = cfg.effect * t;
    for (int j = 0; j < k; ++j) v += cfg.outcome_beta * x[j];
    return v + cfg.noise_sd * rng.normal();
  };

  if (cfg.twin_pairs) {
    // Each treated row gets an identical-covariate control twin.
    const int pairs = n / 2;
    for (int p = 0; p < pairs; ++p) {
      std::vector<double> x(k);
      for (auto& xj : x) xj = rng.normal();
      for (int arm = 0; arm < 2; ++arm) {
        const double t = arm == 0 ? 1.0 : 0.0;
        for (int j = 0; j < k; ++j) covs[j].nums.push_back(x[j]);
        treat.nums.push_back(t);
        y.nums.push_back(outcome_of(x, t));
      }
    }
  } else {
    int treated_count = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> x(k);
      for (auto& xj : x) xj = rng.normal();
      double logit = 0.0;
      for (int j = 0; j < k; ++j) logit += cfg.propensity_strength * x[j];
      const double p = 1.0 / (1.0 + std::exp(-logit));
      const double t = rng.bernoulli(p) ? 1.0 : 0.0;
      treated_count += t > 0.5 ? 1 : 0;
      for (int j = 0; j < k; ++j) covs[j].nums.push_back(x[j]);
      treat.nums.push_back(t);
      y.nums.push_back(outcome_of(x, t));
    }
    if (treated_count == 0 || treated_count == n)
      throw Error("InvalidParams", "PSM draw produced an empty arm");
  }

  MockDataset data;
  data.columns = covs;
  data.columns.push_back(treat);
  data.columns.push_back(y);
  data.n_rows = cfg.twin_pairs ? (n / 2) * 2 : n;
  data.truth.nuisance["n_covariates"] = k;
  data.truth.nuisance["propensity_strength"] = cfg.propensity_strength;
  data.truth.nuisance["outcome_beta"] = cfg.outcome_beta;
  data.truth.nuisance["twin_pairs"] = cfg.twin_pairs ? 1.0 : 0.0;
  return data;
}

}  // namespace

const Column* MockDataset::find(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

bool ColumnSchema::contains(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const Entry& e) { return e.name == name; });
}

const char* to_string(ColumnSchema::Kind k) {
  switch (k) {
    case ColumnSchema::Kind::Numeric: return "numeric";
    case ColumnSchema::Kind::Binary: return "binary";
    case ColumnSchema::Kind::Categorical: return "categorical";
  }
  return "?";
}

MockDataset simulate(const DgpConfig& config, std::uint64_t seed) {
  check_common(config);
  const Direction dir = effective_direction(config);
  Rng rng = Rng::derive(seed, std::string("dgp/") + to_string(config.family));

  MockDataset data;
  switch (config.family) {
    case ModelType::DiD: data = simulate_did(config, rng); break;
    case ModelType::IV: data = simulate_iv(config, rng); break;
    case ModelType::RD: data = simulate_rd(config, rng); break;
    case ModelType::SCM: data = simulate_scm(config, rng); break;
    case ModelType::PSM: data = simulate_psm(config, rng); break;
  }
  data.seed = seed;
  data.truth.family = config.family;
  data.truth.true_effect = config.effect;
  data.truth.direction = dir;
  data.truth.nuisance["noise_sd"] = config.noise_sd;
  return data;
}

ColumnSchema describe_schema(const MockDataset& data) {
  ColumnSchema schema;
  for (const auto& c : data.columns) {
    ColumnSchema::Entry e;
    e.name = c.name;
    if (c.storage == Column::Storage::Categorical) {
      e.kind = ColumnSchema::Kind::Categorical;
    } else {
      const bool binary = std::all_of(c.nums.begin(), c.nums.end(), [](double v) {
        return v == 0.0 || v == 1.0;
      });
      e.kind = binary ? ColumnSchema::Kind::Binary : ColumnSchema::Kind::Numeric;
    }
    schema.entries.push_back(std::move(e));
  }
  return schema;
}

void write_csv(const MockDataset& data, std::ostream& out) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  for (std::size_t i = 0; i < data.columns.size(); ++i) {
    if (i) out << ',';
    out << quote(data.columns[i].name);
  }
  out << "\r\n";
  for (long r = 0; r < data.n_rows; ++r) {
    for (std::size_t i = 0; i < data.columns.size(); ++i) {
      if (i) out << ',';
      const Column& c = data.columns[i];
      if (c.storage == Column::Storage::Numeric) {
        out << format_number(c.nums[static_cast<std::size_t>(r)]);
      } else {
        out << quote(c.cats[static_cast<std::size_t>(r)]);
      }
    }
    out << "\r\n";
  }
}

std::string to_csv(const MockDataset& data) {
  std::ostringstream ss;
  write_csv(data, ss);
  return ss.str();
}

nlohmann::ordered_json truth_to_json(const DgpTruth& truth) {
  nlohmann::ordered_json j;
  j["family"] = to_string(truth.family);
  j["true_effect"] = truth.true_effect;
  j["direction"] = to_string(truth.direction);
  j["nuisance"] = truth.nuisance;
  return j;
}

}  // namespace strides

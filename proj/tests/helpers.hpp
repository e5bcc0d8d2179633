#pragma once

#include <string>
#include <vector>

#include "strides/backend.hpp"
#include "strides/simulate.hpp"
#include "strides/toolcall.hpp"

namespace strides::testing {

inline Column num_col(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.storage = Column::Storage::Numeric;
  c.nums = std::move(values);
  return c;
}

inline Column cat_col(std::string name, std::vector<std::string> values) {
  Column c;
  c.name = std::move(name);
  c.storage = Column::Storage::Categorical;
  c.cats = std::move(values);
  return c;
}

inline MockDataset make_dataset(std::vector<Column> columns) {
  MockDataset d;
  d.columns = std::move(columns);
  d.n_rows = static_cast<long>(d.columns.empty() ? 0 : d.columns[0].size());
  return d;
}

inline ToolCall did_call() {
  ToolCall call;
  call.tool = ModelType::DiD;
  call.column_map = {{"dependent", "outcome"},
                     {"treatment", "treatment_intensity"},
                     {"time", "post_policy"},
                     {"unit", "unit"},
                     {"period", "year"}};
  return call;
}

inline ToolCall iv_call() {
  ToolCall call;
  call.tool = ModelType::IV;
  call.column_map = {{"dependent", "outcome"},
                     {"treatment", "treatment"},
                     {"instrument", "instrument"}};
  return call;
}

inline ToolCall rd_call(double cutoff = 0.0) {
  ToolCall call;
  call.tool = ModelType::RD;
  call.column_map = {{"dependent", "outcome"}, {"running", "running"}};
  call.options["cutoff"] = cutoff;
  return call;
}

inline ToolCall scm_call() {
  ToolCall call;
  call.tool = ModelType::SCM;
  call.column_map = {{"dependent", "outcome"},
                     {"unit", "unit"},
                     {"time", "year"},
                     {"treated_unit", "treated"}};
  return call;
}

inline ToolCall psm_call(const std::string& covs = "x1,x2,x3") {
  ToolCall call;
  call.tool = ModelType::PSM;
  call.column_map = {{"dependent", "outcome"},
                     {"treatment", "treatment"},
                     {"covariates", covs}};
  return call;
}

// Builds a replay backend from (role, reply) pairs in consumption order.
inline MockBackend scripted(const std::vector<std::pair<std::string, std::string>>& replies) {
  Transcript t;
  for (const auto& [role, text] : replies) t.add(role, text, 100, 50);
  return MockBackend(std::move(t));
}

}  // namespace strides::testing

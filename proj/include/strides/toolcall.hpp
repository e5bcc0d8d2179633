#pragma once

#include <map>
#include <string>
#include <vector>

#include "strides/schema.hpp"
#include "strides/simulate.hpp"

namespace strides {

// Structured estimator invocation: the analysis step emits one of these
// instead of generated code. column_map binds semantic roles (dependent,
// treatment, time, unit, running, instrument, covariates, treated_unit,
// period) to dataset columns; options carries numeric knobs (cutoff,
// bandwidth, caliper).
//
// Role conventions per family:
//   DiD: dependent, treatment (0/1 group), time (0/1 post indicator), unit;
//        optional period (calendar time, enables the pre-trends test)
//   IV:  dependent, treatment, instrument
//   RD:  dependent, running; options.cutoff required, options.bandwidth
//        defaults to 0.5 * sd(running)
//   SCM: dependent, unit, time, treated_unit (0/1, set on the treated unit's
//        post-period rows)
//   PSM: dependent, treatment, covariates (comma-separated column list);
//        options.caliper defaults to 0.2 * sd(log-odds)
struct ToolCall {
  ModelType tool = ModelType::DiD;
  std::map<std::string, std::string> column_map;
  std::map<std::string, double> options;

  const std::string* column(const std::string& role) const {
    auto it = column_map.find(role);
    return it == column_map.end() ? nullptr : &it->second;
  }
  std::vector<std::string> covariate_columns() const;
};

// Role/column validation against a dataset schema.
// Throws Error("RoleMissing") or Error("ColumnMiss").
void validate_tool_call(const ToolCall& call, const ColumnSchema& schema);

}  // namespace strides

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace strides {

// Shared error type. `code` carries the machine-readable failure class
// ("MissingField", "UnknownModelType", "TranscriptMiss", ...) so callers can
// branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// The five estimator families the rubric scores. Anything else is rejected by
// normalize_model_type rather than becoming a sixth variant.
enum class ModelType { DiD, IV, RD, SCM, PSM };

constexpr int kModelTypeCount = 5;

const char* to_string(ModelType t);
const char* long_name(ModelType t);

// Maps a surface label ("Difference-in-Differences", "2SLS", "rdd", ...) to
// its family. Case- and punctuation-insensitive over a fixed alias table;
// throws Error("UnknownModelType") for everything outside it.
ModelType normalize_model_type(const std::string& label);
std::optional<ModelType> try_normalize_model_type(const std::string& label);

// Model type as it appeared in a record plus the resolved family (absent when
// the label is not one of the five, e.g. "Causal Forest").
struct ModelLabel {
  std::string raw;
  std::optional<ModelType> family;

  static ModelLabel of(std::string label);
  static ModelLabel of(ModelType t);
  bool operator==(const ModelLabel&) const = default;
};

struct PolicyMetadata {
  std::string policy_name;
  std::string policy_type;
  std::string country_region;
  std::string observed_period;
  std::string implementation_time;
  std::string aim;
  std::string dataset_description;

  bool operator==(const PolicyMetadata&) const = default;
};

struct GroupSpec {
  std::string treatment;
  std::string control;

  bool operator==(const GroupSpec&) const = default;
};

struct CausalDesign {
  ModelLabel model_type;
  std::string reasons;
  std::string core_independent_variable;
  std::vector<std::string> control_variables;
  std::optional<std::string> instrumental_variable;  // nullopt == absent-marked
  GroupSpec group;
  std::string model_significance;
  std::string dependent_variable;
  std::string explanation;

  bool operator==(const CausalDesign&) const = default;
};

enum class Direction { Positive, Negative };

const char* to_string(Direction d);
Direction direction_from_string(const std::string& s);  // Error("BadDirection")

struct Hypothesis {
  std::string id;
  std::string statement;
  std::string mechanism;
  Direction expected_direction = Direction::Positive;

  bool operator==(const Hypothesis&) const = default;
};

struct HypothesisSet {
  std::string theoretical_framework;
  std::vector<Hypothesis> hypotheses;

  bool operator==(const HypothesisSet&) const = default;
};

enum class Split { Test, Legacy };

struct BenchInstance {
  PolicyMetadata metadata;
  CausalDesign ground_truth;
  std::string instance_id;
  Split split = Split::Test;
  // Unknown fields ("Model", "Model parameter", ...) survive round trips but
  // are never graded.
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();
};

struct Violation {
  std::string code;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const;
};

// One serialized record (a JSON line) -> BenchInstance.
// Throws Error("MalformedRecord") on broken JSON, Error("MissingField") when
// policy_name/aim are absent or empty.
BenchInstance parse_instance(const std::string& raw);
std::string serialize_instance(const BenchInstance& inst);

// Design <-> JSON under the benchmark's field names ("Model type",
// "Core independent variable", ...). Parsing is tolerant about the shapes
// real records use (string vs. object vs. array) and canonicalizes.
CausalDesign design_from_json(const nlohmann::json& j);
nlohmann::ordered_json design_to_json(const CausalDesign& d);

ValidationReport validate_design(const CausalDesign& design);
ValidationReport validate_hypotheses(const HypothesisSet& hyp);

// Lowercase, trim, collapse interior whitespace. The comparison key for
// duplicate-control detection.
std::string normalize_term(const std::string& s);

}  // namespace strides

#include "strides/schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace strides {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string strip_parentheticals(const std::string& s) {
  std::string out;
  int depth = 0;
  for (const char c : s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (depth > 0) --depth;
    } else if (depth == 0) {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> alpha_tokens(const std::string& s) {
  std::vector<std::string> toks;
  std::string cur;
  for (const char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      toks.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Alias table over normalized token sequences. Whole-sequence match only;
// "Causal Forest / Double Machine Learning" must not sneak in via substrings.
const std::map<std::string, ModelType>& alias_table() {
  static const std::map<std::string, ModelType> table = {
      {"did", ModelType::DiD},
      {"difference in differences", ModelType::DiD},
      {"difference in difference", ModelType::DiD},
      {"differences in differences", ModelType::DiD},
      {"diff in diff", ModelType::DiD},
      {"two way fixed effects difference in differences", ModelType::DiD},
      {"iv", ModelType::IV},
      {"instrumental variable", ModelType::IV},
      {"instrumental variables", ModelType::IV},
      {"two stage least squares", ModelType::IV},
      {"two stage least squares instrumental variable", ModelType::IV},
      {"two stage least squares instrumental variables", ModelType::IV},
      {"2sls", ModelType::IV},
      {"tsls", ModelType::IV},
      {"rd", ModelType::RD},
      {"rdd", ModelType::RD},
      {"regression discontinuity", ModelType::RD},
      {"sharp regression discontinuity", ModelType::RD},
      {"fuzzy regression discontinuity", ModelType::RD},
      {"scm", ModelType::SCM},
      {"synthetic control", ModelType::SCM},
      {"synthetic control method", ModelType::SCM},
      {"psm", ModelType::PSM},
      {"propensity score matching", ModelType::PSM},
      {"propensity matching", ModelType::PSM},
  };
  return table;
}

const char* field_policy_name = "Policy name";
const char* field_policy_type = "Policy type";
const char* field_region = "Country/Region";
const char* field_period = "Observed period";
const char* field_impl = "Implementation time";
const char* field_aim = "Aim";
const char* field_dataset = "Dataset";
const char* field_model_type = "Model type";
const char* field_reasons = "Reasons for choosing this model";
const char* field_core_iv = "Core independent variable";
const char* field_controls = "Control variables";
const char* field_instrument = "Instrumental variable";
const char* field_group = "Group";
const char* field_significance = "Model Significance";
const char* field_dependent = "Dependent variable";
const char* field_explanation = "Explanation";

const std::set<std::string>& known_fields() {
  static const std::set<std::string> fields = {
      "instance_id",  "split",          field_policy_name, field_policy_type,
      field_region,   field_period,     field_impl,        field_aim,
      field_dataset,  field_model_type, field_reasons,     field_core_iv,
      field_controls, field_instrument, field_group,       field_significance,
      field_dependent, field_explanation};
  return fields;
}

std::string text_of(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_object()) {
    // Objects collapse to "key: value" lines; keeps nested record shapes
    // usable as plain text.
    std::string out;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!out.empty()) out += "; ";
      out += it.key() + ": " + text_of(it.value());
    }
    return out;
  }
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += "; ";
      out += text_of(e);
    }
    return out;
  }
  return v.dump();
}

std::string get_text(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return "";
  return text_of(*it);
}

bool is_absent_marker(const std::string& s) {
  static const std::set<std::string> markers = {"",     "null",           "none",
                                                "n/a",  "not applicable", "na",
                                                "nil",  "not available"};
  return markers.count(normalize_term(s)) > 0;
}

std::vector<std::string> parse_controls(const json& v) {
  std::vector<std::string> out;
  if (v.is_null()) return out;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (e.is_string()) {
        if (!e.get<std::string>().empty()) out.push_back(e.get<std::string>());
      } else if (e.is_object()) {
        if (e.contains("name") && e["name"].is_string()) {
          out.push_back(e["name"].get<std::string>());
        } else {
          out.push_back(text_of(e));
        }
      } else {
        out.push_back(text_of(e));
      }
    }
    return out;
  }
  if (v.is_string()) {
    // Free-text lists split on semicolons, newlines, or commas.
    const std::string s = v.get<std::string>();
    std::string cur;
    auto flush = [&] {
      // trim
      std::size_t b = cur.find_first_not_of(" \t\r\n-");
      std::size_t e = cur.find_last_not_of(" \t\r\n");
      if (b != std::string::npos) {
        const std::string piece = cur.substr(b, e - b + 1);
        if (!piece.empty() && !is_absent_marker(piece)) out.push_back(piece);
      }
      cur.clear();
    };
    for (const char c : s) {
      if (c == ';' || c == '\n' || c == ',') {
        flush();
      } else {
        cur.push_back(c);
      }
    }
    flush();
    return out;
  }
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) out.push_back(it.key());
  }
  return out;
}

GroupSpec parse_group(const json& v) {
  GroupSpec g;
  if (v.is_null()) return g;
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string key = lower(it.key());
      if (key.find("treatment") != std::string::npos &&
          key.find("control") == std::string::npos && g.treatment.empty()) {
        g.treatment = text_of(it.value());
      } else if (key.find("control") != std::string::npos &&
                 key.find("treatment") == std::string::npos && g.control.empty()) {
        g.control = text_of(it.value());
      }
    }
    if (!g.treatment.empty() || !g.control.empty()) {
      if (g.treatment.empty()) g.treatment = g.control;
      if (g.control.empty()) g.control = g.treatment;
      return g;
    }
    const std::string flat = text_of(v);
    g.treatment = flat;
    g.control = flat;
    return g;
  }
  const std::string s = text_of(v);
  // Canonical form "Treatment: ...; Control: ...".
  const std::string ls = lower(s);
  const std::size_t t_pos = ls.find("treatment");
  const std::size_t c_pos = ls.find("control");
  auto after_colon = [&](std::size_t from, std::size_t until) -> std::string {
    std::size_t colon = s.find(':', from);
    if (colon == std::string::npos || colon >= until) return "";
    std::size_t b = s.find_first_not_of(" \t", colon + 1);
    if (b == std::string::npos || b >= until) return "";
    std::size_t e = until;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) ||
                     s[e - 1] == ';'))
      --e;
    return s.substr(b, e - b);
  };
  if (t_pos != std::string::npos && c_pos != std::string::npos && t_pos < c_pos) {
    g.treatment = after_colon(t_pos, c_pos);
    g.control = after_colon(c_pos, s.size());
  }
  if (g.treatment.empty() && g.control.empty()) {
    g.treatment = s;
    g.control = s;
  } else {
    if (g.treatment.empty()) g.treatment = g.control;
    if (g.control.empty()) g.control = g.treatment;
  }
  return g;
}

std::optional<std::string> parse_instrument(const json& v) {
  if (v.is_null()) return std::nullopt;
  std::string s;
  if (v.is_object() && v.contains("name") && v["name"].is_string()) {
    s = v["name"].get<std::string>();
  } else {
    s = text_of(v);
  }
  if (is_absent_marker(s)) return std::nullopt;
  return s;
}

}  // namespace

const char* to_string(ModelType t) {
  switch (t) {
    case ModelType::DiD: return "DiD";
    case ModelType::IV: return "IV";
    case ModelType::RD: return "RD";
    case ModelType::SCM: return "SCM";
    case ModelType::PSM: return "PSM";
  }
  return "?";
}

const char* long_name(ModelType t) {
  switch (t) {
    case ModelType::DiD: return "Difference-in-Differences (DiD)";
    case ModelType::IV: return "Instrumental Variables (IV)";
    case ModelType::RD: return "Regression Discontinuity (RD)";
    case ModelType::SCM: return "Synthetic Control Method (SCM)";
    case ModelType::PSM: return "Propensity Score Matching (PSM)";
  }
  return "?";
}

std::optional<ModelType> try_normalize_model_type(const std::string& label) {
  // Parenthetical abbreviations ("Instrumental Variables (IV)") are dropped
  // first, then suffix filler ("... model", "... design") is trimmed.
  std::vector<std::string> toks = alpha_tokens(strip_parentheticals(label));
  static const std::set<std::string> filler = {"model", "method", "approach",
                                               "design", "analysis", "framework"};
  while (!toks.empty() && filler.count(toks.back())) toks.pop_back();
  if (toks.empty()) {
    // Label may have been only a parenthetical, e.g. "(DiD)".
    toks = alpha_tokens(label);
    while (!toks.empty() && filler.count(toks.back())) toks.pop_back();
  }
  if (toks.empty()) return std::nullopt;
  const auto& table = alias_table();
  auto it = table.find(join(toks));
  if (it != table.end()) return it->second;
  return std::nullopt;
}

ModelType normalize_model_type(const std::string& label) {
  if (label.empty()) throw Error("UnknownModelType", "empty model label");
  auto t = try_normalize_model_type(label);
  if (!t) throw Error("UnknownModelType", label);
  return *t;
}

ModelLabel ModelLabel::of(std::string label) {
  ModelLabel m;
  m.family = try_normalize_model_type(label);
  m.raw = std::move(label);
  return m;
}

ModelLabel ModelLabel::of(ModelType t) {
  ModelLabel m;
  m.raw = long_name(t);
  m.family = t;
  return m;
}

const char* to_string(Direction d) {
  return d == Direction::Positive ? "Positive" : "Negative";
}

Direction direction_from_string(const std::string& s) {
  const std::string n = normalize_term(s);
  if (n == "positive" || n == "pos" || n == "+") return Direction::Positive;
  if (n == "negative" || n == "neg" || n == "-") return Direction::Negative;
  throw Error("BadDirection", s);
}

std::string normalize_term(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (const char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

CausalDesign design_from_json(const json& j) {
  CausalDesign d;
  d.model_type = ModelLabel::of(get_text(j, field_model_type));
  d.reasons = get_text(j, field_reasons);
  d.core_independent_variable = get_text(j, field_core_iv);
  if (j.contains(field_controls)) d.control_variables = parse_controls(j[field_controls]);
  if (j.contains(field_instrument)) {
    d.instrumental_variable = parse_instrument(j[field_instrument]);
  }
  if (j.contains(field_group)) d.group = parse_group(j[field_group]);
  d.model_significance = get_text(j, field_significance);
  d.dependent_variable = get_text(j, field_dependent);
  d.explanation = get_text(j, field_explanation);
  return d;
}

ordered_json design_to_json(const CausalDesign& d) {
  ordered_json j;
  j[field_model_type] = d.model_type.raw;
  j[field_reasons] = d.reasons;
  j[field_core_iv] = d.core_independent_variable;
  j[field_controls] = d.control_variables;
  if (d.instrumental_variable) {
    j[field_instrument] = *d.instrumental_variable;
  } else {
    j[field_instrument] = nullptr;
  }
  j[field_group] = "Treatment: " + d.group.treatment + "; Control: " + d.group.control;
  j[field_significance] = d.model_significance;
  j[field_dependent] = d.dependent_variable;
  j[field_explanation] = d.explanation;
  return j;
}

BenchInstance parse_instance(const std::string& raw) {
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error("MalformedRecord", "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw Error("MalformedRecord", "record is not an object");

  BenchInstance inst;
  inst.metadata.policy_name = get_text(j, field_policy_name);
  inst.metadata.policy_type = get_text(j, field_policy_type);
  inst.metadata.country_region = get_text(j, field_region);
  inst.metadata.observed_period = get_text(j, field_period);
  inst.metadata.implementation_time = get_text(j, field_impl);
  inst.metadata.aim = get_text(j, field_aim);
  inst.metadata.dataset_description = get_text(j, field_dataset);
  if (inst.metadata.policy_name.empty()) throw Error("MissingField", "Policy name");
  if (inst.metadata.aim.empty()) throw Error("MissingField", "aim");

  inst.ground_truth = design_from_json(j);
  inst.instance_id = get_text(j, "instance_id");
  inst.split = normalize_term(get_text(j, "split")) == "legacy" ? Split::Legacy
                                                                : Split::Test;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known_fields().count(it.key())) inst.extras[it.key()] = it.value();
  }
  return inst;
}

std::string serialize_instance(const BenchInstance& inst) {
  ordered_json j;
  j["instance_id"] = inst.instance_id;
  j["split"] = inst.split == Split::Legacy ? "legacy" : "test";
  j[field_policy_name] = inst.metadata.policy_name;
  j[field_policy_type] = inst.metadata.policy_type;
  j[field_region] = inst.metadata.country_region;
  j[field_period] = inst.metadata.observed_period;
  j[field_impl] = inst.metadata.implementation_time;
  j[field_aim] = inst.metadata.aim;
  j[field_dataset] = inst.metadata.dataset_description;
  const ordered_json design = design_to_json(inst.ground_truth);
  for (auto it = design.begin(); it != design.end(); ++it) j[it.key()] = it.value();
  for (auto it = inst.extras.begin(); it != inst.extras.end(); ++it)
    j[it.key()] = it.value();
  return j.dump();
}

ValidationReport validate_design(const CausalDesign& design) {
  ValidationReport report;
  auto add = [&](std::string code, std::string detail) {
    report.violations.push_back({std::move(code), std::move(detail)});
  };

  if (!design.model_type.family) {
    add("unknown-model-type", design.model_type.raw);
  } else if (*design.model_type.family == ModelType::IV &&
             !design.instrumental_variable) {
    add("iv-required", "IV design without an instrumental variable");
  } else if (*design.model_type.family != ModelType::IV &&
             design.instrumental_variable) {
    add("iv-unexpected",
        "non-IV design names instrument '" + *design.instrumental_variable + "'");
  }

  if (design.group.treatment.empty()) add("empty-treatment-group", "");
  if (design.group.control.empty()) add("empty-control-group", "");
  if (design.dependent_variable.empty()) add("empty-dependent-variable", "");

  std::set<std::string> seen;
  for (const auto& c : design.control_variables) {
    const std::string key = normalize_term(c);
    if (!seen.insert(key).second) add("duplicate-control", c);
  }
  return report;
}

ValidationReport validate_hypotheses(const HypothesisSet& hyp) {
  ValidationReport report;
  if (hyp.hypotheses.empty())
    report.violations.push_back({"no-hypotheses", ""});
  if (hyp.hypotheses.size() > 2)
    report.warnings.push_back("more than 2 hypotheses (" +
                              std::to_string(hyp.hypotheses.size()) + ")");
  std::set<std::string> ids;
  for (const auto& h : hyp.hypotheses) {
    if (!ids.insert(h.id).second)
      report.violations.push_back({"duplicate-hypothesis-id", h.id});
    if (h.statement.empty())
      report.violations.push_back({"empty-hypothesis-statement", h.id});
  }
  return report;
}

}  // namespace strides

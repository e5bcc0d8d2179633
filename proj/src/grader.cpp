#include "strides/grader.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "strides/prompts.hpp"

namespace strides {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kFullThreshold = 0.8;
constexpr double kPartialThreshold = 0.4;

bool in_set(int v, std::initializer_list<int> allowed) {
  return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

int snap(int v, std::initializer_list<int> allowed) {
  // Nearest allowed value, biased downward on ties.
  int best = *allowed.begin();
  int best_d = std::abs(v - best);
  for (const int a : allowed) {
    const int d = std::abs(v - a);
    if (d < best_d || (d == best_d && a < best)) {
      best = a;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

namespace lexical {

namespace {

// Multiword phrases collapsed to one canonical token before tokenizing.
const std::vector<std::pair<std::string, std::string>>& phrase_aliases() {
  static const std::vector<std::pair<std::string, std::string>> aliases = {
      {"per capita gross domestic product", "gdp percapita"},
      {"gross domestic product per capita", "gdp percapita"},
      {"gdp per capita", "gdp percapita"},
      {"gross domestic product", "gdp"},
      {"research and development", "rnd"},
      {"r and d", "rnd"},
      {"foreign direct investment", "fdi"},
      {"intellectual property rights", "ipr"},
      {"intellectual property", "ipr"},
      {"science and technology", "scitech"},
      {"per capita", "percapita"},
  };
  return aliases;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "the", "a",  "an",  "of",  "in", "on",  "to",  "and", "or",
      "for", "by", "as",  "is",  "are", "at",  "with", "its", "be",
      "level", "rate", "ratio", "share", "index", "total", "degree",
      "measured", "annual", "annually", "value", "variable"};
  return words;
}

std::string basic_normalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (c == '&') {
      out += " and ";
    } else {
      out.push_back(' ');
    }
  }
  // collapse runs of spaces
  std::string collapsed;
  bool prev_space = true;
  for (const char c : out) {
    if (c == ' ') {
      if (!prev_space) collapsed.push_back(' ');
      prev_space = true;
    } else {
      collapsed.push_back(c);
      prev_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

std::string apply_aliases(std::string s) {
  s = " " + s + " ";
  for (const auto& [from, to] : phrase_aliases()) {
    const std::string needle = " " + from + " ";
    const std::string repl = " " + to + " ";
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
      s.replace(pos, needle.size(), repl);
      pos += repl.size();
    }
  }
  return s;
}

std::set<std::string> token_set(const std::string& raw) {
  const std::string s = apply_aliases(basic_normalize(raw));
  std::set<std::string> tokens;
  std::string cur;
  for (const char c : s) {
    if (c == ' ') {
      if (!cur.empty() && !stopwords().count(cur)) tokens.insert(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && !stopwords().count(cur)) tokens.insert(cur);
  return tokens;
}

}  // namespace

double overlap(const std::string& pred, const std::string& gt) {
  const std::set<std::string> gt_tokens = token_set(gt);
  if (gt_tokens.empty()) return 1.0;  // nothing to match is vacuous coverage
  const std::set<std::string> pred_tokens = token_set(pred);
  std::size_t hit = 0;
  for (const auto& t : gt_tokens)
    if (pred_tokens.count(t)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(gt_tokens.size());
}

Match match(const std::string& pred, const std::string& gt) {
  const double o = overlap(pred, gt);
  if (o >= kFullThreshold) return Match::Full;
  if (o >= kPartialThreshold) return Match::Partial;
  return Match::None;
}

}  // namespace lexical

ScoreBreakdown assemble_breakdown(int model_type, int core_iv, int group,
                                  int controls, int dependent, int reasoning,
                                  int explanation, std::string comments) {
  ScoreBreakdown b;
  b.model_type_score = snap(model_type, {0, 10});
  b.core_iv_score = snap(core_iv, {0, 5, 10});
  b.group_score = snap(group, {0, 5, 10});
  b.control_var_score = snap(controls, {0, 2, 5});
  b.dependent_var_score = snap(dependent, {0, 5});
  b.reasoning_score = snap(reasoning, {0, 2});
  b.explanation_score = snap(explanation, {0, 3});
  if (b.model_type_score == 0) b.reasoning_score = 0;  // gating rule
  b.total = b.model_type_score + b.core_iv_score + b.group_score +
            b.control_var_score + b.dependent_var_score + b.reasoning_score +
            b.explanation_score;
  b.normalized = static_cast<double>(b.total) / 45.0;
  b.comments = std::move(comments);
  return b;
}

namespace {

int score_from_match(lexical::Match m, int full, int partial) {
  switch (m) {
    case lexical::Match::Full: return full;
    case lexical::Match::Partial: return partial;
    case lexical::Match::None: return 0;
  }
  return 0;
}

int lexical_group_score(const CausalDesign& pred, const CausalDesign& gt) {
  const lexical::Match mt = lexical::match(pred.group.treatment, gt.group.treatment);
  const lexical::Match mc = lexical::match(pred.group.control, gt.group.control);
  if (mt == lexical::Match::Full && mc == lexical::Match::Full) return 10;
  if (mt == lexical::Match::None && mc == lexical::Match::None) return 0;
  return 5;
}

int lexical_controls_score(const CausalDesign& pred, const CausalDesign& gt) {
  if (gt.control_variables.empty()) return 5;  // vacuous full coverage
  std::size_t matched = 0;
  for (const auto& want : gt.control_variables) {
    const bool hit = std::any_of(
        pred.control_variables.begin(), pred.control_variables.end(),
        [&](const std::string& have) {
          return lexical::match(have, want) != lexical::Match::None;
        });
    if (hit) ++matched;
  }
  const double fraction =
      static_cast<double>(matched) / static_cast<double>(gt.control_variables.size());
  if (fraction > 0.5) return 5;
  if (fraction > 0.0) return 2;
  return 0;
}

ScoreBreakdown grade_lexical(const CausalDesign& pred, const CausalDesign& gt,
                             int model_type_score, std::string comments) {
  const int core_iv = score_from_match(
      lexical::match(pred.core_independent_variable, gt.core_independent_variable),
      10, 5);
  const int group = lexical_group_score(pred, gt);
  const int controls = lexical_controls_score(pred, gt);
  const int dependent =
      lexical::overlap(pred.dependent_variable, gt.dependent_variable) >=
              kPartialThreshold
          ? 5
          : 0;
  const int reasoning =
      lexical::overlap(pred.reasons, gt.reasons) >= kPartialThreshold ? 2 : 0;
  const int explanation =
      lexical::overlap(pred.explanation + " " + pred.model_significance,
                       gt.explanation + " " + gt.model_significance) >=
              kPartialThreshold
          ? 3
          : 0;
  return assemble_breakdown(model_type_score, core_iv, group, controls, dependent,
                            reasoning, explanation, std::move(comments));
}

int judge_component(const json& breakdown, const char* key,
                    std::initializer_list<int> allowed) {
  auto it = breakdown.find(key);
  if (it == breakdown.end() || !it->is_number())
    throw Error("JudgeParseFailure", std::string("missing component ") + key);
  const int v = static_cast<int>(std::llround(it->get<double>()));
  if (!in_set(v, allowed))
    throw Error("JudgeParseFailure",
                std::string(key) + " outside its point set: " + std::to_string(v));
  return v;
}

}  // namespace

ScoreBreakdown grade(const CausalDesign& pred, const CausalDesign& gt,
                     GradingMode mode, Backend* backend, const ExchangeSink& sink) {
  // Model type is pure arithmetic in both modes: family agreement or zero.
  const bool family_match = pred.model_type.family && gt.model_type.family &&
                            *pred.model_type.family == *gt.model_type.family;
  const int model_type_score = family_match ? 10 : 0;

  if (mode == GradingMode::Lexical)
    return grade_lexical(pred, gt, model_type_score, "");

  if (backend == nullptr)
    throw Error("JudgeParseFailure", "judge mode requires a backend");

  try {
    const std::string user = prompts::render(
        prompts::kGrader, {{"reference", design_to_json(gt).dump(2)},
                           {"prediction", design_to_json(pred).dump(2)}});
    const json reply =
        ask_structured(*backend, AgentConfig::defaults(AgentRole::Judge),
                       role_tag(AgentRole::Judge), "", user, sink);
    auto bd = reply.find("breakdown");
    if (bd == reply.end() || !bd->is_object())
      throw Error("JudgeParseFailure", "reply lacks a breakdown object");
    // Semantic components come from the judge; arithmetic and gating are
    // re-enforced locally by assemble_breakdown.
    const int core_iv = judge_component(*bd, "core_iv_score", {0, 5, 10});
    const int group = judge_component(*bd, "group_score", {0, 5, 10});
    const int controls = judge_component(*bd, "control_var_score", {0, 2, 5});
    const int dependent = judge_component(*bd, "dependent_var_score", {0, 5});
    const int reasoning = judge_component(*bd, "reasoning_score", {0, 2});
    const int explanation = judge_component(*bd, "explanation_score", {0, 3});
    std::string comments;
    if (reply.contains("comments") && reply["comments"].is_string())
      comments = reply["comments"].get<std::string>();
    return assemble_breakdown(model_type_score, core_iv, group, controls,
                              dependent, reasoning, explanation, comments);
  } catch (const Error& e) {
    if (e.code() == "TranscriptMiss" || e.code() == "AuthMissing" ||
        e.code() == "Exhausted")
      throw;
    return grade_lexical(pred, gt, model_type_score,
                         std::string("judge fallback to lexical: ") + e.what());
  }
}

double improve_pct(double direct_mean, double strides_mean) {
  if (direct_mean == 0.0) return 0.0;
  return (strides_mean - direct_mean) / direct_mean * 100.0;
}

std::string format_improve(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.1f%%", pct);
  return buf;
}

ReportTable aggregate(const std::vector<GradedRun>& records) {
  if (records.empty()) throw Error("EmptyInput", "aggregate over zero records");

  ReportTable table;
  table.total_records = static_cast<int>(records.size());

  struct Sum {
    double final_score = 0, model_type = 0, core_iv = 0, group = 0, controls = 0,
           dep = 0, reasoning = 0, explanation = 0;
    int n = 0;
  };
  std::map<std::string, Sum> sums;
  for (const auto& r : records) {
    Sum& s = sums[r.mode];
    s.final_score += r.score.normalized;
    s.model_type += r.score.model_type_score / 10.0;
    s.core_iv += r.score.core_iv_score / 10.0;
    s.group += r.score.group_score / 10.0;
    s.controls += r.score.control_var_score / 5.0;
    s.dep += r.score.dependent_var_score / 5.0;
    s.reasoning += r.score.reasoning_score / 2.0;
    s.explanation += r.score.explanation_score / 3.0;
    s.n += 1;
  }
  for (const auto& [mode, s] : sums) {
    ReportRow row;
    row.n = s.n;
    row.final_score = s.final_score / s.n;
    row.model_type = s.model_type / s.n;
    row.core_iv = s.core_iv / s.n;
    row.group_def = s.group / s.n;
    row.controls = s.controls / s.n;
    row.dep_var = s.dep / s.n;
    row.reasoning = s.reasoning / s.n;
    row.explanation = s.explanation / s.n;
    table.rows[mode] = row;
  }
  if (table.rows.count("strides") && table.rows.count("direct")) {
    table.improve_pct = improve_pct(table.rows["direct"].final_score,
                                    table.rows["strides"].final_score);
  }

  // Confusion and slice metrics over the verified pipeline when present,
  // otherwise over whatever single configuration was run.
  const std::string slice_mode = sums.count("strides") ? "strides" : records[0].mode;
  std::map<std::string, std::pair<int, int>> method_hits;  // family -> (hits, n)
  std::map<std::string, std::pair<double, int>> domain_scores;
  for (const auto& r : records) {
    if (r.mode != slice_mode) continue;
    if (r.gt_family) {
      const int g = static_cast<int>(*r.gt_family);
      if (r.pred_family) {
        table.confusion[static_cast<std::size_t>(g)]
                       [static_cast<std::size_t>(static_cast<int>(*r.pred_family))]++;
      } else {
        table.unclassified_predictions++;
      }
      auto& [hits, n] = method_hits[to_string(*r.gt_family)];
      hits += (r.pred_family && *r.pred_family == *r.gt_family) ? 1 : 0;
      n += 1;
    }
    const std::string domain = r.domain.empty() ? "unspecified" : r.domain;
    domain_scores[domain].first += r.score.normalized;
    domain_scores[domain].second += 1;
  }
  for (const auto& [family, hn] : method_hits)
    table.per_method_accuracy[family] =
        hn.second > 0 ? static_cast<double>(hn.first) / hn.second : 0.0;
  for (const auto& [domain, sn] : domain_scores)
    table.per_domain_score[domain] = sn.second > 0 ? sn.first / sn.second : 0.0;
  return table;
}

namespace {

const char* kMetricHeaders[] = {"Final Score", "Model Type", "Core IV",
                                "Group Def",   "Controls",   "Dep Var",
                                "Reasoning",   "Explanation"};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string render_report_text(const ReportTable& table) {
  std::ostringstream out;
  out << "Configuration        ";
  for (const char* h : kMetricHeaders) {
    out.width(13);
    out << std::right << h;
  }
  out << "\n";
  // strides first, then direct, then anything else.
  std::vector<std::string> order;
  if (table.rows.count("strides")) order.push_back("strides");
  if (table.rows.count("direct")) order.push_back("direct");
  for (const auto& [mode, row] : table.rows)
    if (std::find(order.begin(), order.end(), mode) == order.end())
      order.push_back(mode);

  for (const auto& mode : order) {
    const ReportRow& r = table.rows.at(mode);
    out << mode;
    for (std::size_t i = mode.size(); i < 21; ++i) out << ' ';
    const double vals[] = {r.final_score, r.model_type, r.core_iv, r.group_def,
                           r.controls,    r.dep_var,    r.reasoning, r.explanation};
    for (const double v : vals) {
      out.width(13);
      out << std::right << fixed3(v);
    }
    out << "\n";
  }
  if (table.improve_pct)
    out << "Improve: " << format_improve(*table.improve_pct) << "\n";

  out << "\nModel type confusion (rows = ground truth, cols = prediction)\n";
  out << "      ";
  for (int p = 0; p < kModelTypeCount; ++p) {
    out.width(6);
    out << std::right << to_string(static_cast<ModelType>(p));
  }
  out << "\n";
  for (int g = 0; g < kModelTypeCount; ++g) {
    out.width(6);
    out << std::left << to_string(static_cast<ModelType>(g));
    for (int p = 0; p < kModelTypeCount; ++p) {
      out.width(6);
      out << std::right
          << table.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    }
    out << "\n";
  }
  if (!table.per_method_accuracy.empty()) {
    out << "\nPer-method model-type accuracy\n";
    for (const auto& [family, acc] : table.per_method_accuracy)
      out << "  " << family << ": " << fixed3(acc) << "\n";
  }
  if (!table.per_domain_score.empty()) {
    out << "\nPer-domain final score\n";
    for (const auto& [domain, score] : table.per_domain_score)
      out << "  " << domain << ": " << fixed3(score) << "\n";
  }
  return out.str();
}

ordered_json report_to_json(const ReportTable& table) {
  ordered_json j;
  ordered_json rows = ordered_json::object();
  for (const auto& [mode, r] : table.rows) {
    ordered_json row;
    row["final_score"] = r.final_score;
    row["model_type"] = r.model_type;
    row["core_iv"] = r.core_iv;
    row["group_def"] = r.group_def;
    row["controls"] = r.controls;
    row["dep_var"] = r.dep_var;
    row["reasoning"] = r.reasoning;
    row["explanation"] = r.explanation;
    row["n"] = r.n;
    rows[mode] = row;
  }
  j["configurations"] = rows;
  if (table.improve_pct) {
    j["improve_pct"] = *table.improve_pct;
    j["improve"] = format_improve(*table.improve_pct);
  }
  ordered_json confusion = ordered_json::array();
  for (int g = 0; g < kModelTypeCount; ++g) {
    ordered_json row = ordered_json::array();
    for (int p = 0; p < kModelTypeCount; ++p)
      row.push_back(table.confusion[static_cast<std::size_t>(g)]
                                   [static_cast<std::size_t>(p)]);
    confusion.push_back(row);
  }
  j["confusion"] = confusion;
  j["confusion_labels"] = {"DiD", "IV", "RD", "SCM", "PSM"};
  j["unclassified_predictions"] = table.unclassified_predictions;
  j["per_method_accuracy"] = table.per_method_accuracy;
  j["per_domain_score"] = table.per_domain_score;
  j["total_records"] = table.total_records;
  return j;
}

ordered_json breakdown_to_json(const ScoreBreakdown& b) {
  ordered_json j;
  j["model_type_score"] = b.model_type_score;
  j["core_iv_score"] = b.core_iv_score;
  j["group_score"] = b.group_score;
  j["control_var_score"] = b.control_var_score;
  j["dependent_var_score"] = b.dependent_var_score;
  j["reasoning_score"] = b.reasoning_score;
  j["explanation_score"] = b.explanation_score;
  j["total"] = b.total;
  j["normalized"] = b.normalized;
  j["comments"] = b.comments;
  return j;
}

}  // namespace strides

#pragma once

#include <string>
#include <vector>

#include "strides/grader.hpp"
#include "strides/orchestrator.hpp"
#include "strides/schema.hpp"

namespace strides {

struct HarnessConfig {
  std::string instances_path;
  enum class BackendKind { Remote, Replay } backend = BackendKind::Replay;
  std::string transcript_path;  // file, or directory of <id>.<mode>.jsonl
  std::string remote_url = "https://api.openai.com";
  std::string remote_model = "gpt-4.1";
  enum class Mode { Strides, Direct, Both } mode = Mode::Both;
  int max_iterations = 3;
  std::uint64_t seed = 42;
  GradingMode grading = GradingMode::Lexical;
  std::string out_dir = "out";
  int jobs = 4;  // replay forces 1 to keep transcript cursors simple
  bool record = false;  // save live transcripts for later replay
};

struct LoadResult {
  std::vector<BenchInstance> instances;
  std::vector<std::string> errors;  // malformed lines, with line numbers
};

// Order-preserving; malformed lines are collected, valid ones still load.
// Throws Error("Unreadable") when the file cannot be opened.
LoadResult load_instances(const std::string& path);

// Runs every instance in the requested mode(s), grades against ground truth,
// and writes runs.jsonl, scores.jsonl, report.txt, report.json under out_dir.
// Returns 0 on full completion, 2 when some runs failed (failures are
// recorded, not fatal).
int run_harness(const HarnessConfig& config);

}  // namespace strides

#include "strides/harness.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "strides/backend.hpp"

namespace strides {

namespace fs = std::filesystem;

namespace {

using nlohmann::ordered_json;

struct Job {
  std::size_t slot;
  BenchInstance instance;
  std::string mode;  // "strides" | "direct"
};

std::shared_ptr<Backend> make_backend(const HarnessConfig& cfg,
                                      const BenchInstance& inst,
                                      const std::string& mode) {
  if (cfg.backend == HarnessConfig::BackendKind::Remote) {
    RemoteConfig rc;
    rc.base_url = cfg.remote_url;
    rc.model = cfg.remote_model;
    return std::make_shared<RemoteBackend>(rc);
  }
  if (cfg.transcript_path.empty())
    throw Error("Unreadable", "replay backend requires --transcript");
  fs::path path(cfg.transcript_path);
  if (fs::is_directory(path))
    path /= inst.instance_id + "." + mode + ".jsonl";
  return std::make_shared<MockBackend>(Transcript::load(path.string()));
}

struct RunOutcome {
  RunRecord record;
  std::optional<GradedRun> graded;
};

RunOutcome run_one(const HarnessConfig& cfg, const BenchInstance& inst,
                   const std::string& mode) {
  PipelineConfig pipeline;
  pipeline.max_iterations = cfg.max_iterations;
  pipeline.seed = cfg.seed;

  std::shared_ptr<Backend> backend = make_backend(cfg, inst, mode);
  std::shared_ptr<RecordingBackend> recorder;
  if (cfg.record && cfg.backend == HarnessConfig::BackendKind::Remote) {
    recorder = std::make_shared<RecordingBackend>(backend);
    backend = recorder;
  }

  RunOutcome outcome;
  outcome.record = mode == "strides" ? run_pipeline(inst, pipeline, *backend)
                                     : run_direct_mode(inst, pipeline, *backend);

  if (recorder) {
    const fs::path dir = fs::path(cfg.out_dir) / "transcripts";
    fs::create_directories(dir);
    recorder->transcript().save(
        (dir / (inst.instance_id + "." + mode + ".jsonl")).string());
  }

  if (outcome.record.final_design) {
    GradedRun graded;
    graded.instance_id = inst.instance_id;
    graded.mode = mode;
    graded.domain = inst.metadata.policy_type;
    graded.gt_family = inst.ground_truth.model_type.family;
    graded.pred_family = outcome.record.final_design->model_type.family;
    Backend* judge_backend =
        cfg.grading == GradingMode::Judge ? backend.get() : nullptr;
    graded.score = grade(*outcome.record.final_design, inst.ground_truth,
                         cfg.grading, judge_backend);
    outcome.graded = std::move(graded);
  }
  return outcome;
}

}  // namespace

LoadResult load_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("Unreadable", path);
  LoadResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      BenchInstance inst = parse_instance(line);
      if (inst.instance_id.empty())
        inst.instance_id = "line-" + std::to_string(line_no);
      result.instances.push_back(std::move(inst));
    } catch (const Error& e) {
      result.errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (result.instances.empty() && result.errors.empty())
    std::cerr << "warning: no instances in " << path << "\n";
  return result;
}

int run_harness(const HarnessConfig& config) {
  const LoadResult loaded = load_instances(config.instances_path);
  for (const auto& err : loaded.errors)
    std::cerr << "instance parse error: " << err << "\n";

  std::vector<std::string> modes;
  if (config.mode == HarnessConfig::Mode::Strides ||
      config.mode == HarnessConfig::Mode::Both)
    modes.push_back("strides");
  if (config.mode == HarnessConfig::Mode::Direct ||
      config.mode == HarnessConfig::Mode::Both)
    modes.push_back("direct");

  std::vector<Job> jobs;
  for (const auto& inst : loaded.instances)
    for (const auto& mode : modes)
      jobs.push_back({jobs.size(), inst, mode});

  std::vector<RunOutcome> outcomes(jobs.size());
  std::vector<std::string> job_errors(jobs.size());

  int width = config.jobs < 1 ? 1 : config.jobs;
  if (config.backend == HarnessConfig::BackendKind::Replay)
    width = 1;  // keep transcript cursors strictly sequential

  std::mutex queue_mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t mine;
      {
        std::lock_guard<std::mutex> lock(queue_mu);
        if (next >= jobs.size()) return;
        mine = next++;
      }
      const Job& job = jobs[mine];
      try {
        outcomes[mine] = run_one(config, job.instance, job.mode);
      } catch (const std::exception& e) {
        RunOutcome failed;
        failed.record.instance_id = job.instance.instance_id;
        failed.record.mode = job.mode;
        failed.record.failed = true;
        failed.record.failure_detail = e.what();
        outcomes[mine] = std::move(failed);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(config.out_dir);
  std::ofstream runs_out(fs::path(config.out_dir) / "runs.jsonl", std::ios::binary);
  std::ofstream scores_out(fs::path(config.out_dir) / "scores.jsonl",
                           std::ios::binary);

  std::vector<GradedRun> graded;
  bool any_failed = !loaded.errors.empty();
  for (const auto& outcome : outcomes) {
    runs_out << run_record_to_json(outcome.record).dump() << "\n";
    if (outcome.record.failed) any_failed = true;
    if (outcome.graded) {
      graded.push_back(*outcome.graded);
      ordered_json line;
      line["instance_id"] = outcome.graded->instance_id;
      line["mode"] = outcome.graded->mode;
      line["score"] = breakdown_to_json(outcome.graded->score);
      scores_out << line.dump() << "\n";
    }
  }

  if (!graded.empty()) {
    const ReportTable table = aggregate(graded);
    std::ofstream text_out(fs::path(config.out_dir) / "report.txt", std::ios::binary);
    text_out << render_report_text(table);
    std::ofstream json_out(fs::path(config.out_dir) / "report.json",
                           std::ios::binary);
    json_out << report_to_json(table).dump(2) << "\n";
  } else {
    std::cerr << "warning: no gradable runs; report not written\n";
  }
  return any_failed ? 2 : 0;
}

}  // namespace strides

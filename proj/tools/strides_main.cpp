#include <iostream>

#include <CLI11.hpp>

#include "strides/harness.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitUnreadable = 66;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "strides: batch harness for staged causal study design generation, "
      "verification on mock data, and rubric grading"};

  strides::HarnessConfig config;
  std::string backend = "replay";
  std::string mode = "both";
  std::string grading = "lexical";

  app.add_option("--instances", config.instances_path,
                 "Line-delimited JSON instance file")
      ->required();
  app.add_option("--mode", mode, "strides | direct | both")
      ->check(CLI::IsMember({"strides", "direct", "both"}));
  app.add_option("--backend", backend, "remote | replay")
      ->check(CLI::IsMember({"remote", "replay"}));
  app.add_option("--transcript", config.transcript_path,
                 "Transcript file or directory (replay backend)");
  app.add_option("--url", config.remote_url, "Chat-completions base URL");
  app.add_option("--model", config.remote_model, "Remote model name");
  app.add_option("--max-iters", config.max_iterations, "Critic loop iteration cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", config.seed, "Base seed for mock-data generation");
  app.add_option("--grading", grading, "lexical | judge")
      ->check(CLI::IsMember({"lexical", "judge"}));
  app.add_option("--out", config.out_dir, "Output directory");
  app.add_option("--jobs", config.jobs, "Concurrent runs (replay forces 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--record", config.record,
               "Record live transcripts under <out>/transcripts/");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    app.exit(e);
    return kExitUsage;
  }

  config.backend = backend == "remote" ? strides::HarnessConfig::BackendKind::Remote
                                       : strides::HarnessConfig::BackendKind::Replay;
  config.mode = mode == "strides" ? strides::HarnessConfig::Mode::Strides
               : mode == "direct" ? strides::HarnessConfig::Mode::Direct
                                  : strides::HarnessConfig::Mode::Both;
  config.grading = grading == "judge" ? strides::GradingMode::Judge
                                      : strides::GradingMode::Lexical;

  if (config.backend == strides::HarnessConfig::BackendKind::Replay &&
      config.transcript_path.empty()) {
    std::cerr << "error: --backend replay requires --transcript\n";
    return kExitUsage;
  }

  try {
    return strides::run_harness(config);
  } catch (const strides::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == "Unreadable" ? kExitUnreadable : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

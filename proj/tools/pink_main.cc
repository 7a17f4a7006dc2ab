// Command-line entry point: pink grade|score|sweep|repro|mitigate|label|serve|report.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "pink/app/commands.h"
#include "pink/error.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartialFailure = 2;

struct Flags {
  std::string config;
  std::string corpus, cache, store, reports, annotations, bleu_mode, judge, host;
  std::optional<int> threshold, runs, port;
  std::vector<int> thresholds;
  bool markdown = false;
  bool verbose = false;
};

void AddCommonFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "Pipeline config file")->required();
  cmd->add_option("--corpus", f.corpus, "Corpus file");
  cmd->add_option("--cache", f.cache, "Judge cache directory");
  cmd->add_option("--store", f.store, "Record store directory");
  cmd->add_option("--reports", f.reports, "Report directory");
  cmd->add_option("--annotations", f.annotations, "Annotation store directory");
  cmd->add_option("-T,--threshold", f.threshold, "Penalty threshold");
  cmd->add_option("--runs", f.runs, "Grading runs per item");
  cmd->add_option("--bleu-mode", f.bleu_mode, "corpus or sentence_average");
  cmd->add_option("--judge", f.judge, "Judge that drives the leaderboard");
}

pink::app::PipelineConfig ResolveConfig(const Flags& f) {
  auto config = pink::app::LoadPipelineConfig(f.config);
  pink::app::ConfigOverrides o;
  if (!f.corpus.empty()) o.corpus = f.corpus;
  if (!f.cache.empty()) o.cache_dir = f.cache;
  if (!f.store.empty()) o.store_dir = f.store;
  if (!f.reports.empty()) o.report_dir = f.reports;
  if (!f.annotations.empty()) o.annotation_store = f.annotations;
  if (!f.bleu_mode.empty()) o.bleu_mode = f.bleu_mode;
  if (!f.judge.empty()) o.judge_id = f.judge;
  if (!f.host.empty()) o.host = f.host;
  o.threshold = f.threshold;
  o.runs = f.runs;
  o.port = f.port;
  pink::app::ApplyOverrides(config, o);
  config.Validate();
  return config;
}

void PrintLeaderboard(const std::vector<pink::analysis::LeaderboardEntry>& entries) {
  std::printf("%-4s %-24s %8s %8s %8s %8s %6s %6s\n", "rank", "model", "pink", "bleu",
              "ned", "oc_rate", "r_bleu", "r_raw");
  for (const auto& e : entries) {
    std::printf("%-4d %-24s %8.4f %8.4f %8.4f %8.4f %6d %6d\n", e.rank_pink,
                e.model_id.c_str(), e.pink, e.bleu, e.norm_edit_distance, e.oc_rate,
                e.rank_bleu, e.rank_raw);
  }
}

int Run(const std::string& command, const Flags& f) {
  using namespace pink::app;
  const PipelineConfig config = ResolveConfig(f);
  if (command == "grade") {
    const auto summary = CmdGrade(config);
    std::printf("%s\n", summary.ToString().c_str());
    if (summary.over_threshold) {
      spdlog::error("failure rate {:.2f}% exceeds the {:.2f}% limit",
                    100.0 * summary.failure_rate, 100.0 * config.failure_threshold);
      return kExitPartialFailure;
    }
  } else if (command == "score") {
    PrintLeaderboard(CmdScore(config).leaderboard);
  } else if (command == "sweep") {
    std::optional<std::vector<int>> ts;
    if (!f.thresholds.empty()) ts = f.thresholds;
    const auto sweep = CmdSweep(config, ts);
    for (const auto& p : sweep.points) {
      std::string order;
      for (const auto& m : p.ranking.order) order += (order.empty() ? "" : " > ") + m;
      std::printf("T=%-3d tau=%+.4f minor=%lld major=%lld  %s\n", p.threshold,
                  p.tau_vs_baseline, p.minor_events, p.major_events, order.c_str());
    }
  } else if (command == "repro") {
    for (const auto& notice : CmdRepro(config)) std::printf("%s\n", notice.c_str());
  } else if (command == "mitigate") {
    const auto report = CmdMitigate(config);
    for (const auto& r : report.rows) {
      std::printf("%-24s dPINK=%+.4f dOC=%+.1fpp\n", r.model_id.c_str(), r.delta_pink,
                  r.delta_oc_pp);
    }
    std::printf("%-24s dPINK=%+.4f dOC=%+.1fpp\n", "average", report.average.delta_pink,
                report.average.delta_oc_pp);
  } else if (command == "label") {
    const auto b = CmdLabel(config);
    std::printf("pairs=%lld discrepant=%lld formatting_involved=%.1f%%\n", b.total_pairs,
                b.discrepant, b.formatting_involved_percent);
  } else if (command == "serve") {
    CmdServe(config);
  } else if (command == "report") {
    const std::string markdown = CmdReport(config, f.markdown);
    if (f.markdown) std::fputs(markdown.c_str(), stdout);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("pink"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Faithfulness-aware evaluation of handwritten-math OCR"};
  app.require_subcommand(1);
  Flags flags;
  app.add_flag("-v,--verbose", flags.verbose, "Debug logging");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"grade", "Grade every transcription and write the record store"},
      {"score", "Aggregate the store into the leaderboard reports"},
      {"sweep", "Re-rank models across penalty thresholds"},
      {"repro", "Cross-grader, run-stability and prompt-sensitivity reports"},
      {"mitigate", "Compare standard and mitigated OCR prompts"},
      {"label", "Classify ground-truth/OCR discrepancies with the judge"},
      {"serve", "Serve the annotation API and UI"},
      {"report", "Regenerate every report from the stores"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    AddCommonFlags(cmd, flags);
    if (std::string(name) == "sweep")
      cmd->add_option("--thresholds", flags.thresholds, "Thresholds to evaluate")->delimiter(',');
    if (std::string(name) == "serve") {
      cmd->add_option("--host", flags.host, "Bind address");
      cmd->add_option("--port", flags.port, "Bind port");
    }
    if (std::string(name) == "report")
      cmd->add_flag("--markdown", flags.markdown, "Also write and print report.md");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  if (flags.verbose) spdlog::set_level(spdlog::level::debug);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return Run(command, flags);
  } catch (const pink::Error& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitError;
  }
}

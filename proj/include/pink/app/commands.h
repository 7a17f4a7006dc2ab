#ifndef PINK_APP_COMMANDS_H_
#define PINK_APP_COMMANDS_H_

#include <optional>
#include <string>
#include <vector>

#include "pink/analysis/human.h"
#include "pink/analysis/leaderboard.h"
#include "pink/analysis/report.h"
#include "pink/app/config.h"
#include "pink/app/record_store.h"
#include "pink/app/server.h"
#include "pink/datamodel.h"
#include "pink/metrics.h"
#include "pink/penalty.h"

namespace pink::app {

struct Inputs {
  Corpus corpus;
  TranscriptionSet transcriptions;
  RubricSpec rubric;
};

// Loads and cross-checks the corpus and every transcription file.
Inputs LoadInputs(const PipelineConfig& config);

// The record subset behind the leaderboard: first judge, first rubric
// variant, standard OCR prompt, run 0.
RecordFilter PrimarySlice(const PipelineConfig& config);

struct GradeSummary {
  std::size_t tasks = 0;
  std::size_t records = 0;
  std::size_t failures = 0;
  long long judge_calls = 0;  // requests sent to judge backends
  long long cache_hits = 0;
  long long reasks = 0;
  double failure_rate = 0.0;
  bool over_threshold = false;

  std::string ToString() const;
};

// Grades every (sample x model x prompt variant) under every judge, rubric
// variant and run, then writes the record store. Grades come from the cache
// when present, so a rerun only calls the judge for missing entries.
GradeSummary CmdGrade(const PipelineConfig& config);

struct ScoreResult {
  std::vector<metrics::ModelAggregate> aggregates;
  std::vector<analysis::LeaderboardEntry> leaderboard;
};

// Aggregates the primary slice and writes leaderboard, rank_deltas, heatmap,
// delta_hist and scatter reports. Throws kMissingStore.
ScoreResult CmdScore(const PipelineConfig& config);

// Threshold sweep over the primary slice; sweep.json.
penalty::SweepResult CmdSweep(const PipelineConfig& config,
                              std::optional<std::vector<int>> thresholds = std::nullopt);

// cross_grader, run_stability and prompt_sensitivity reports. Sections whose
// inputs are not configured are written as skipped; returns those notices.
// Configured inputs missing from the store throw kMissingStore naming them.
std::vector<std::string> CmdRepro(const PipelineConfig& config);

// Standard vs mitigated OCR prompt; mitigation.json. Throws
// kSampleSetMismatch naming the absent variant.
analysis::MitigationReport CmdMitigate(const PipelineConfig& config);

// Labels every standard-prompt transcription that differs from the ground
// truth with the first judge; writes labels.jsonl to the store and
// discrepancies.json.
analysis::DiscrepancyBreakdown CmdLabel(const PipelineConfig& config);

// Task pool for the annotation server, from the primary slice of the store.
TaskPool BuildTaskPool(const PipelineConfig& config);

// Rewrites every report that the store supports, plus human_agreement and
// preferences when an annotation store exists. Returns the Markdown summary;
// with `write_markdown` it is also saved as report.md.
std::string CmdReport(const PipelineConfig& config, bool write_markdown);

// Blocks serving the annotation API until the process is stopped.
void CmdServe(const PipelineConfig& config);

}  // namespace pink::app

#endif  // PINK_APP_COMMANDS_H_

#ifndef PINK_ANALYSIS_REPORT_H_
#define PINK_ANALYSIS_REPORT_H_

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pink/analysis/distributions.h"
#include "pink/analysis/human.h"
#include "pink/analysis/leaderboard.h"
#include "pink/analysis/reproducibility.h"
#include "pink/metrics.h"
#include "pink/penalty.h"

namespace pink::analysis {

// Provenance stamped into every report file.
struct ReportContext {
  std::string config_hash;
  std::string corpus_hash;
  std::string judge_id;  // judge behind the primary slice
  std::vector<std::string> judge_ids;
  std::string bleu_variant;
  int threshold = penalty::kDefaultThreshold;
};

nlohmann::json ToJson(const LeaderboardEntry& entry);
nlohmann::json ToJson(const metrics::ModelAggregate& aggregate);
nlohmann::json ToJson(const RankingComparison& comparison);
nlohmann::json ToJson(const RubricHeatmap& heatmap);
nlohmann::json ToJson(const DeltaHistogram& histogram);
nlohmann::json ToJson(const penalty::SweepResult& sweep);
nlohmann::json ToJson(const CrossGraderReport& report);
nlohmann::json ToJson(const RunStability& stability);
nlohmann::json ToJson(const PromptSensitivity& sensitivity);
nlohmann::json ToJson(const MitigationReport& report);
nlohmann::json ToJson(const HumanAgreement& agreement);
nlohmann::json ToJson(const PreferenceReport& report);
nlohmann::json ToJson(const DiscrepancyBreakdown& breakdown);

// Shortest decimal text that round-trips to the same double.
std::string FormatDouble(double value);

// Writes report files into one directory. JSON files are objects with
// "section", "config_hash" and "judge_id" next to the payload; CSV files carry
// the same two values as trailing columns. Output is a pure function of the
// inputs, so rewriting from the same records is byte-identical.
class ReportWriter {
 public:
  ReportWriter(std::filesystem::path directory, ReportContext context);

  // `payload` must be an object; its keys are merged after the provenance.
  void WriteJson(const std::string& file, const std::string& section,
                 nlohmann::json payload, const std::string& judge_id = "");
  // A section that could not be produced, with the reason.
  void WriteSkipped(const std::string& file, const std::string& section,
                    const std::string& reason, const std::string& judge_id = "");
  void WriteCsv(const std::string& file, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows,
                const std::string& judge_id = "");

  void WriteLeaderboard(const std::vector<LeaderboardEntry>& entries,
                        const std::vector<metrics::ModelAggregate>& aggregates);
  void WriteHeatmap(const RubricHeatmap& heatmap);
  void WriteDeltaHistogram(const DeltaHistogram& histogram);
  void WriteScatter(const std::vector<ScatterPoint>& points);

  // manifest.json: provenance plus the sorted list of files written so far
  // (including files from earlier writers into the same directory).
  void WriteManifest();

  const std::filesystem::path& directory() const { return directory_; }
  const ReportContext& context() const { return context_; }

 private:
  std::filesystem::path directory_;
  ReportContext context_;
};

// Human-readable tables built from the JSON files found in `report_dir`.
std::string RenderMarkdown(const std::filesystem::path& report_dir);

}  // namespace pink::analysis

#endif  // PINK_ANALYSIS_REPORT_H_

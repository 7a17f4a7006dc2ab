#ifndef PINK_ANALYSIS_REPRODUCIBILITY_H_
#define PINK_ANALYSIS_REPRODUCIBILITY_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pink/datamodel.h"
#include "pink/stats.h"

namespace pink::analysis {

// Agreement between two judges grading the same transcriptions. Records are
// aligned on (sample_id, model_id, run_index, prompt_variant); records present
// on one side only are dropped and counted. A statistic that is undefined on
// the aligned data (constant series, fewer than two models) is left empty and
// explained in `notes`.
struct CrossGraderReport {
  std::string judge_a;
  std::string judge_b;
  std::size_t aligned = 0;
  std::size_t dropped_a = 0;
  std::size_t dropped_b = 0;
  // Sample level, on pre-penalty model totals.
  std::optional<double> grading_pearson;
  std::optional<double> grading_qwk;
  // Sample level, on penalized totals.
  std::optional<double> penalized_pearson;
  std::optional<double> penalized_qwk;
  // Model level.
  std::map<std::string, double> pink_a;
  std::map<std::string, double> pink_b;
  std::optional<double> pink_pearson;
  std::optional<double> rank_tau;
  std::vector<std::string> notes;
};

// Throws kNoOverlap when no record aligns and kDuplicateKey when a side holds
// two records for one alignment key.
CrossGraderReport CrossGrader(std::span<const EvalRecord> records_a,
                              std::span<const EvalRecord> records_b);

struct KappaPair {
  std::string a;
  std::string b;
  double kappa = 0.0;
  std::size_t n = 0;
};

struct RunStability {
  std::string model_id;
  std::vector<int> run_indices;
  std::vector<double> pink_per_run;
  double cv_percent = 0.0;
  std::vector<KappaPair> pairwise_qwk;  // on penalized totals
  double mean_pairwise_qwk = 0.0;
  std::size_t shared_samples = 0;
};

// `runs` holds one record set per run for a single model. Only samples graded
// in every run are used. Throws kInsufficientRuns (< 2 runs) or kNoOverlap.
RunStability ComputeRunStability(const std::string& model_id,
                                 std::span<const std::vector<EvalRecord>> runs);

struct PromptSensitivity {
  std::vector<std::string> variants;
  struct Row {
    std::map<std::string, double> pink;  // per variant
    double stddev = 0.0;                 // sample standard deviation
    std::map<std::string, int> rank;     // per variant
  };
  std::map<std::string, Row> models;
};

// `by_variant` maps a rubric prompt variant to its records. Every model must
// cover the same samples under every variant. Throws kEmptyInput (< 2
// variants) or kSampleSetMismatch.
PromptSensitivity ComputePromptSensitivity(
    const std::map<std::string, std::vector<EvalRecord>>& by_variant);

struct MitigationRow {
  std::string model_id;
  double pink_original = 0.0;
  double pink_mitigated = 0.0;
  double delta_pink = 0.0;   // mitigated - original
  double oc_original = 0.0;  // percent of samples
  double oc_mitigated = 0.0;
  double delta_oc_pp = 0.0;  // percentage points
};

struct MitigationReport {
  std::vector<MitigationRow> rows;  // by model_id
  MitigationRow average;            // model_id "average"
  std::size_t shared_samples = 0;
  std::vector<std::string> excluded_models;
  std::size_t excluded_samples = 0;
};

// Compares models present in both sets over the samples graded for every one
// of them under both prompts. Throws kSampleSetMismatch when no model or no
// sample is shared.
MitigationReport CompareMitigation(std::span<const EvalRecord> original,
                                   std::span<const EvalRecord> mitigated);

}  // namespace pink::analysis

#endif  // PINK_ANALYSIS_REPRODUCIBILITY_H_

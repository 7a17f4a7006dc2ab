#ifndef PINK_PENALTY_H_
#define PINK_PENALTY_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pink/datamodel.h"
#include "pink/stats.h"

namespace pink::penalty {

inline constexpr int kDefaultThreshold = 10;

struct Config {
  int threshold = kDefaultThreshold;  // T
  int component_max = kDefaultComponentMax;
  int num_components = kDefaultNumComponents;

  static Config ForRubric(const RubricSpec& rubric,
                          int threshold = kDefaultThreshold);
  // Throws kInvalidThreshold unless 0 <= T <= component_max.
  void Validate() const;
};

struct OverCorrectionEvent {
  std::string sample_id;
  std::string model_id;
  int component = 0;
  std::string component_name;
  int delta = 0;  // always > 0
  OverCorrection severity = OverCorrection::kMinor;
};

// model_r - oracle_r.
int ComponentDelta(int model_r, int oracle_r);

// NoEvent iff delta <= 0, Minor iff 1 <= delta <= T, Major iff delta > T.
OverCorrection Classify(int delta, const Config& config);

// Penalized component score: the model score when nothing was over-corrected,
// the oracle score for a minor over-correction (reversion), 0 for a major one
// (nullification).
int PenalizeComponent(int model_r, int oracle_r, const Config& config);

struct PenalizedItem {
  std::vector<int> deltas;
  std::vector<OverCorrection> classifications;
  std::vector<int> components;
  int total = 0;
  // Component indices with delta > 0, in component order.
  std::vector<int> event_components;
};

// Throws kArityMismatch if the two scores differ in length.
PenalizedItem PenalizeItem(const RubricScore& model, const RubricScore& oracle,
                           const Config& config);

// Builds a record whose deltas/classifications/penalized fields are derived
// from (model, oracle) under `config`.
EvalRecord MakeRecord(std::string sample_id, std::string model_id,
                      std::string judge_id, int run_index,
                      const RubricScore& oracle, const RubricScore& model,
                      const Config& config);

// Re-derives the penalty fields of `record` at a different threshold. No
// re-grading is involved; only the stored component vectors are used.
EvalRecord Repenalize(const EvalRecord& record, const Config& config);

// Recomputes every derived field and throws kValidation on any mismatch.
void CheckRecordConsistency(const EvalRecord& record);

std::vector<OverCorrectionEvent> EventsOf(const EvalRecord& record,
                                          const RubricSpec& rubric);

struct ThresholdPoint {
  int threshold = 0;
  std::map<std::string, long long> penalized_totals;  // per model
  std::map<std::string, double> pink;                 // per model
  stats::Ranking ranking;
  double tau_vs_baseline = 1.0;
  long long minor_events = 0;
  long long major_events = 0;
};

struct SweepResult {
  int baseline_threshold = kDefaultThreshold;
  stats::Ranking baseline_ranking;
  std::vector<ThresholdPoint> points;  // in the order thresholds were given
};

// Recomputes penalties for every record at each threshold, ranks models by
// PINK and compares each ranking to the one at `baseline_threshold` with
// Kendall tau-b. Throws kEmptyInput for an empty threshold list and
// kInvalidThreshold for out-of-range values.
SweepResult SweepThresholds(std::span<const EvalRecord> records,
                            std::span<const int> thresholds,
                            const Config& base,
                            int baseline_threshold = kDefaultThreshold);

}  // namespace pink::penalty

#endif  // PINK_PENALTY_H_

#include "pink/penalty.h"

#include <algorithm>

#include "pink/error.h"
#include "pink/metrics.h"

namespace pink::penalty {

Config Config::ForRubric(const RubricSpec& rubric, int threshold) {
  Config config;
  config.threshold = threshold;
  config.component_max = rubric.component_max;
  config.num_components = rubric.num_components;
  return config;
}

void Config::Validate() const {
  if (threshold < 0 || threshold > component_max) {
    throw Error(ErrorCode::kInvalidThreshold,
                "threshold " + std::to_string(threshold) + " outside [0, " +
                    std::to_string(component_max) + "]");
  }
}

int ComponentDelta(int model_r, int oracle_r) { return model_r - oracle_r; }

OverCorrection Classify(int delta, const Config& config) {
  if (delta <= 0) return OverCorrection::kNoEvent;
  if (delta <= config.threshold) return OverCorrection::kMinor;
  return OverCorrection::kMajor;
}

int PenalizeComponent(int model_r, int oracle_r, const Config& config) {
  switch (Classify(ComponentDelta(model_r, oracle_r), config)) {
    case OverCorrection::kNoEvent: return model_r;
    case OverCorrection::kMinor: return oracle_r;
    case OverCorrection::kMajor: return 0;
  }
  return model_r;
}

PenalizedItem PenalizeItem(const RubricScore& model, const RubricScore& oracle,
                           const Config& config) {
  if (model.size() != oracle.size()) {
    throw Error(ErrorCode::kArityMismatch,
                "model has " + std::to_string(model.size()) +
                    " components, oracle has " + std::to_string(oracle.size()));
  }
  PenalizedItem item;
  for (std::size_t r = 0; r < model.size(); ++r) {
    const int delta = ComponentDelta(model[r], oracle[r]);
    const int penalized = PenalizeComponent(model[r], oracle[r], config);
    item.deltas.push_back(delta);
    item.classifications.push_back(Classify(delta, config));
    item.components.push_back(penalized);
    item.total += penalized;
    if (delta > 0) item.event_components.push_back(static_cast<int>(r));
  }
  return item;
}

EvalRecord MakeRecord(std::string sample_id, std::string model_id,
                      std::string judge_id, int run_index,
                      const RubricScore& oracle, const RubricScore& model,
                      const Config& config) {
  EvalRecord record;
  record.sample_id = std::move(sample_id);
  record.model_id = std::move(model_id);
  record.judge_id = std::move(judge_id);
  record.run_index = run_index;
  record.oracle = oracle;
  record.model = model;
  return Repenalize(record, config);
}

EvalRecord Repenalize(const EvalRecord& record, const Config& config) {
  EvalRecord out = record;
  PenalizedItem item = PenalizeItem(record.model, record.oracle, config);
  out.deltas = std::move(item.deltas);
  out.classifications = std::move(item.classifications);
  out.penalized = std::move(item.components);
  out.penalized_total = item.total;
  out.threshold_used = config.threshold;
  return out;
}

void CheckRecordConsistency(const EvalRecord& record) {
  Config config;
  config.threshold = record.threshold_used;
  config.num_components = static_cast<int>(record.model.size());
  const EvalRecord expected = Repenalize(record, config);
  auto fail = [&](const char* what) {
    throw Error(ErrorCode::kValidation,
                std::string(what) + " inconsistent for (" + record.sample_id +
                    ", " + record.model_id + ")");
  };
  if (expected.deltas != record.deltas) fail("deltas");
  if (expected.classifications != record.classifications) fail("classifications");
  if (expected.penalized != record.penalized) fail("penalized components");
  if (expected.penalized_total != record.penalized_total) fail("penalized_total");
}

std::vector<OverCorrectionEvent> EventsOf(const EvalRecord& record,
                                          const RubricSpec& rubric) {
  std::vector<OverCorrectionEvent> events;
  for (std::size_t r = 0; r < record.deltas.size(); ++r) {
    if (record.deltas[r] <= 0) continue;
    OverCorrectionEvent event;
    event.sample_id = record.sample_id;
    event.model_id = record.model_id;
    event.component = static_cast<int>(r);
    event.component_name =
        r < rubric.names.size() ? rubric.names[r] : std::to_string(r);
    event.delta = record.deltas[r];
    event.severity = record.classifications[r];
    events.push_back(std::move(event));
  }
  return events;
}

namespace {

ThresholdPoint Evaluate(std::span<const EvalRecord> records, const Config& config) {
  ThresholdPoint point;
  point.threshold = config.threshold;
  std::map<std::string, std::vector<EvalRecord>> by_model;
  for (const auto& record : records) {
    EvalRecord repenalized = Repenalize(record, config);
    for (auto value : repenalized.classifications) {
      if (value == OverCorrection::kMinor) ++point.minor_events;
      if (value == OverCorrection::kMajor) ++point.major_events;
    }
    point.penalized_totals[record.model_id] += repenalized.penalized_total;
    by_model[record.model_id].push_back(std::move(repenalized));
  }
  for (const auto& [model, model_records] : by_model) {
    point.pink[model] = metrics::PinkScore(model_records);
  }
  point.ranking = stats::RankDescending(point.pink);
  return point;
}

}  // namespace

SweepResult SweepThresholds(std::span<const EvalRecord> records,
                            std::span<const int> thresholds, const Config& base,
                            int baseline_threshold) {
  if (thresholds.empty()) {
    throw Error(ErrorCode::kEmptyInput, "threshold list is empty");
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to sweep");
  Config config = base;
  for (int t : thresholds) {
    config.threshold = t;
    config.Validate();
  }
  config.threshold = baseline_threshold;
  config.Validate();

  SweepResult result;
  result.baseline_threshold = baseline_threshold;
  result.baseline_ranking = Evaluate(records, config).ranking;
  for (int t : thresholds) {
    config.threshold = t;
    ThresholdPoint point = Evaluate(records, config);
    point.tau_vs_baseline = stats::RankingTau(point.ranking, result.baseline_ranking);
    result.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace pink::penalty

#ifndef PINK_ANALYSIS_LEADERBOARD_H_
#define PINK_ANALYSIS_LEADERBOARD_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pink/datamodel.h"
#include "pink/metrics.h"

namespace pink::analysis {

struct LeaderboardEntry {
  std::string model_id;
  double pink = 0.0;
  double bleu = 0.0;
  double norm_edit_distance = 0.0;
  double oc_rate = 0.0;
  double raw_score = 0.0;  // mean pre-penalty rubric total
  int rank_pink = 0;
  int rank_bleu = 0;
  int rank_raw = 0;
};

// Sorted by PINK descending. Ties in any metric break by model_id.
std::vector<LeaderboardEntry> BuildLeaderboard(
    std::span<const metrics::ModelAggregate> aggregates);

struct RankDelta {
  std::string model_id;
  int rank_a = 0;
  int rank_b = 0;
  int movement = 0;  // rank_a - rank_b; positive means the model climbs under b
};

struct RankingComparison {
  std::vector<RankDelta> deltas;  // by model_id
  double tau = 1.0;
};

// Throws kModelSetMismatch unless both maps hold the same models.
RankingComparison CompareRankings(const std::map<std::string, double>& scores_a,
                                  const std::map<std::string, double>& scores_b);

struct RubricHeatmap {
  std::vector<std::string> component_names;
  std::vector<std::string> models;  // by mean penalized total, descending
  std::vector<std::vector<long long>> counts;  // [model][component]
};

// Counts components with delta > 0 per model.
RubricHeatmap BuildRubricHeatmap(std::span<const EvalRecord> records,
                                 const RubricSpec& rubric = {});

}  // namespace pink::analysis

#endif  // PINK_ANALYSIS_LEADERBOARD_H_

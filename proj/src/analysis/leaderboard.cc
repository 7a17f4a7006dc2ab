#include "pink/analysis/leaderboard.h"

#include <algorithm>
#include <set>

#include "pink/error.h"
#include "pink/stats.h"

namespace pink::analysis {

std::vector<LeaderboardEntry> BuildLeaderboard(
    std::span<const metrics::ModelAggregate> aggregates) {
  std::map<std::string, double> pink, bleu, raw;
  std::vector<LeaderboardEntry> entries;
  for (const auto& agg : aggregates) {
    pink[agg.model_id] = agg.pink;
    bleu[agg.model_id] = agg.bleu;
    raw[agg.model_id] = agg.mean_model;
    entries.push_back({agg.model_id, agg.pink, agg.bleu, agg.norm_edit_distance,
                       agg.oc_rate, agg.mean_model});
  }
  const auto by_pink = stats::RankDescending(pink);
  const auto by_bleu = stats::RankDescending(bleu);
  const auto by_raw = stats::RankDescending(raw);
  for (auto& e : entries) {
    e.rank_pink = by_pink.rank.at(e.model_id);
    e.rank_bleu = by_bleu.rank.at(e.model_id);
    e.rank_raw = by_raw.rank.at(e.model_id);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.rank_pink < b.rank_pink; });
  return entries;
}

RankingComparison CompareRankings(const std::map<std::string, double>& scores_a,
                                  const std::map<std::string, double>& scores_b) {
  std::set<std::string> only;
  for (const auto& [m, _] : scores_a)
    if (!scores_b.count(m)) only.insert(m);
  for (const auto& [m, _] : scores_b)
    if (!scores_a.count(m)) only.insert(m);
  if (!only.empty() || scores_a.empty()) {
    std::string names;
    for (const auto& m : only) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::kModelSetMismatch,
                scores_a.empty() ? "no models to compare"
                                 : "models not present in both rankings: " + names);
  }
  const auto a = stats::RankDescending(scores_a);
  const auto b = stats::RankDescending(scores_b);
  RankingComparison out;
  for (const auto& [m, _] : scores_a) {
    const int ra = a.rank.at(m), rb = b.rank.at(m);
    out.deltas.push_back({m, ra, rb, ra - rb});
  }
  out.tau = stats::RankingTau(a, b);
  return out;
}

RubricHeatmap BuildRubricHeatmap(std::span<const EvalRecord> records,
                                 const RubricSpec& rubric) {
  struct Row {
    std::vector<long long> counts;
    long long penalized = 0;
    long long n = 0;
  };
  std::map<std::string, Row> rows;
  for (const auto& rec : records) {
    auto& row = rows[rec.model_id];
    if (row.counts.empty()) row.counts.assign(rubric.num_components, 0);
    if (rec.deltas.size() != row.counts.size()) {
      throw Error(ErrorCode::kArityMismatch,
                  "record " + rec.sample_id + "/" + rec.model_id + " has " +
                      std::to_string(rec.deltas.size()) + " components");
    }
    for (std::size_t r = 0; r < rec.deltas.size(); ++r)
      if (rec.deltas[r] > 0) ++row.counts[r];
    row.penalized += rec.penalized_total;
    ++row.n;
  }
  std::vector<std::pair<std::string, const Row*>> order;
  for (const auto& [m, row] : rows) order.emplace_back(m, &row);
  // Compares mean penalized totals exactly via cross-multiplication.
  std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return x.second->penalized * y.second->n > y.second->penalized * x.second->n;
  });
  RubricHeatmap out;
  out.component_names = rubric.names;
  for (const auto& [m, row] : order) {
    out.models.push_back(m);
    out.counts.push_back(row->counts);
  }
  return out;
}

}  // namespace pink::analysis

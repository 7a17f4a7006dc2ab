#include "pink/analysis/distributions.h"

#include <algorithm>
#include <tuple>

#include "pink/error.h"

namespace pink::analysis {

int DeltaHistogram::BinOf(int delta) {
  if (delta < kLow || delta > kHigh) {
    throw Error(ErrorCode::kOutOfRange,
                "score difference " + std::to_string(delta) + " outside [-100, 100]");
  }
  if (delta == kLow) return 0;
  // Right-closed: (e, e + 5] holds e + 1 .. e + 5.
  return (delta - kLow - 1) / kWidth;
}

DeltaHistogram ScoreDifferenceDistribution(std::span<const EvalRecord> records) {
  DeltaHistogram out;
  for (int e = DeltaHistogram::kLow; e <= DeltaHistogram::kHigh;
       e += DeltaHistogram::kWidth)
    out.edges.push_back(e);
  const std::size_t bins = out.edges.size() - 1;
  for (const auto& rec : records) {
    auto& row = out.models[rec.model_id];
    if (row.counts.empty()) row.counts.assign(bins, 0);
    const int delta = rec.model.total() - rec.oracle.total();
    ++row.counts[DeltaHistogram::BinOf(delta)];
    if (delta == 0) ++row.zero;
    ++row.total;
  }
  return out;
}

std::vector<ScatterPoint> PenaltyScatter(std::span<const EvalRecord> records) {
  std::vector<ScatterPoint> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    int events = 0;
    for (int d : rec.deltas) events += d > 0;
    out.push_back({rec.model_id, rec.sample_id, rec.run_index, rec.oracle.total(),
                   rec.model.total(), rec.penalized_total, events});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.sample_id, a.run_index) <
           std::tie(b.model_id, b.sample_id, b.run_index);
  });
  return out;
}

}  // namespace pink::analysis

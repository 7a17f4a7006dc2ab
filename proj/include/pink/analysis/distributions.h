#ifndef PINK_ANALYSIS_DISTRIBUTIONS_H_
#define PINK_ANALYSIS_DISTRIBUTIONS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pink/datamodel.h"

namespace pink::analysis {

// Histogram of model_total - oracle_total per model. Bins have width 5 over
// [-100, 100] and are right-closed, (e_k, e_k+1], except the first, which
// also takes -100. A difference of 0 lands in (-5, 0]; `zero` counts it
// separately as well.
struct DeltaHistogram {
  static constexpr int kLow = -100;
  static constexpr int kHigh = 100;
  static constexpr int kWidth = 5;

  struct Row {
    std::vector<long long> counts;
    long long zero = 0;
    long long total = 0;
  };

  std::vector<int> edges;
  std::map<std::string, Row> models;

  // Index of the bin holding `delta`. Throws kOutOfRange outside [-100, 100].
  static int BinOf(int delta);
};

DeltaHistogram ScoreDifferenceDistribution(std::span<const EvalRecord> records);

struct ScatterPoint {
  std::string model_id;
  std::string sample_id;
  int run_index = 0;
  int oracle_total = 0;
  int pre = 0;   // model total
  int post = 0;  // penalized total
  int events = 0;
};

// One point per record, ordered by (model_id, sample_id, run_index).
std::vector<ScatterPoint> PenaltyScatter(std::span<const EvalRecord> records);

}  // namespace pink::analysis

#endif  // PINK_ANALYSIS_DISTRIBUTIONS_H_

#ifndef PINK_STATS_H_
#define PINK_STATS_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pink::stats {

// Two aligned series. `labels`, when present, name each position.
struct PairedSeries {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::string> labels;
};

// Pairs up the keys present in both maps, in key order.
PairedSeries AlignByLabel(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b);

double Mean(std::span<const double> values);
// Sample (n - 1) variance; every dispersion statistic here uses it.
double SampleVariance(std::span<const double> values);
double SampleStdDev(std::span<const double> values);

// Product-moment correlation. Throws kArityMismatch, kEmptyInput (n < 2) or
// kZeroVariance.
double Pearson(std::span<const double> xs, std::span<const double> ys);
double Pearson(const PairedSeries& series);

// Kendall tau-b with tie correction, O(n log n) (Knight's merge-sort method).
// Throws kAllTied when either series is constant.
double KendallTauB(std::span<const double> xs, std::span<const double> ys);
double KendallTauB(const PairedSeries& series);

enum class KappaWeighting { kLinear, kQuadratic };

std::string_view KappaWeightingName(KappaWeighting weighting);
KappaWeighting ParseKappaWeighting(std::string_view name);

// Cohen's weighted kappa, 1 - sum(w*O) / sum(w*E), over the ordered
// `categories`. Returns 1.0 when the expected disagreement is zero (both
// raters used one identical category throughout).
double WeightedKappa(std::span<const int> ratings_a,
                     std::span<const int> ratings_b,
                     std::span<const int> categories,
                     KappaWeighting weighting = KappaWeighting::kQuadratic);

// 100 * sample stddev / mean. Throws kEmptyInput (n < 2) or kZeroMean.
double CoefficientOfVariation(std::span<const double> values);

// Descending ranking; ties are broken by ascending label so the order is
// total and reproducible.
struct Ranking {
  std::vector<std::string> order;  // best first
  std::map<std::string, int> rank;  // 1-based
};
Ranking RankDescending(const std::map<std::string, double>& scores);
Ranking RankAscending(const std::map<std::string, double>& scores);

// Kendall tau-b between the rank vectors of two rankings over the same labels.
double RankingTau(const Ranking& a, const Ranking& b);

}  // namespace pink::stats

#endif  // PINK_STATS_H_

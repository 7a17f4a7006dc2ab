#include "pink/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>

#include "pink/error.h"

namespace pink::stats {
namespace {

void CheckPaired(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kArityMismatch,
                "series lengths differ: " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
  if (a < 2) throw Error(ErrorCode::kEmptyInput, "need at least 2 pairs");
}

// Number of tied pairs within runs of equal values in a sorted range.
template <typename It, typename Eq>
std::int64_t TiedPairs(It first, It last, Eq equal) {
  std::int64_t ties = 0;
  while (first != last) {
    It run = first;
    std::int64_t length = 0;
    while (run != last && equal(*run, *first)) {
      ++run;
      ++length;
    }
    ties += length * (length - 1) / 2;
    first = run;
  }
  return ties;
}

// Stable merge sort on .second, returning the number of inversions.
std::int64_t SortCountingSwaps(std::vector<std::pair<double, double>>& v) {
  std::vector<std::pair<double, double>> buffer(v.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j].second < v[i].second) {
          swaps += static_cast<std::int64_t>(mid - i);
          buffer[k++] = v[j++];
        } else {
          buffer[k++] = v[i++];
        }
      }
      while (i < mid) buffer[k++] = v[i++];
      while (j < hi) buffer[k++] = v[j++];
    }
    v.swap(buffer);
  }
  return swaps;
}

Ranking Rank(const std::map<std::string, double>& scores, bool descending) {
  std::vector<std::pair<std::string, double>> items(scores.begin(),
                                                    scores.end());
  // std::map iteration is already label-ascending, so a stable sort on score
  // alone breaks ties by label.
  std::stable_sort(items.begin(), items.end(),
                   [descending](const auto& a, const auto& b) {
                     return descending ? a.second > b.second
                                       : a.second < b.second;
                   });
  Ranking ranking;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ranking.order.push_back(items[i].first);
    ranking.rank[items[i].first] = static_cast<int>(i) + 1;
  }
  return ranking;
}

}  // namespace

PairedSeries AlignByLabel(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b) {
  PairedSeries series;
  for (const auto& [label, x] : a) {
    auto it = b.find(label);
    if (it == b.end()) continue;
    series.xs.push_back(x);
    series.ys.push_back(it->second);
    series.labels.push_back(label);
  }
  return series;
}

double Mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "mean of nothing");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double SampleVariance(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "variance needs at least 2 values");
  }
  const double mean = Mean(values);
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(values.size() - 1);
}

double SampleStdDev(std::span<const double> values) {
  return std::sqrt(SampleVariance(values));
}

double Pearson(std::span<const double> xs, std::span<const double> ys) {
  CheckPaired(xs.size(), ys.size());
  const double mx = Mean(xs);
  const double my = Mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kZeroVariance, "pearson on a constant series");
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double Pearson(const PairedSeries& series) {
  return Pearson(series.xs, series.ys);
}

double KendallTauB(std::span<const double> xs, std::span<const double> ys) {
  CheckPaired(xs.size(), ys.size());
  const auto n = static_cast<std::int64_t>(xs.size());
  std::vector<std::pair<double, double>> pairs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pairs[i] = {xs[i], ys[i]};
  std::sort(pairs.begin(), pairs.end());

  const std::int64_t x_ties = TiedPairs(
      pairs.begin(), pairs.end(),
      [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::int64_t joint_ties =
      TiedPairs(pairs.begin(), pairs.end(),
                [](const auto& a, const auto& b) { return a == b; });
  const std::int64_t swaps = SortCountingSwaps(pairs);
  const std::int64_t y_ties = TiedPairs(
      pairs.begin(), pairs.end(),
      [](const auto& a, const auto& b) { return a.second == b.second; });

  const std::int64_t total = n * (n - 1) / 2;
  if (x_ties == total || y_ties == total) {
    throw Error(ErrorCode::kAllTied, "kendall tau on a constant series");
  }
  const std::int64_t numerator =
      total - x_ties - y_ties + joint_ties - 2 * swaps;
  // One sqrt of the product keeps untied series at exactly +-1.
  const double denominator = std::sqrt(static_cast<double>(total - x_ties) *
                                       static_cast<double>(total - y_ties));
  return std::clamp(static_cast<double>(numerator) / denominator, -1.0, 1.0);
}

double KendallTauB(const PairedSeries& series) {
  return KendallTauB(series.xs, series.ys);
}

std::string_view KappaWeightingName(KappaWeighting weighting) {
  return weighting == KappaWeighting::kLinear ? "linear" : "quadratic";
}

KappaWeighting ParseKappaWeighting(std::string_view name) {
  if (name == "linear") return KappaWeighting::kLinear;
  if (name == "quadratic") return KappaWeighting::kQuadratic;
  throw Error(ErrorCode::kConfigError,
              "unknown kappa weighting '" + std::string(name) + "'");
}

double WeightedKappa(std::span<const int> ratings_a,
                     std::span<const int> ratings_b,
                     std::span<const int> categories,
                     KappaWeighting weighting) {
  if (ratings_a.size() != ratings_b.size()) {
    throw Error(ErrorCode::kArityMismatch, "rating vectors differ in length");
  }
  if (ratings_a.empty() || categories.empty()) {
    throw Error(ErrorCode::kEmptyInput, "weighted kappa needs ratings");
  }
  std::map<int, std::size_t> index;
  for (int c : categories) index.emplace(c, index.size());
  const std::size_t k = index.size();
  auto lookup = [&](int rating) {
    auto it = index.find(rating);
    if (it == index.end()) {
      throw Error(ErrorCode::kUnknownCategory,
                  "rating " + std::to_string(rating) + " not in category set");
    }
    return it->second;
  };

  std::vector<double> observed(k * k, 0.0), row(k, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < ratings_a.size(); ++i) {
    const std::size_t a = lookup(ratings_a[i]);
    const std::size_t b = lookup(ratings_b[i]);
    observed[a * k + b] += 1.0;
    row[a] += 1.0;
    col[b] += 1.0;
  }
  if (k == 1) return 1.0;
  const double n = static_cast<double>(ratings_a.size());
  double weighted_observed = 0.0, weighted_expected = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = std::abs(static_cast<double>(i) - static_cast<double>(j)) /
                       static_cast<double>(k - 1);
      const double w = weighting == KappaWeighting::kLinear ? d : d * d;
      weighted_observed += w * observed[i * k + j];
      weighted_expected += w * row[i] * col[j] / n;
    }
  }
  if (weighted_expected == 0.0) return 1.0;
  return 1.0 - weighted_observed / weighted_expected;
}

double CoefficientOfVariation(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "CV needs at least 2 values");
  }
  const double mean = Mean(values);
  if (mean == 0.0) throw Error(ErrorCode::kZeroMean, "CV with zero mean");
  return 100.0 * SampleStdDev(values) / mean;
}

Ranking RankDescending(const std::map<std::string, double>& scores) {
  return Rank(scores, /*descending=*/true);
}

Ranking RankAscending(const std::map<std::string, double>& scores) {
  return Rank(scores, /*descending=*/false);
}

double RankingTau(const Ranking& a, const Ranking& b) {
  if (a.rank.size() != b.rank.size()) {
    throw Error(ErrorCode::kModelSetMismatch, "rankings cover different labels");
  }
  std::vector<double> xs, ys;
  for (const auto& [label, rank] : a.rank) {
    auto it = b.rank.find(label);
    if (it == b.rank.end()) {
      throw Error(ErrorCode::kModelSetMismatch,
                  "label '" + label + "' missing from second ranking");
    }
    xs.push_back(rank);
    ys.push_back(it->second);
  }
  if (xs.size() == 1) return 1.0;
  return KendallTauB(xs, ys);
}

}  // namespace pink::stats

#ifndef PINK_ANALYSIS_HUMAN_H_
#define PINK_ANALYSIS_HUMAN_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pink/analysis/reproducibility.h"
#include "pink/judge/response.h"
#include "pink/stats.h"

namespace pink::analysis {

inline constexpr int kHumanGradeMax = 10;

// rater_id -> sample_id -> grade in [0, 10]
using HumanGrades = std::map<std::string, std::map<std::string, int>>;

struct HumanAgreement {
  stats::KappaWeighting weighting = stats::KappaWeighting::kQuadratic;
  std::vector<KappaPair> pairwise;  // over samples both raters graded
  double mean_kappa = 0.0;
  // Mean human grade per sample against auto_total / 10. Empty when fewer
  // than two samples overlap or either side is constant.
  std::optional<double> pearson;
  std::size_t n_samples = 0;
  std::vector<std::string> notes;
};

// Throws kInsufficientRaters (< 2 raters), kOutOfRange for grades outside
// [0, 10], kNoOverlap when a rater pair shares no sample.
HumanAgreement ComputeHumanAgreement(
    const HumanGrades& grades, const std::map<std::string, double>& auto_totals,
    stats::KappaWeighting weighting = stats::KappaWeighting::kQuadratic);

enum class PreferredMetric { kPink, kBleu, kNeither };

std::string_view PreferredMetricName(PreferredMetric metric);
PreferredMetric ParsePreferredMetric(std::string_view name);

struct PreferenceVote {
  std::string sample_id;
  PreferredMetric chosen = PreferredMetric::kNeither;
};

struct PreferenceTally {
  long long pink = 0;
  long long bleu = 0;
  long long neither = 0;
  long long total = 0;
  // 100 * count / total; all zero when total is 0.
  double pct_pink = 0.0;
  double pct_bleu = 0.0;
  double pct_neither = 0.0;

  void Add(PreferredMetric metric);
  void Finish();
};

struct PreferenceBracket {
  double lower = 0.0;
  double upper = 0.0;  // first bracket is [lower, upper], the rest (lower, upper]
  PreferenceTally tally;
};

struct PreferenceReport {
  PreferenceTally overall;
  std::vector<PreferenceBracket> brackets;
};

// Quartile edges (linear interpolation between order statistics) of `scores`.
std::vector<double> QuartileEdges(std::span<const double> scores);

// `pink_side_scores` is the PINK-side score shown for each sample; it both
// resolves votes to known samples and assigns brackets. `edges` defaults to
// the quartiles of those scores. Throws kUnresolvedMapping for a vote on a
// sample with no score and kPrecondition for fewer than 2 or unsorted edges.
PreferenceReport AggregatePreferences(
    std::span<const PreferenceVote> votes,
    const std::map<std::string, double>& pink_side_scores,
    std::optional<std::vector<double>> edges = std::nullopt);

struct DiscrepancyBreakdown {
  long long total_pairs = 0;
  long long discrepant = 0;
  std::map<std::string, long long> counts;  // discrepant classes; empty if none
  std::map<std::string, double> percent;    // over discrepant pairs
  double formatting_involved_percent = 0.0;
};

DiscrepancyBreakdown BreakdownDiscrepancies(
    std::span<const judge::DiscrepancyLabel> labels);

}  // namespace pink::analysis

#endif  // PINK_ANALYSIS_HUMAN_H_

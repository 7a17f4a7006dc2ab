#include "pink/analysis/human.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pink/error.h"

namespace pink::analysis {

HumanAgreement ComputeHumanAgreement(const HumanGrades& grades,
                                     const std::map<std::string, double>& auto_totals,
                                     stats::KappaWeighting weighting) {
  if (grades.size() < 2) {
    throw Error(ErrorCode::kInsufficientRaters,
                "agreement needs at least 2 raters, got " +
                    std::to_string(grades.size()));
  }
  for (const auto& [rater, by_sample] : grades) {
    for (const auto& [sample, g] : by_sample) {
      if (g < 0 || g > kHumanGradeMax) {
        throw Error(ErrorCode::kOutOfRange, "rater " + rater + " gave " +
                                                std::to_string(g) + " to " + sample);
      }
    }
  }
  std::vector<int> categories(kHumanGradeMax + 1);
  std::iota(categories.begin(), categories.end(), 0);

  HumanAgreement out;
  out.weighting = weighting;
  double sum = 0.0;
  for (auto i = grades.begin(); i != grades.end(); ++i) {
    for (auto j = std::next(i); j != grades.end(); ++j) {
      std::vector<int> a, b;
      for (const auto& [sample, g] : i->second) {
        auto it = j->second.find(sample);
        if (it == j->second.end()) continue;
        a.push_back(g);
        b.push_back(it->second);
      }
      if (a.empty()) {
        throw Error(ErrorCode::kNoOverlap,
                    "raters " + i->first + " and " + j->first + " share no sample");
      }
      const double k = stats::WeightedKappa(a, b, categories, weighting);
      out.pairwise.push_back({i->first, j->first, k, a.size()});
      sum += k;
    }
  }
  out.mean_kappa = sum / static_cast<double>(out.pairwise.size());

  std::map<std::string, std::pair<double, int>> per_sample;
  for (const auto& [rater, by_sample] : grades) {
    for (const auto& [sample, g] : by_sample) {
      auto& acc = per_sample[sample];
      acc.first += g;
      ++acc.second;
    }
  }
  std::vector<double> human, automatic;
  for (const auto& [sample, acc] : per_sample) {
    auto it = auto_totals.find(sample);
    if (it == auto_totals.end()) continue;
    human.push_back(acc.first / acc.second);
    automatic.push_back(it->second / 10.0);
  }
  out.n_samples = human.size();
  try {
    out.pearson = stats::Pearson(human, automatic);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroVariance && e.code() != ErrorCode::kEmptyInput)
      throw;
    out.notes.push_back(std::string("pearson undefined: ") + e.what());
  }
  return out;
}

std::string_view PreferredMetricName(PreferredMetric metric) {
  switch (metric) {
    case PreferredMetric::kPink: return "PINK";
    case PreferredMetric::kBleu: return "BLEU";
    case PreferredMetric::kNeither: return "Neither";
  }
  return "Neither";
}

PreferredMetric ParsePreferredMetric(std::string_view name) {
  if (name == "PINK") return PreferredMetric::kPink;
  if (name == "BLEU") return PreferredMetric::kBleu;
  if (name == "Neither") return PreferredMetric::kNeither;
  throw Error(ErrorCode::kValidation,
              "unknown metric '" + std::string(name) + "'");
}

void PreferenceTally::Add(PreferredMetric metric) {
  switch (metric) {
    case PreferredMetric::kPink: ++pink; break;
    case PreferredMetric::kBleu: ++bleu; break;
    case PreferredMetric::kNeither: ++neither; break;
  }
  ++total;
}

void PreferenceTally::Finish() {
  if (total == 0) {
    pct_pink = pct_bleu = pct_neither = 0.0;
    return;
  }
  const double t = static_cast<double>(total);
  pct_pink = 100.0 * static_cast<double>(pink) / t;
  pct_bleu = 100.0 * static_cast<double>(bleu) / t;
  pct_neither = 100.0 * static_cast<double>(neither) / t;
}

std::vector<double> QuartileEdges(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores to bracket");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int q = 0; q <= 4; ++q) {
    const double pos = (sorted.size() - 1) * q / 4.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    edges.push_back(sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]));
  }
  return edges;
}

PreferenceReport AggregatePreferences(
    std::span<const PreferenceVote> votes,
    const std::map<std::string, double>& pink_side_scores,
    std::optional<std::vector<double>> edges) {
  PreferenceReport out;
  for (const auto& v : votes) {
    if (!pink_side_scores.count(v.sample_id)) {
      throw Error(ErrorCode::kUnresolvedMapping,
                  "vote on sample '" + v.sample_id + "' has no known score");
    }
    out.overall.Add(v.chosen);
  }
  out.overall.Finish();
  if (pink_side_scores.empty()) return out;

  if (!edges) {
    std::vector<double> scores;
    for (const auto& [_, s] : pink_side_scores) scores.push_back(s);
    edges = QuartileEdges(scores);
  }
  if (edges->size() < 2 || !std::is_sorted(edges->begin(), edges->end())) {
    throw Error(ErrorCode::kPrecondition,
                "bracket edges must be ascending with at least 2 values");
  }
  for (std::size_t i = 0; i + 1 < edges->size(); ++i)
    out.brackets.push_back({(*edges)[i], (*edges)[i + 1], {}});
  for (const auto& v : votes) {
    const double s = pink_side_scores.at(v.sample_id);
    for (std::size_t i = 0; i < out.brackets.size(); ++i) {
      const auto& b = out.brackets[i];
      const bool above = i == 0 ? s >= b.lower : s > b.lower;
      if (above && s <= b.upper) {
        out.brackets[i].tally.Add(v.chosen);
        break;
      }
    }
  }
  for (auto& b : out.brackets) b.tally.Finish();
  return out;
}

DiscrepancyBreakdown BreakdownDiscrepancies(
    std::span<const judge::DiscrepancyLabel> labels) {
  using judge::DiscrepancyLabel;
  DiscrepancyBreakdown out;
  for (auto label : {DiscrepancyLabel::kFormattingOnly,
                     DiscrepancyLabel::kIncludesFormatting,
                     DiscrepancyLabel::kSemanticOnly})
    out.counts[std::string(judge::DiscrepancyLabelName(label))] = 0;
  for (auto label : labels) {
    ++out.total_pairs;
    if (label == DiscrepancyLabel::kNoDiscrepancy) continue;
    ++out.discrepant;
    ++out.counts[std::string(judge::DiscrepancyLabelName(label))];
  }
  if (out.discrepant == 0) {
    out.counts.clear();
    return out;
  }
  const double d = static_cast<double>(out.discrepant);
  for (const auto& [name, c] : out.counts)
    out.percent[name] = 100.0 * static_cast<double>(c) / d;
  const long long formatting =
      out.counts.at("formatting_only") + out.counts.at("includes_formatting");
  out.formatting_involved_percent = 100.0 * static_cast<double>(formatting) / d;
  return out;
}

}  // namespace pink::analysis

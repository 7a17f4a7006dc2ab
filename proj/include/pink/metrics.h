#ifndef PINK_METRICS_H_
#define PINK_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pink/datamodel.h"

namespace pink::metrics {

struct PinkBreakdown {
  double value = 0.0;
  long long penalized_sum = 0;
  long long oracle_sum = 0;
  std::size_t included = 0;
  // Records whose oracle total is 0 carry no faithfulness signal and are left
  // out of both sums.
  std::size_t excluded_zero_oracle = 0;
};

// Sum of penalized totals over sum of oracle totals. Throws kEmptyInput or
// kAllOraclesZero.
PinkBreakdown ComputePink(std::span<const EvalRecord> records);
double PinkScore(std::span<const EvalRecord> records);

enum class BleuMode { kCorpus, kSentenceAverage };

struct BleuConfig {
  int max_order = 4;
  // Zero n-gram match counts for orders >= 2 are replaced by this value.
  double smoothing_epsilon = 0.1;
  BleuMode mode = BleuMode::kCorpus;

  // Stamped into reports; BLEU values are comparable only within a variant.
  std::string VariantName() const;
};

BleuMode ParseBleuMode(std::string_view name);

// Whitespace tokenization after splitting the math delimiters
// { } ^ _ \ $ = + - * / ( ) and U+2212 into tokens of their own.
std::vector<std::string> TokenizeMath(std::string_view text);

struct TextPair {
  std::string reference;
  std::string hypothesis;
};

// BLEU over the pairs (corpus-level or mean sentence-level, per config).
// Orders with no hypothesis n-grams drop out of the geometric mean, so short
// identical texts still score 1.0. No unigram match at all yields 0.0.
// Throws kEmptyInput.
double Bleu(std::span<const TextPair> pairs, const BleuConfig& config = {});
double SentenceBleu(std::string_view reference, std::string_view hypothesis,
                    const BleuConfig& config = {});

// Unicode code points of a UTF-8 string; invalid bytes map to themselves.
std::u32string DecodeUtf8(std::string_view text);

// Levenshtein distance over code points.
std::size_t EditDistance(std::u32string_view a, std::u32string_view b);
std::size_t EditDistance(std::string_view a, std::string_view b);

// Levenshtein distance / max(len(reference), len(hypothesis)); 0 when both
// are empty.
double NormEditDistance(std::string_view reference, std::string_view hypothesis);

// Fraction of records with at least one component delta > 0.
double OcRate(std::span<const EvalRecord> records);

struct MagnitudeHistogram {
  // Bins (e0,e1], (e1,e2], (e2,e3], (e3,e4] with e_k = k * component_max / 4.
  std::array<double, 5> edges{};
  std::array<long long, 4> counts{};
  std::array<double, 4> percent{};
  long long total = 0;
};

MagnitudeHistogram OcMagnitudeHistogram(
    std::span<const EvalRecord> records,
    int component_max = kDefaultComponentMax);

struct ModelAggregate {
  std::string model_id;
  double pink = 0.0;
  double bleu = 0.0;
  double norm_edit_distance = 0.0;
  double oc_rate = 0.0;
  MagnitudeHistogram oc_histogram;
  std::size_t n_samples = 0;
  std::size_t excluded_zero_oracle = 0;
  long long event_count = 0;
  double mean_oracle = 0.0;
  double mean_model = 0.0;  // pre-penalty rubric score
  double mean_penalized = 0.0;
};

// Aggregates one model's records. `texts` holds (ground truth, OCR output)
// pairs for the same samples; they are reduced in the order given, so callers
// pass them sorted by sample_id.
ModelAggregate Aggregate(const std::string& model_id,
                         std::span<const EvalRecord> records,
                         std::span<const TextPair> texts,
                         const BleuConfig& bleu_config = {},
                         int component_max = kDefaultComponentMax);

}  // namespace pink::metrics

#endif  // PINK_METRICS_H_

#include "pink/metrics.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "pink/error.h"

namespace pink::metrics {
namespace {

struct NgramStats {
  std::vector<long long> matches;
  std::vector<long long> totals;
  long long hyp_len = 0;
  long long ref_len = 0;
};

using Ngram = std::vector<std::string>;

std::map<Ngram, long long> CountNgrams(const std::vector<std::string>& tokens,
                                       int order) {
  std::map<Ngram, long long> counts;
  if (static_cast<int>(tokens.size()) < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + order)];
  }
  return counts;
}

void Accumulate(std::string_view reference, std::string_view hypothesis,
                int max_order, NgramStats& stats) {
  const auto ref = TokenizeMath(reference);
  const auto hyp = TokenizeMath(hypothesis);
  stats.hyp_len += static_cast<long long>(hyp.size());
  stats.ref_len += static_cast<long long>(ref.size());
  for (int n = 1; n <= max_order; ++n) {
    const auto hyp_counts = CountNgrams(hyp, n);
    const auto ref_counts = CountNgrams(ref, n);
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) stats.matches[n - 1] += std::min(count, it->second);
      stats.totals[n - 1] += count;
    }
  }
}

double Score(const NgramStats& stats, const BleuConfig& config) {
  if (stats.hyp_len == 0) return stats.ref_len == 0 ? 1.0 : 0.0;
  if (stats.matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  int effective_order = 0;
  for (int n = 0; n < config.max_order; ++n) {
    if (stats.totals[n] == 0) continue;
    const double matched = stats.matches[n] > 0
                               ? static_cast<double>(stats.matches[n])
                               : config.smoothing_epsilon;
    log_sum += std::log(matched / static_cast<double>(stats.totals[n]));
    ++effective_order;
  }
  const double c = static_cast<double>(stats.hyp_len);
  const double r = static_cast<double>(stats.ref_len);
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / effective_order);
}

NgramStats EmptyStats(int max_order) {
  NgramStats stats;
  stats.matches.assign(max_order, 0);
  stats.totals.assign(max_order, 0);
  return stats;
}

bool IsDelimiter(char32_t c) {
  switch (c) {
    case U'{': case U'}': case U'^': case U'_': case U'\\': case U'$':
    case U'=': case U'+': case U'-': case U'*': case U'/': case U'(':
    case U')': case U'−':
      return true;
    default:
      return false;
  }
}

bool IsSpace(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v';
}

void AppendUtf8(char32_t c, std::string& out) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

}  // namespace

PinkBreakdown ComputePink(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "PINK of no records");
  PinkBreakdown out;
  for (const auto& record : records) {
    if (record.oracle.total() == 0) {
      ++out.excluded_zero_oracle;
      continue;
    }
    out.penalized_sum += record.penalized_total;
    out.oracle_sum += record.oracle.total();
    ++out.included;
  }
  if (out.included == 0) {
    throw Error(ErrorCode::kAllOraclesZero, "every oracle total is zero");
  }
  out.value = static_cast<double>(out.penalized_sum) /
              static_cast<double>(out.oracle_sum);
  // Penalized components never exceed the oracle's, so PINK is bounded by 1.
  assert(out.value <= 1.0 + 1e-12);
  return out;
}

double PinkScore(std::span<const EvalRecord> records) {
  return ComputePink(records).value;
}

std::string BleuConfig::VariantName() const {
  char epsilon[32];
  std::snprintf(epsilon, sizeof(epsilon), "%g", smoothing_epsilon);
  return "bleu" + std::to_string(max_order) + "-mathtok-floor" + epsilon +
         (mode == BleuMode::kCorpus ? "-corpus" : "-sentavg");
}

BleuMode ParseBleuMode(std::string_view name) {
  if (name == "corpus") return BleuMode::kCorpus;
  if (name == "sentence" || name == "sentence_average") {
    return BleuMode::kSentenceAverage;
  }
  throw Error(ErrorCode::kConfigError,
              "unknown bleu mode '" + std::string(name) + "'");
}

std::vector<std::string> TokenizeMath(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char32_t c : DecodeUtf8(text)) {
    if (IsSpace(c)) {
      flush();
    } else if (IsDelimiter(c)) {
      flush();
      std::string delimiter;
      AppendUtf8(c, delimiter);
      tokens.push_back(std::move(delimiter));
    } else {
      AppendUtf8(c, current);
    }
  }
  flush();
  return tokens;
}

double Bleu(std::span<const TextPair> pairs, const BleuConfig& config) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "BLEU of no pairs");
  if (config.mode == BleuMode::kSentenceAverage) {
    double sum = 0.0;
    for (const auto& pair : pairs) {
      sum += SentenceBleu(pair.reference, pair.hypothesis, config);
    }
    return sum / static_cast<double>(pairs.size());
  }
  NgramStats stats = EmptyStats(config.max_order);
  for (const auto& pair : pairs) {
    Accumulate(pair.reference, pair.hypothesis, config.max_order, stats);
  }
  return Score(stats, config);
}

double SentenceBleu(std::string_view reference, std::string_view hypothesis,
                    const BleuConfig& config) {
  NgramStats stats = EmptyStats(config.max_order);
  Accumulate(reference, hypothesis, config.max_order, stats);
  return Score(stats, config);
}

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = lead;
    if (lead >= 0xF0 && lead < 0xF8) {
      extra = 3;
      cp = lead & 0x07;
    } else if (lead >= 0xE0) {
      extra = lead < 0xF0 ? 2 : 0;
      cp = lead & 0x0F;
    } else if (lead >= 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    }
    bool valid = extra > 0;
    for (int k = 1; valid && k <= extra; ++k) {
      if (i + k >= text.size()) {
        valid = false;
        break;
      }
      const auto next = static_cast<unsigned char>(text[i + k]);
      if ((next & 0xC0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (next & 0x3F);
    }
    if (extra > 0 && valid) {
      out.push_back(cp);
      i += extra + 1;
    } else {
      out.push_back(lead);
      ++i;
    }
  }
  return out;
}

std::size_t EditDistance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> previous(b.size() + 1), current(b.size() + 1);
  std::iota(previous.begin(), previous.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    current[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t substitution =
          previous[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      current[j] = std::min({previous[j] + 1, current[j - 1] + 1, substitution});
    }
    std::swap(previous, current);
  }
  return previous[b.size()];
}

std::size_t EditDistance(std::string_view a, std::string_view b) {
  return EditDistance(DecodeUtf8(a), DecodeUtf8(b));
}

double NormEditDistance(std::string_view reference,
                        std::string_view hypothesis) {
  const auto ref = DecodeUtf8(reference);
  const auto hyp = DecodeUtf8(hypothesis);
  const std::size_t longest = std::max(ref.size(), hyp.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(EditDistance(ref, hyp)) /
         static_cast<double>(longest);
}

double OcRate(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "OC rate of no records");
  const auto with_event = std::count_if(
      records.begin(), records.end(),
      [](const EvalRecord& record) { return record.HasEvent(); });
  return static_cast<double>(with_event) / static_cast<double>(records.size());
}

MagnitudeHistogram OcMagnitudeHistogram(std::span<const EvalRecord> records,
                                        int component_max) {
  MagnitudeHistogram histogram;
  for (int k = 0; k <= 4; ++k) {
    histogram.edges[k] = component_max * static_cast<double>(k) / 4.0;
  }
  for (const auto& record : records) {
    for (int delta : record.deltas) {
      if (delta <= 0) continue;
      std::size_t bin = 3;
      for (std::size_t k = 0; k < 4; ++k) {
        if (delta <= histogram.edges[k + 1]) {
          bin = k;
          break;
        }
      }
      ++histogram.counts[bin];
      ++histogram.total;
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    histogram.percent[k] =
        histogram.total == 0
            ? 0.0
            : 100.0 * static_cast<double>(histogram.counts[k]) /
                  static_cast<double>(histogram.total);
  }
  return histogram;
}

ModelAggregate Aggregate(const std::string& model_id,
                         std::span<const EvalRecord> records,
                         std::span<const TextPair> texts,
                         const BleuConfig& bleu_config, int component_max) {
  ModelAggregate out;
  out.model_id = model_id;
  const PinkBreakdown pink = ComputePink(records);
  out.pink = pink.value;
  out.excluded_zero_oracle = pink.excluded_zero_oracle;
  out.n_samples = records.size();
  out.oc_rate = OcRate(records);
  out.oc_histogram = OcMagnitudeHistogram(records, component_max);
  out.event_count = out.oc_histogram.total;
  long long oracle = 0, model = 0, penalized = 0;
  for (const auto& record : records) {
    oracle += record.oracle.total();
    model += record.model.total();
    penalized += record.penalized_total;
  }
  const auto n = static_cast<double>(records.size());
  out.mean_oracle = static_cast<double>(oracle) / n;
  out.mean_model = static_cast<double>(model) / n;
  out.mean_penalized = static_cast<double>(penalized) / n;
  if (!texts.empty()) {
    out.bleu = Bleu(texts, bleu_config);
    double distance = 0.0;
    for (const auto& pair : texts) {
      distance += NormEditDistance(pair.reference, pair.hypothesis);
    }
    out.norm_edit_distance = distance / static_cast<double>(texts.size());
  }
  return out;
}

}  // namespace pink::metrics

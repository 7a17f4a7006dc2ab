#ifndef PINK_DATAMODEL_H_
#define PINK_DATAMODEL_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace pink {

inline constexpr int kDefaultNumComponents = 5;
inline constexpr int kDefaultComponentMax = 20;
inline constexpr int kRubricTotal = 100;

// Canonical names of the five default rubric components, in grading order.
const std::vector<std::string>& DefaultComponentNames();

// Shape of the grading rubric: R components, each scored in [0, component_max].
// Custom rubrics keep R * component_max == 100.
struct RubricSpec {
  int num_components = kDefaultNumComponents;
  int component_max = kDefaultComponentMax;
  std::vector<std::string> names = DefaultComponentNames();

  static RubricSpec Default() { return {}; }
  // Throws kInvalidRubric if 100 / num_components is not integral.
  static RubricSpec Custom(int num_components);

  int max_total() const { return num_components * component_max; }
  void Validate() const;

  bool operator==(const RubricSpec&) const = default;
};

class RubricScore {
 public:
  RubricScore() = default;
  // Unchecked; use ValidateRubricScore for untrusted input.
  explicit RubricScore(std::vector<int> components);

  std::span<const int> components() const { return components_; }
  int operator[](std::size_t r) const { return components_[r]; }
  std::size_t size() const { return components_.size(); }
  int total() const { return total_; }

  bool operator==(const RubricScore&) const = default;

 private:
  std::vector<int> components_;
  int total_ = 0;
};

// Returns a RubricScore iff raw has exactly `num_components` entries, each in
// [0, component_max]. Throws kWrongArity or kOutOfRange (message carries the
// index and value).
RubricScore ValidateRubricScore(std::span<const int> raw, int num_components,
                                int component_max);

// Transcription prompt variant: "standard", "mitigated", or a custom name.
class PromptVariant {
 public:
  enum class Kind { kStandard, kMitigated, kCustom };

  PromptVariant() = default;
  static PromptVariant Standard() { return PromptVariant("standard"); }
  static PromptVariant Mitigated() { return PromptVariant("mitigated"); }
  static PromptVariant Custom(std::string name);
  // Accepts "standard", "mitigated", "custom:<name>" or a bare custom name.
  static PromptVariant Parse(std::string_view text);

  Kind kind() const;
  const std::string& name() const { return name_; }
  std::string ToString() const;

  auto operator<=>(const PromptVariant&) const = default;

 private:
  explicit PromptVariant(std::string name) : name_(std::move(name)) {}
  std::string name_ = "standard";
};

struct SolutionSample {
  std::string sample_id;
  std::string problem_id;
  std::string problem_text;
  std::string reference_solution;
  // Faithful transcription of the handwritten solution, student errors kept.
  std::string gt_transcription;
  std::optional<std::string> image_ref;
  std::optional<std::string> perturbation_tag;
  bool is_clean = false;

  bool operator==(const SolutionSample&) const = default;
};

struct CorpusMetadata {
  std::string name;
  std::string version;
  std::string source;
  RubricSpec rubric;

  bool operator==(const CorpusMetadata&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(CorpusMetadata metadata, std::vector<SolutionSample> samples);

  const CorpusMetadata& metadata() const { return metadata_; }
  const std::vector<SolutionSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const SolutionSample* Find(std::string_view sample_id) const;
  // Content digest of the serialized corpus.
  std::string Hash() const;

  bool operator==(const Corpus& other) const {
    return metadata_ == other.metadata_ && samples_ == other.samples_;
  }

 private:
  CorpusMetadata metadata_;
  std::vector<SolutionSample> samples_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Loads a line-delimited corpus file. An optional first line of the form
// {"corpus_meta": {...}} carries name/version/source and the rubric shape.
// Image references resolve relative to the corpus file's directory. All
// problems are collected; the thrown Error carries the first offending line
// and its message lists every problem found.
Corpus LoadCorpus(const std::filesystem::path& path);

// Serializes a corpus in the format LoadCorpus reads.
std::string SerializeCorpus(const Corpus& corpus);

struct Transcription {
  std::string sample_id;
  std::string model_id;
  PromptVariant prompt_variant;
  std::string text;  // verbatim, never normalized

  bool operator==(const Transcription&) const = default;
};

class TranscriptionSet {
 public:
  using Key = std::tuple<std::string, std::string, PromptVariant>;

  // Throws kDuplicateKey if the key is already present.
  void Insert(Transcription transcription,
              std::optional<std::size_t> line = std::nullopt);

  const Transcription* Find(std::string_view sample_id,
                            std::string_view model_id,
                            const PromptVariant& variant) const;
  std::size_t size() const { return entries_.size(); }
  // Ordered by (sample_id, model_id, variant).
  std::vector<const Transcription*> All() const;
  std::vector<std::string> Models(const PromptVariant& variant) const;
  std::vector<PromptVariant> Variants() const;

 private:
  std::map<Key, Transcription> entries_;
};

// Loads transcription records and checks every sample_id against `corpus`.
// Throws kUnknownSampleId, kDuplicateKey, kMissingField, kMalformedRecord.
TranscriptionSet LoadTranscriptions(const std::filesystem::path& path,
                                    const Corpus& corpus);
void LoadTranscriptionsInto(const std::filesystem::path& path,
                            const Corpus& corpus, TranscriptionSet& into);

enum class OverCorrection { kNoEvent, kMinor, kMajor };

std::string_view OverCorrectionName(OverCorrection value);
OverCorrection ParseOverCorrection(std::string_view text);

// One (sample x model x judge x run) grading outcome.
struct EvalRecord {
  std::string sample_id;
  std::string model_id;
  std::string judge_id;
  std::string rubric_variant = "original";
  std::string prompt_variant = "standard";
  int run_index = 0;
  RubricScore oracle;
  RubricScore model;
  std::vector<int> deltas;
  std::vector<OverCorrection> classifications;
  std::vector<int> penalized;
  int penalized_total = 0;
  int threshold_used = 10;

  bool HasEvent() const;
  bool operator==(const EvalRecord&) const = default;
};

void to_json(nlohmann::json& j, const RubricScore& score);
void from_json(const nlohmann::json& j, RubricScore& score);
void to_json(nlohmann::json& j, const SolutionSample& sample);
void to_json(nlohmann::json& j, const Transcription& transcription);
void to_json(nlohmann::json& j, const EvalRecord& record);
void from_json(const nlohmann::json& j, EvalRecord& record);

}  // namespace pink

#endif  // PINK_DATAMODEL_H_

#include "pink/datamodel.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/io.h"

namespace pink {
namespace {

using nlohmann::json;

struct Issue {
  ErrorCode code;
  std::size_t line;
  std::string message;
};

[[noreturn]] void ThrowIssues(const std::filesystem::path& path,
                              const std::vector<Issue>& issues) {
  std::ostringstream report;
  report << path.string() << ": " << issues.size() << " problem(s)";
  for (const Issue& issue : issues) {
    report << "\n  line " << issue.line << ": " << ErrorCodeName(issue.code)
           << ": " << issue.message;
  }
  throw Error(issues.front().code, report.str(), issues.front().line);
}

// Reads a string field. Missing -> kMissingField; wrong type -> kMalformedRecord.
std::optional<std::string> StringField(const json& object, const char* key,
                                       bool required, std::size_t line,
                                       std::vector<Issue>& issues) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) {
    if (required) {
      issues.push_back({ErrorCode::kMissingField, line,
                        std::string("missing field '") + key + "'"});
    }
    return std::nullopt;
  }
  if (!it->is_string()) {
    issues.push_back({ErrorCode::kMalformedRecord, line,
                      std::string("field '") + key + "' must be a string"});
    return std::nullopt;
  }
  return it->get<std::string>();
}

std::optional<json> ParseObject(const io::NumberedLine& line,
                                std::vector<Issue>& issues) {
  json parsed = json::parse(line.text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    issues.push_back(
        {ErrorCode::kMalformedRecord, line.number, "not a JSON object"});
    return std::nullopt;
  }
  return parsed;
}

CorpusMetadata ParseMetadata(const json& meta, std::size_t line,
                             std::vector<Issue>& issues) {
  CorpusMetadata out;
  out.name = meta.value("name", "");
  out.version = meta.value("version", "");
  out.source = meta.value("source", "");
  if (meta.contains("rubric_components")) {
    try {
      out.rubric = RubricSpec::Custom(meta.at("rubric_components").get<int>());
      if (meta.contains("component_names")) {
        out.rubric.names =
            meta.at("component_names").get<std::vector<std::string>>();
      }
      out.rubric.Validate();
    } catch (const Error& e) {
      issues.push_back({e.code(), line, e.what()});
    } catch (const json::exception& e) {
      issues.push_back({ErrorCode::kMalformedRecord, line, e.what()});
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& DefaultComponentNames() {
  static const std::vector<std::string> kNames = {
      "formula_identification", "boundary_conditions", "calc_early",
      "calc_late", "final_answer"};
  return kNames;
}

RubricSpec RubricSpec::Custom(int num_components) {
  if (num_components <= 0 || kRubricTotal % num_components != 0) {
    throw Error(ErrorCode::kInvalidRubric,
                "100 / R must be integral, got R=" +
                    std::to_string(num_components));
  }
  RubricSpec spec;
  spec.num_components = num_components;
  spec.component_max = kRubricTotal / num_components;
  if (num_components != kDefaultNumComponents) {
    spec.names.clear();
    for (int r = 1; r <= num_components; ++r) {
      spec.names.push_back("component_" + std::to_string(r));
    }
  }
  return spec;
}

void RubricSpec::Validate() const {
  if (num_components <= 0 || component_max <= 0 ||
      num_components * component_max != kRubricTotal) {
    throw Error(ErrorCode::kInvalidRubric,
                "rubric must satisfy R * component_max == 100");
  }
  if (static_cast<int>(names.size()) != num_components) {
    throw Error(ErrorCode::kInvalidRubric,
                "rubric needs exactly one name per component");
  }
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) {
    throw Error(ErrorCode::kInvalidRubric, "component names must be unique");
  }
}

RubricScore::RubricScore(std::vector<int> components)
    : components_(std::move(components)),
      total_(std::accumulate(components_.begin(), components_.end(), 0)) {}

RubricScore ValidateRubricScore(std::span<const int> raw, int num_components,
                                int component_max) {
  if (static_cast<int>(raw.size()) != num_components) {
    throw Error(ErrorCode::kWrongArity,
                "expected " + std::to_string(num_components) +
                    " components, got " + std::to_string(raw.size()));
  }
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (raw[r] < 0 || raw[r] > component_max) {
      throw Error(ErrorCode::kOutOfRange,
                  "component " + std::to_string(r) + " = " +
                      std::to_string(raw[r]) + " outside [0, " +
                      std::to_string(component_max) + "]");
    }
  }
  return RubricScore(std::vector<int>(raw.begin(), raw.end()));
}

PromptVariant PromptVariant::Custom(std::string name) {
  return PromptVariant(std::move(name));
}

PromptVariant PromptVariant::Parse(std::string_view text) {
  constexpr std::string_view kPrefix = "custom:";
  if (text.substr(0, kPrefix.size()) == kPrefix) text.remove_prefix(kPrefix.size());
  if (text.empty()) {
    throw Error(ErrorCode::kMalformedRecord, "empty prompt_variant");
  }
  return PromptVariant(std::string(text));
}

PromptVariant::Kind PromptVariant::kind() const {
  if (name_ == "standard") return Kind::kStandard;
  if (name_ == "mitigated") return Kind::kMitigated;
  return Kind::kCustom;
}

std::string PromptVariant::ToString() const { return name_; }

Corpus::Corpus(CorpusMetadata metadata, std::vector<SolutionSample> samples)
    : metadata_(std::move(metadata)), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    index_.emplace(samples_[i].sample_id, i);
  }
}

const SolutionSample* Corpus::Find(std::string_view sample_id) const {
  auto it = index_.find(sample_id);
  return it == index_.end() ? nullptr : &samples_[it->second];
}

std::string Corpus::Hash() const { return Sha256Hex(SerializeCorpus(*this)); }

Corpus LoadCorpus(const std::filesystem::path& path) {
  const auto lines = io::ReadLines(path);
  const auto base_dir = path.parent_path();
  std::vector<Issue> issues;
  CorpusMetadata metadata;
  metadata.name = path.stem().string();
  std::vector<SolutionSample> samples;
  std::map<std::string, std::size_t> seen;  // sample_id -> first line

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    auto object = ParseObject(line, issues);
    if (!object) continue;
    if (object->contains("corpus_meta")) {
      if (i != 0 || !object->at("corpus_meta").is_object()) {
        issues.push_back({ErrorCode::kMalformedRecord, line.number,
                          "corpus_meta must be the first record"});
        continue;
      }
      std::string default_name = metadata.name;
      metadata = ParseMetadata(object->at("corpus_meta"), line.number, issues);
      if (metadata.name.empty()) metadata.name = default_name;
      continue;
    }

    const std::size_t before = issues.size();
    SolutionSample sample;
    auto sample_id = StringField(*object, "sample_id", true, line.number, issues);
    auto problem_id = StringField(*object, "problem_id", true, line.number, issues);
    auto problem = StringField(*object, "problem_text", true, line.number, issues);
    auto reference =
        StringField(*object, "reference_solution", true, line.number, issues);
    auto gt = StringField(*object, "gt_transcription", true, line.number, issues);
    sample.image_ref = StringField(*object, "image_ref", false, line.number, issues);
    sample.perturbation_tag =
        StringField(*object, "perturbation_tag", false, line.number, issues);
    auto clean = object->find("is_clean");
    if (clean == object->end()) {
      issues.push_back(
          {ErrorCode::kMissingField, line.number, "missing field 'is_clean'"});
    } else if (!clean->is_boolean()) {
      issues.push_back({ErrorCode::kMalformedRecord, line.number,
                        "field 'is_clean' must be a boolean"});
    } else {
      sample.is_clean = clean->get<bool>();
    }
    if (sample_id && sample_id->empty()) {
      issues.push_back(
          {ErrorCode::kMissingField, line.number, "empty 'sample_id'"});
    }
    if (gt && gt->empty()) {
      issues.push_back({ErrorCode::kEmptyTranscription, line.number,
                        "gt_transcription is empty"});
    }
    if (sample_id && !sample_id->empty()) {
      auto [it, inserted] = seen.emplace(*sample_id, line.number);
      if (!inserted) {
        issues.push_back({ErrorCode::kDuplicateSampleId, line.number,
                          "sample_id '" + *sample_id +
                              "' already defined on line " +
                              std::to_string(it->second)});
      }
    }
    if (sample.image_ref &&
        !std::filesystem::exists(base_dir / *sample.image_ref)) {
      issues.push_back({ErrorCode::kUnresolvableImageRef, line.number,
                        "image_ref '" + *sample.image_ref + "' not found"});
    }
    if (issues.size() != before) continue;
    sample.sample_id = std::move(*sample_id);
    sample.problem_id = std::move(*problem_id);
    sample.problem_text = std::move(*problem);
    sample.reference_solution = std::move(*reference);
    sample.gt_transcription = std::move(*gt);
    samples.push_back(std::move(sample));
  }
  if (!issues.empty()) ThrowIssues(path, issues);
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, path.string() + " has no samples");
  }
  return Corpus(std::move(metadata), std::move(samples));
}

std::string SerializeCorpus(const Corpus& corpus) {
  const auto& meta = corpus.metadata();
  json header = {{"name", meta.name},
                 {"version", meta.version},
                 {"source", meta.source},
                 {"rubric_components", meta.rubric.num_components},
                 {"component_names", meta.rubric.names}};
  std::string out = json{{"corpus_meta", header}}.dump() + "\n";
  for (const auto& sample : corpus.samples()) {
    out += json(sample).dump() + "\n";
  }
  return out;
}

void TranscriptionSet::Insert(Transcription transcription,
                              std::optional<std::size_t> line) {
  Key key{transcription.sample_id, transcription.model_id,
          transcription.prompt_variant};
  if (entries_.contains(key)) {
    throw Error(ErrorCode::kDuplicateKey,
                "duplicate transcription (" + transcription.sample_id + ", " +
                    transcription.model_id + ", " +
                    transcription.prompt_variant.ToString() + ")",
                line);
  }
  entries_.emplace(std::move(key), std::move(transcription));
}

const Transcription* TranscriptionSet::Find(std::string_view sample_id,
                                            std::string_view model_id,
                                            const PromptVariant& variant) const {
  auto it = entries_.find(
      Key{std::string(sample_id), std::string(model_id), variant});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const Transcription*> TranscriptionSet::All() const {
  std::vector<const Transcription*> out;
  out.reserve(entries_.size());
  for (const auto& [key, value] : entries_) out.push_back(&value);
  return out;
}

std::vector<std::string> TranscriptionSet::Models(
    const PromptVariant& variant) const {
  std::set<std::string> models;
  for (const auto& [key, value] : entries_) {
    if (value.prompt_variant == variant) models.insert(value.model_id);
  }
  return {models.begin(), models.end()};
}

std::vector<PromptVariant> TranscriptionSet::Variants() const {
  std::set<PromptVariant> variants;
  for (const auto& [key, value] : entries_) variants.insert(value.prompt_variant);
  return {variants.begin(), variants.end()};
}

TranscriptionSet LoadTranscriptions(const std::filesystem::path& path,
                                    const Corpus& corpus) {
  TranscriptionSet set;
  LoadTranscriptionsInto(path, corpus, set);
  return set;
}

void LoadTranscriptionsInto(const std::filesystem::path& path,
                            const Corpus& corpus, TranscriptionSet& into) {
  for (const auto& line : io::ReadLines(path)) {
    std::vector<Issue> issues;
    auto object = ParseObject(line, issues);
    std::optional<std::string> sample_id, model_id, variant, text;
    if (object) {
      sample_id = StringField(*object, "sample_id", true, line.number, issues);
      model_id = StringField(*object, "model_id", true, line.number, issues);
      variant = StringField(*object, "prompt_variant", true, line.number, issues);
      text = StringField(*object, "text", true, line.number, issues);
    }
    if (!issues.empty()) {
      throw Error(issues.front().code,
                  path.string() + ": " + issues.front().message, line.number);
    }
    if (!corpus.Find(*sample_id)) {
      throw Error(ErrorCode::kUnknownSampleId,
                  path.string() + ": sample_id '" + *sample_id +
                      "' is not in the corpus",
                  line.number);
    }
    into.Insert({std::move(*sample_id), std::move(*model_id),
                 PromptVariant::Parse(*variant), std::move(*text)},
                line.number);
  }
}

std::string_view OverCorrectionName(OverCorrection value) {
  switch (value) {
    case OverCorrection::kNoEvent: return "none";
    case OverCorrection::kMinor: return "minor";
    case OverCorrection::kMajor: return "major";
  }
  return "none";
}

OverCorrection ParseOverCorrection(std::string_view text) {
  if (text == "none") return OverCorrection::kNoEvent;
  if (text == "minor") return OverCorrection::kMinor;
  if (text == "major") return OverCorrection::kMajor;
  throw Error(ErrorCode::kMalformedRecord,
              "unknown classification '" + std::string(text) + "'");
}

bool EvalRecord::HasEvent() const {
  return std::any_of(deltas.begin(), deltas.end(),
                     [](int delta) { return delta > 0; });
}

void to_json(json& j, const RubricScore& score) {
  j = json::array();
  for (int value : score.components()) j.push_back(value);
}

void from_json(const json& j, RubricScore& score) {
  score = RubricScore(j.get<std::vector<int>>());
}

void to_json(json& j, const SolutionSample& sample) {
  j = json{{"sample_id", sample.sample_id},
           {"problem_id", sample.problem_id},
           {"problem_text", sample.problem_text},
           {"reference_solution", sample.reference_solution},
           {"gt_transcription", sample.gt_transcription}};
  if (sample.image_ref) j["image_ref"] = *sample.image_ref;
  if (sample.perturbation_tag) j["perturbation_tag"] = *sample.perturbation_tag;
  j["is_clean"] = sample.is_clean;
}

void to_json(json& j, const Transcription& transcription) {
  j = json{{"sample_id", transcription.sample_id},
           {"model_id", transcription.model_id},
           {"prompt_variant", transcription.prompt_variant.ToString()},
           {"text", transcription.text}};
}

void to_json(json& j, const EvalRecord& record) {
  std::vector<std::string> classes;
  for (auto value : record.classifications) {
    classes.emplace_back(OverCorrectionName(value));
  }
  j = json{{"sample_id", record.sample_id},
           {"model_id", record.model_id},
           {"judge_id", record.judge_id},
           {"rubric_variant", record.rubric_variant},
           {"prompt_variant", record.prompt_variant},
           {"run_index", record.run_index},
           {"oracle", record.oracle},
           {"model", record.model},
           {"deltas", record.deltas},
           {"classifications", classes},
           {"penalized", record.penalized},
           {"penalized_total", record.penalized_total},
           {"threshold_used", record.threshold_used}};
}

void from_json(const json& j, EvalRecord& record) {
  record.sample_id = j.at("sample_id").get<std::string>();
  record.model_id = j.at("model_id").get<std::string>();
  record.judge_id = j.at("judge_id").get<std::string>();
  record.rubric_variant = j.value("rubric_variant", "original");
  record.prompt_variant = j.value("prompt_variant", "standard");
  record.run_index = j.at("run_index").get<int>();
  record.oracle = j.at("oracle").get<RubricScore>();
  record.model = j.at("model").get<RubricScore>();
  record.deltas = j.at("deltas").get<std::vector<int>>();
  record.classifications.clear();
  for (const auto& name : j.at("classifications")) {
    record.classifications.push_back(
        ParseOverCorrection(name.get<std::string>()));
  }
  record.penalized = j.at("penalized").get<std::vector<int>>();
  record.penalized_total = j.at("penalized_total").get<int>();
  record.threshold_used = j.at("threshold_used").get<int>();
}

}  // namespace pink

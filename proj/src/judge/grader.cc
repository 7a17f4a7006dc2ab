#include "pink/judge/grader.h"

#include <thread>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/judge/prompts.h"

namespace pink::judge {
namespace {

using nlohmann::json;

json ToCacheEntry(const GradeResponse& response) {
  return json{{"raw_text", response.raw_text},
              {"components", response.components},
              {"justifications", response.justifications}};
}

GradeResponse FromCacheEntry(const json& entry) {
  GradeResponse response;
  response.raw_text = entry.at("raw_text").get<std::string>();
  response.components = entry.at("components").get<std::vector<int>>();
  response.justifications =
      entry.at("justifications").get<std::vector<std::string>>();
  return response;
}

std::string VariantFingerprint(const RubricPromptVariant& variant) {
  FieldHasher hasher;
  hasher.Add(variant.name);
  for (const auto& [from, to] : variant.substitutions) hasher.Add(from).Add(to);
  return hasher.HexDigest();
}

constexpr std::string_view kLabelReminder =
    "\n\nFORMAT REMINDER: end your reply with one fenced block tagged `label` "
    "containing exactly one line `label: <class>`.\n";

}  // namespace

Grader::Grader(JudgeConfig config, std::shared_ptr<JudgeBackend> backend,
               std::shared_ptr<GradeCache> cache, RubricSpec rubric)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      cache_(cache ? std::move(cache) : std::make_shared<GradeCache>()),
      rubric_(std::move(rubric)) {}

std::string Grader::CacheKey(std::string_view problem_text,
                             std::string_view reference_solution,
                             std::string_view candidate_text,
                             int run_index) const {
  FieldHasher hasher;
  hasher.Add("grade")
      .Add(config_.judge_id)
      .Add(config_.model_name)
      .Add(VariantFingerprint(config_.rubric_prompt_variant))
      .Add(GradeContentHash(problem_text, reference_solution, candidate_text))
      .Add(run_index);
  for (const auto& name : rubric_.names) hasher.Add(name);
  return hasher.HexDigest();
}

GradeResponse Grader::Grade(std::string_view problem_text,
                            std::string_view reference_solution,
                            std::string_view candidate_text, int run_index) {
  return GradeImpl({problem_text, reference_solution, candidate_text, run_index},
                   /*is_oracle=*/false);
}

GradedPair Grader::GradePair(const SolutionSample& sample,
                             const Transcription& transcription, int run_index) {
  if (sample.sample_id != transcription.sample_id) {
    throw Error(ErrorCode::kPrecondition,
                "sample '" + sample.sample_id + "' paired with transcription of '" +
                    transcription.sample_id + "'");
  }
  GradedPair pair;
  pair.oracle = GradeImpl({sample.problem_text, sample.reference_solution,
                           sample.gt_transcription, run_index},
                          /*is_oracle=*/true)
                    .Score();
  pair.model = GradeImpl({sample.problem_text, sample.reference_solution,
                          transcription.text, run_index},
                         /*is_oracle=*/false)
                   .Score();
  return pair;
}

GradeResponse Grader::GradeImpl(const GradeRequest& request, bool is_oracle) {
  // Validates the texts before any cache lookup.
  BuildGradingPrompt(request.problem_text, request.reference_solution,
                     request.candidate_text, config_.rubric_prompt_variant,
                     rubric_);
  const std::string key =
      CacheKey(request.problem_text, request.reference_solution,
               request.candidate_text, request.run_index);

  std::promise<GradeResponse> promise;
  {
    std::unique_lock lock(inflight_mutex_);
    if (auto entry = cache_->Get(key)) {
      ++cache_hits_;
      return FromCacheEntry(*entry);
    }
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto future = it->second;
      lock.unlock();
      ++cache_hits_;
      return future.get();
    }
    inflight_.emplace(key, promise.get_future().share());
  }

  auto finish = [&] {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
  };
  try {
    ++gradings_;
    if (is_oracle) ++oracle_gradings_;
    GradeResponse response = CallJudge(request);
    cache_->Put(key, ToCacheEntry(response));
    promise.set_value(response);
    finish();
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

GradeResponse Grader::CallJudge(const GradeRequest& request) {
  const std::string prompt =
      BuildGradingPrompt(request.problem_text, request.reference_solution,
                         request.candidate_text, config_.rubric_prompt_variant,
                         rubric_);
  std::string raw = WithRetries([&] { return backend_->Grade(request, prompt); });
  try {
    return ParseGradeResponse(raw, rubric_);
  } catch (const ParseError&) {
    ++reasks_;
  }
  const std::string reminder = prompt + std::string(FormatReminder());
  raw = WithRetries([&] { return backend_->Grade(request, reminder); });
  return ParseGradeResponse(raw, rubric_);
}

DiscrepancyLabel Grader::LabelDiscrepancy(std::string_view gt_transcription,
                                          std::string_view ocr_text) {
  if (gt_transcription == ocr_text) return DiscrepancyLabel::kNoDiscrepancy;
  const std::string key = FieldHasher()
                              .Add("label")
                              .Add(config_.judge_id)
                              .Add(config_.model_name)
                              .Add(LabelContentHash(gt_transcription, ocr_text))
                              .HexDigest();
  if (auto entry = cache_->Get(key)) {
    ++cache_hits_;
    return ParseDiscrepancyLabelName(entry->at("label").get<std::string>());
  }
  const std::string prompt = BuildLabelingPrompt(gt_transcription, ocr_text);
  std::string raw = WithRetries(
      [&] { return backend_->Label(gt_transcription, ocr_text, prompt); });
  DiscrepancyLabel label;
  try {
    label = ParseLabelResponse(raw);
  } catch (const ParseError&) {
    ++reasks_;
    const std::string reminder = prompt + std::string(kLabelReminder);
    raw = WithRetries(
        [&] { return backend_->Label(gt_transcription, ocr_text, reminder); });
    label = ParseLabelResponse(raw);
  }
  cache_->Put(key, json{{"raw_text", raw},
                        {"label", std::string(DiscrepancyLabelName(label))}});
  return label;
}

template <typename Fn>
std::string Grader::WithRetries(Fn&& call) {
  for (int attempt = 0;; ++attempt) {
    try {
      ++backend_calls_;
      return call();
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::kTransportError ||
                             e.code() == ErrorCode::kTimeout;
      if (!transient || attempt >= config_.max_retries) throw;
    }
    Backoff(attempt);
  }
}

void Grader::Backoff(int attempt) {
  if (config_.backoff_base.count() <= 0) return;
  double jitter;
  {
    std::lock_guard lock(rng_mutex_);
    jitter = std::uniform_real_distribution<double>(0.5, 1.5)(rng_);
  }
  const double millis =
      static_cast<double>(config_.backoff_base.count()) * (1 << std::min(attempt, 10)) *
      jitter;
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(millis));
}

GraderCounters Grader::counters() const {
  return {backend_calls_.load(), gradings_.load(), oracle_gradings_.load(),
          cache_hits_.load(), reasks_.load()};
}

}  // namespace pink::judge

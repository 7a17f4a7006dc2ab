#ifndef PINK_JUDGE_GRADER_H_
#define PINK_JUDGE_GRADER_H_

#include <atomic>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include "pink/datamodel.h"
#include "pink/judge/backend.h"
#include "pink/judge/cache.h"
#include "pink/judge/response.h"

namespace pink::judge {

struct GraderCounters {
  long long backend_calls = 0;  // every request sent, retries included
  long long gradings = 0;       // grade requests that missed the cache
  long long oracle_gradings = 0;
  long long cache_hits = 0;
  long long reasks = 0;
};

struct GradedPair {
  RubricScore oracle;
  RubricScore model;
};

// Grades texts through a backend with caching, retries and strict parsing.
// Thread-safe: concurrent requests for the same cache key share one backend
// call.
class Grader {
 public:
  Grader(JudgeConfig config, std::shared_ptr<JudgeBackend> backend,
         std::shared_ptr<GradeCache> cache, RubricSpec rubric = {});

  // Cached under hash(judge_id, model_name, rubric variant, content, run).
  // Throws kPrecondition for empty texts, kTransportError / kTimeout once
  // retries are exhausted, ParseError after one format re-ask.
  GradeResponse Grade(std::string_view problem_text,
                      std::string_view reference_solution,
                      std::string_view candidate_text, int run_index);

  // Oracle = grade of the ground-truth transcription, model = grade of the
  // OCR text, both against the reference solution. The oracle grade is shared
  // through the cache by every model of the same sample and run.
  GradedPair GradePair(const SolutionSample& sample,
                       const Transcription& transcription, int run_index);

  // NoDiscrepancy without a judge call when the texts are byte-identical.
  DiscrepancyLabel LabelDiscrepancy(std::string_view gt_transcription,
                                    std::string_view ocr_text);

  std::string CacheKey(std::string_view problem_text,
                       std::string_view reference_solution,
                       std::string_view candidate_text, int run_index) const;

  GraderCounters counters() const;
  const JudgeConfig& config() const { return config_; }
  const RubricSpec& rubric() const { return rubric_; }

 private:
  GradeResponse GradeImpl(const GradeRequest& request, bool is_oracle);
  GradeResponse CallJudge(const GradeRequest& request);
  template <typename Fn>
  std::string WithRetries(Fn&& call);
  void Backoff(int attempt);

  JudgeConfig config_;
  std::shared_ptr<JudgeBackend> backend_;
  std::shared_ptr<GradeCache> cache_;
  RubricSpec rubric_;

  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<GradeResponse>> inflight_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_{0x5eed};

  std::atomic<long long> backend_calls_{0};
  std::atomic<long long> gradings_{0};
  std::atomic<long long> oracle_gradings_{0};
  std::atomic<long long> cache_hits_{0};
  std::atomic<long long> reasks_{0};
};

}  // namespace pink::judge

#endif  // PINK_JUDGE_GRADER_H_

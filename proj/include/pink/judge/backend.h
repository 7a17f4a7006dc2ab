#ifndef PINK_JUDGE_BACKEND_H_
#define PINK_JUDGE_BACKEND_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pink/datamodel.h"
#include "pink/judge/prompts.h"
#include "pink/judge/response.h"

namespace pink::judge {

inline constexpr char kApiKeyEnv[] = "PINK_JUDGE_API_KEY";

struct JudgeConfig {
  std::string judge_id;
  std::string kind = "openai";  // "openai" or "mock"
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{120000};
  std::chrono::milliseconds backoff_base{500};
  int parallelism = 1;
  RubricPromptVariant rubric_prompt_variant;
  // Name of the environment variable holding the bearer token. Credentials
  // are never read from config files.
  std::string api_key_env = kApiKeyEnv;
  std::filesystem::path mock_fixture;
  // Mock only: each component is shifted by up to +-mock_noise points,
  // seeded by (content, run_index, mock_seed).
  int mock_noise = 0;
  std::uint64_t mock_seed = 0;

  void Validate() const;
};

JudgeConfig JudgeConfigFromJson(const nlohmann::json& j,
                                const std::filesystem::path& base_dir);
nlohmann::json JudgeConfigToJson(const JudgeConfig& config);

struct GradeRequest {
  std::string_view problem_text;
  std::string_view reference_solution;
  std::string_view candidate_text;
  int run_index = 0;
};

// Content address of a grading input, independent of judge and run.
std::string GradeContentHash(std::string_view problem_text,
                             std::string_view reference_solution,
                             std::string_view candidate_text);
std::string LabelContentHash(std::string_view gt_transcription,
                             std::string_view ocr_text);

// Transport to a judge model. Implementations return the raw reply text and
// throw Error(kTransportError) or Error(kTimeout) on failure.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string Grade(const GradeRequest& request,
                            const std::string& prompt) = 0;
  virtual std::string Label(std::string_view gt_transcription,
                            std::string_view ocr_text,
                            const std::string& prompt) = 0;
  long long calls() const { return calls_.load(); }

 protected:
  std::atomic<long long> calls_{0};
};

// Offline judge: a lookup from content hash to a fixed reply. Unknown content
// throws kFixtureMiss.
//
// Fixture file layout:
//   {"grades": {"<GradeContentHash>": {"components": [...],
//                                      "justifications": [...]}},
//    "labels": {"<LabelContentHash>": "formatting_only"}}
class MockBackend : public JudgeBackend {
 public:
  struct Fixture {
    std::map<std::string, GradeResponse> grades;
    std::map<std::string, DiscrepancyLabel> labels;
  };

  explicit MockBackend(Fixture fixture, RubricSpec rubric = {}, int noise = 0,
                       std::uint64_t seed = 0);
  static Fixture LoadFixture(const std::filesystem::path& path);

  std::string Grade(const GradeRequest& request,
                    const std::string& prompt) override;
  std::string Label(std::string_view gt_transcription, std::string_view ocr_text,
                    const std::string& prompt) override;

 private:
  Fixture fixture_;
  RubricSpec rubric_;
  int noise_;
  std::uint64_t seed_;
};

// OpenAI-compatible chat-completions client over HTTP(S).
class OpenAiBackend : public JudgeBackend {
 public:
  explicit OpenAiBackend(JudgeConfig config);

  std::string Grade(const GradeRequest& request,
                    const std::string& prompt) override;
  std::string Label(std::string_view gt_transcription, std::string_view ocr_text,
                    const std::string& prompt) override;

  // One chat completion with a single user message.
  std::string Complete(const std::string& prompt);

 private:
  JudgeConfig config_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

// Builds the backend named by config.kind.
std::unique_ptr<JudgeBackend> MakeBackend(const JudgeConfig& config,
                                          const RubricSpec& rubric = {});

}  // namespace pink::judge

#endif  // PINK_JUDGE_BACKEND_H_

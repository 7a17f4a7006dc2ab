#include <cstdlib>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/judge/backend.h"

namespace pink::judge {

using nlohmann::json;

void JudgeConfig::Validate() const {
  if (judge_id.empty()) throw Error(ErrorCode::kConfigError, "judge_id is empty");
  if (parallelism < 1) {
    throw Error(ErrorCode::kConfigError, "parallelism must be >= 1");
  }
  if (max_retries < 0) {
    throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  }
  if (kind == "openai") {
    if (endpoint_url.empty() || model_name.empty()) {
      throw Error(ErrorCode::kConfigError,
                  "judge '" + judge_id + "' needs endpoint_url and model_name");
    }
  } else if (kind == "mock") {
    if (mock_fixture.empty()) {
      throw Error(ErrorCode::kConfigError,
                  "mock judge '" + judge_id + "' needs a fixture");
    }
  } else {
    throw Error(ErrorCode::kConfigError, "unknown judge kind '" + kind + "'");
  }
}

JudgeConfig JudgeConfigFromJson(const json& j,
                                const std::filesystem::path& base_dir) {
  JudgeConfig config;
  if (j.contains("api_key")) {
    throw Error(ErrorCode::kConfigError,
                "judge config must not carry api_key; set the variable named by "
                "api_key_env instead");
  }
  try {
    config.judge_id = j.at("judge_id").get<std::string>();
    config.kind = j.value("kind", config.kind);
    config.endpoint_url = j.value("endpoint_url", "");
    config.model_name = j.value("model_name", config.kind == "mock" ? "mock" : "");
    config.temperature = j.value("temperature", 0.0);
    config.max_retries = j.value("max_retries", config.max_retries);
    config.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<long long>(config.timeout.count())));
    config.backoff_base = std::chrono::milliseconds(j.value(
        "backoff_ms", static_cast<long long>(config.backoff_base.count())));
    config.parallelism = j.value("parallelism", 1);
    std::vector<PhraseSubstitution> custom;
    if (j.contains("custom_substitutions")) {
      for (const auto& pair : j.at("custom_substitutions")) {
        custom.emplace_back(pair.at(0).get<std::string>(),
                            pair.at(1).get<std::string>());
      }
    }
    config.rubric_prompt_variant = RubricPromptVariant::Named(
        j.value("rubric_prompt_variant", "original"), std::move(custom));
    config.api_key_env = j.value("api_key_env", std::string(kApiKeyEnv));
    if (j.contains("fixture")) {
      config.mock_fixture = base_dir / j.at("fixture").get<std::string>();
    }
    config.mock_noise = j.value("mock_noise", 0);
    config.mock_seed = j.value("mock_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("judge config: ") + e.what());
  }
  config.Validate();
  return config;
}

json JudgeConfigToJson(const JudgeConfig& config) {
  json substitutions = json::array();
  for (const auto& [from, to] : config.rubric_prompt_variant.substitutions) {
    substitutions.push_back({from, to});
  }
  // Deliberately excludes the API key variable's value.
  return json{{"judge_id", config.judge_id},
              {"kind", config.kind},
              {"endpoint_url", config.endpoint_url},
              {"model_name", config.model_name},
              {"temperature", config.temperature},
              {"max_retries", config.max_retries},
              {"timeout_ms", config.timeout.count()},
              {"parallelism", config.parallelism},
              {"rubric_prompt_variant", config.rubric_prompt_variant.name},
              {"substitutions", substitutions},
              {"mock_noise", config.mock_noise},
              {"mock_seed", config.mock_seed}};
}

std::string GradeContentHash(std::string_view problem_text,
                             std::string_view reference_solution,
                             std::string_view candidate_text) {
  return FieldHasher()
      .Add("grade")
      .Add(problem_text)
      .Add(reference_solution)
      .Add(candidate_text)
      .HexDigest();
}

std::string LabelContentHash(std::string_view gt_transcription,
                             std::string_view ocr_text) {
  return FieldHasher().Add("label").Add(gt_transcription).Add(ocr_text).HexDigest();
}

std::unique_ptr<JudgeBackend> MakeBackend(const JudgeConfig& config,
                                          const RubricSpec& rubric) {
  config.Validate();
  if (config.kind == "mock") {
    return std::make_unique<MockBackend>(MockBackend::LoadFixture(config.mock_fixture),
                                         rubric, config.mock_noise,
                                         config.mock_seed);
  }
  return std::make_unique<OpenAiBackend>(config);
}

}  // namespace pink::judge

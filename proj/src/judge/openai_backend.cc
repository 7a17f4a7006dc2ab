#include <cstdlib>

#include "httplib.h"
#include "pink/error.h"
#include "pink/judge/backend.h"

namespace pink::judge {
namespace {

using nlohmann::json;

constexpr char kDefaultPath[] = "/v1/chat/completions";

// Splits "scheme://host[:port][/path]" into origin and path.
std::pair<std::string, std::string> SplitUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "endpoint_url needs a scheme: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kConfigError, "unsupported scheme in " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, kDefaultPath};
  std::string path = url.substr(path_start);
  if (path == "/") path = kDefaultPath;
  return {url.substr(0, path_start), path};
}

}  // namespace

OpenAiBackend::OpenAiBackend(JudgeConfig config) : config_(std::move(config)) {
  std::tie(origin_, path_) = SplitUrl(config_.endpoint_url);
}

std::string OpenAiBackend::Grade(const GradeRequest& /*request*/,
                                 const std::string& prompt) {
  return Complete(prompt);
}

std::string OpenAiBackend::Label(std::string_view /*gt_transcription*/,
                                 std::string_view /*ocr_text*/,
                                 const std::string& prompt) {
  return Complete(prompt);
}

std::string OpenAiBackend::Complete(const std::string& prompt) {
  ++calls_;
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str());
      key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const json body = {
      {"model", config_.model_name},
      {"temperature", config_.temperature},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path_, headers, body.dump(), "application/json");
  if (!result) {
    const auto error = result.error();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (error == httplib::Error::ConnectionTimeout ||
        (error == httplib::Error::Read && elapsed >= config_.timeout)) {
      throw Error(ErrorCode::kTimeout,
                  "judge '" + config_.judge_id + "' timed out after " +
                      std::to_string(config_.timeout.count()) + " ms");
    }
    throw Error(ErrorCode::kTransportError,
                "judge '" + config_.judge_id + "' at " + origin_ + ": " +
                    httplib::to_string(error));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::kTransportError,
                "judge '" + config_.judge_id + "' returned HTTP " +
                    std::to_string(result->status));
  }
  json reply = json::parse(result->body, nullptr, /*allow_exceptions=*/false);
  if (reply.is_discarded()) {
    throw Error(ErrorCode::kTransportError, "judge reply is not JSON");
  }
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content as a list of typed parts.
    std::string text;
    for (const auto& part : content) text += part.value("text", "");
    return text;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kTransportError,
                std::string("judge reply lacks choices[0].message.content: ") +
                    e.what());
  }
}

}  // namespace pink::judge

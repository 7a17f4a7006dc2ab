#ifndef PINK_APP_CONFIG_H_
#define PINK_APP_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pink/judge/backend.h"
#include "pink/metrics.h"
#include "pink/penalty.h"

namespace pink::app {

inline const std::vector<int>& DefaultSweepThresholds() {
  static const std::vector<int> kThresholds{0, 2, 5, 8, 10, 12, 15, 18, 20};
  return kThresholds;
}

struct ServerSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> ui_dir;
  // Names of environment variables; secrets never live in the config file.
  std::string token_env = "PINK_SERVER_TOKEN";
  std::string secret_seed_env = "PINK_ASSIGNMENT_SECRET";
  // Model whose transcriptions are shown to raters; empty means the first.
  std::string model_id;
};

// Pipeline configuration file. Relative paths resolve against the directory of
// the config file.
struct PipelineConfig {
  std::filesystem::path corpus;
  std::vector<std::filesystem::path> transcriptions;
  std::vector<judge::JudgeConfig> judges;  // judges[0] drives the leaderboard
  int threshold = penalty::kDefaultThreshold;
  std::optional<int> num_components;  // overrides the corpus rubric shape
  metrics::BleuConfig bleu;
  int runs = 1;
  std::vector<std::string> rubric_variants{"original"};
  std::filesystem::path cache_dir;
  std::filesystem::path store_dir;
  std::filesystem::path report_dir;
  std::filesystem::path annotation_store;
  double failure_threshold = 0.05;
  std::vector<int> sweep_thresholds = DefaultSweepThresholds();
  ServerSettings server;

  // Throws kConfigError naming the offending field.
  void Validate() const;
  // Digest of everything that can change a result. Output locations are
  // excluded; input files are hashed by content.
  std::string Hash() const;
  const judge::JudgeConfig& primary_judge() const { return judges.front(); }
};

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
PipelineConfig PipelineConfigFromJson(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir);

// Command-line flags that replace config fields.
struct ConfigOverrides {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> store_dir;
  std::optional<std::filesystem::path> report_dir;
  std::optional<std::filesystem::path> annotation_store;
  std::optional<int> threshold;
  std::optional<int> runs;
  std::optional<std::string> bleu_mode;
  std::optional<std::string> judge_id;  // moves this judge to the front
  std::optional<std::string> host;
  std::optional<int> port;
};

void ApplyOverrides(PipelineConfig& config, const ConfigOverrides& overrides);

}  // namespace pink::app

#endif  // PINK_APP_CONFIG_H_

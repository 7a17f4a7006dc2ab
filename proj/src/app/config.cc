#include "pink/app/config.h"

#include <algorithm>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/io.h"

namespace pink::app {

using nlohmann::json;

namespace {

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::string FileDigest(const std::filesystem::path& path) {
  return Sha256Hex(io::ReadFile(path));
}

}  // namespace

void PipelineConfig::Validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfigError, msg);
  };
  if (corpus.empty()) fail("corpus is required");
  if (!std::filesystem::exists(corpus)) fail("corpus not found: " + corpus.string());
  if (transcriptions.empty()) fail("at least one transcription file is required");
  for (const auto& t : transcriptions)
    if (!std::filesystem::exists(t)) fail("transcriptions not found: " + t.string());
  if (judges.empty()) fail("at least one judge is required");
  for (std::size_t i = 0; i < judges.size(); ++i) {
    for (std::size_t k = i + 1; k < judges.size(); ++k)
      if (judges[i].judge_id == judges[k].judge_id)
        fail("duplicate judge_id '" + judges[i].judge_id + "'");
    if (judges[i].kind == "mock" && !std::filesystem::exists(judges[i].mock_fixture))
      fail("mock fixture not found: " + judges[i].mock_fixture.string());
  }
  if (runs < 1) fail("runs must be >= 1");
  if (rubric_variants.empty()) fail("rubric_variants must not be empty");
  if (failure_threshold < 0.0 || failure_threshold > 1.0)
    fail("failure_threshold must lie in [0, 1]");
  if (store_dir.empty()) fail("store_dir is required");
  if (report_dir.empty()) fail("report_dir is required");
  if (bleu.max_order < 1) fail("bleu max_order must be >= 1");
  if (threshold < 0) fail("threshold must be >= 0");
}

std::string PipelineConfig::Hash() const {
  json judges_json = json::array();
  for (const auto& j : judges) {
    json entry = judge::JudgeConfigToJson(j);
    if (j.kind == "mock") entry["fixture_sha256"] = FileDigest(j.mock_fixture);
    judges_json.push_back(entry);
  }
  json transcription_digests = json::array();
  for (const auto& t : transcriptions) transcription_digests.push_back(FileDigest(t));
  const json semantic{
      {"corpus_sha256", FileDigest(corpus)},
      {"transcriptions_sha256", transcription_digests},
      {"judges", judges_json},
      {"threshold", threshold},
      {"num_components", num_components ? json(*num_components) : json(nullptr)},
      {"bleu", bleu.VariantName()},
      {"bleu_max_order", bleu.max_order},
      {"runs", runs},
      {"rubric_variants", rubric_variants},
      {"failure_threshold", failure_threshold},
      {"sweep_thresholds", sweep_thresholds},
  };
  return Sha256Hex(semantic.dump());
}

PipelineConfig PipelineConfigFromJson(const json& j,
                                      const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    c.corpus = Resolve(base_dir, j.at("corpus").get<std::string>());
    const auto& t = j.at("transcriptions");
    if (t.is_string()) {
      c.transcriptions.push_back(Resolve(base_dir, t.get<std::string>()));
    } else {
      for (const auto& p : t) c.transcriptions.push_back(Resolve(base_dir, p.get<std::string>()));
    }
    for (const auto& jc : j.at("judges"))
      c.judges.push_back(judge::JudgeConfigFromJson(jc, base_dir));
    if (j.contains("penalty")) {
      const auto& p = j.at("penalty");
      c.threshold = p.value("threshold", c.threshold);
      if (p.contains("num_components")) c.num_components = p.at("num_components").get<int>();
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      c.bleu.max_order = m.value("bleu_max_order", c.bleu.max_order);
      c.bleu.smoothing_epsilon = m.value("bleu_smoothing_epsilon", c.bleu.smoothing_epsilon);
      if (m.contains("bleu_mode"))
        c.bleu.mode = metrics::ParseBleuMode(m.at("bleu_mode").get<std::string>());
    }
    c.runs = j.value("runs", 1);
    if (j.contains("rubric_variants"))
      c.rubric_variants = j.at("rubric_variants").get<std::vector<std::string>>();
    c.cache_dir = Resolve(base_dir, j.value("cache_dir", "cache"));
    c.store_dir = Resolve(base_dir, j.value("store_dir", "store"));
    c.report_dir = Resolve(base_dir, j.value("report_dir", "reports"));
    c.annotation_store = Resolve(base_dir, j.value("annotation_store", "annotations"));
    c.failure_threshold = j.value("failure_threshold", c.failure_threshold);
    if (j.contains("sweep_thresholds"))
      c.sweep_thresholds = j.at("sweep_thresholds").get<std::vector<int>>();
    if (j.contains("server")) {
      const auto& s = j.at("server");
      c.server.host = s.value("host", c.server.host);
      c.server.port = s.value("port", c.server.port);
      if (s.contains("ui_dir"))
        c.server.ui_dir = Resolve(base_dir, s.at("ui_dir").get<std::string>());
      c.server.token_env = s.value("token_env", c.server.token_env);
      c.server.secret_seed_env = s.value("secret_seed_env", c.server.secret_seed_env);
      c.server.model_id = s.value("model_id", c.server.model_id);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return PipelineConfigFromJson(j, std::filesystem::absolute(path).parent_path());
}

void ApplyOverrides(PipelineConfig& config, const ConfigOverrides& o) {
  if (o.corpus) config.corpus = *o.corpus;
  if (o.cache_dir) config.cache_dir = *o.cache_dir;
  if (o.store_dir) config.store_dir = *o.store_dir;
  if (o.report_dir) config.report_dir = *o.report_dir;
  if (o.annotation_store) config.annotation_store = *o.annotation_store;
  if (o.threshold) config.threshold = *o.threshold;
  if (o.runs) config.runs = *o.runs;
  if (o.bleu_mode) config.bleu.mode = metrics::ParseBleuMode(*o.bleu_mode);
  if (o.host) config.server.host = *o.host;
  if (o.port) config.server.port = *o.port;
  if (o.judge_id) {
    auto it = std::find_if(config.judges.begin(), config.judges.end(),
                           [&](const auto& j) { return j.judge_id == *o.judge_id; });
    if (it == config.judges.end())
      throw Error(ErrorCode::kConfigError, "no judge named '" + *o.judge_id + "'");
    std::rotate(config.judges.begin(), it, it + 1);
  }
}

}  // namespace pink::app

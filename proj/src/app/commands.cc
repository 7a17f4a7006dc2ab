#include "pink/app/commands.h"

#include <sys/stat.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/io.h"
#include "pink/judge/grader.h"

namespace pink::app {

using nlohmann::json;

namespace {

bool IsBuiltinRubricVariant(const std::string& name) {
  return name == "original" || name == "v1" || name == "v2" || name == "v3";
}

judge::JudgeConfig WithRubricVariant(judge::JudgeConfig judge, const std::string& name) {
  if (judge.rubric_prompt_variant.name == name) return judge;
  if (!IsBuiltinRubricVariant(name)) {
    throw Error(ErrorCode::kConfigError,
                "rubric variant '" + name + "' is neither built in nor defined by judge '" +
                    judge.judge_id + "'");
  }
  judge.rubric_prompt_variant = judge::RubricPromptVariant::Named(name);
  return judge;
}

std::shared_ptr<judge::GradeCache> OpenCache(const PipelineConfig& config) {
  if (config.cache_dir.empty()) return std::make_shared<judge::GradeCache>();
  return std::make_shared<judge::GradeCache>(config.cache_dir);
}

analysis::ReportContext MakeContext(const PipelineConfig& config, const Inputs& in) {
  analysis::ReportContext ctx;
  ctx.config_hash = config.Hash();
  ctx.corpus_hash = in.corpus.Hash();
  ctx.judge_id = config.primary_judge().judge_id;
  for (const auto& j : config.judges) ctx.judge_ids.push_back(j.judge_id);
  ctx.bleu_variant = config.bleu.VariantName();
  ctx.threshold = config.threshold;
  return ctx;
}

penalty::Config PenaltyConfig(const PipelineConfig& config, const RubricSpec& rubric) {
  auto pc = penalty::Config::ForRubric(rubric, config.threshold);
  pc.Validate();
  return pc;
}

std::string DescribeSlice(const RecordFilter& f) {
  std::string out = "judge=" + f.judge_id.value_or("*") +
                    " rubric_variant=" + f.rubric_variant.value_or("*") +
                    " prompt_variant=" + f.prompt_variant.value_or("*");
  if (f.run_index) out += " run=" + std::to_string(*f.run_index);
  return out;
}

// Records of a slice re-derived at the configured threshold.
std::vector<EvalRecord> LoadSlice(const PipelineConfig& config, const RubricSpec& rubric,
                                  const RecordFilter& filter, bool required = true) {
  const RecordStore store = LoadRecordStore(config.store_dir);
  auto records = Select(store.records, filter);
  if (records.empty() && required) {
    throw Error(ErrorCode::kMissingStore,
                "store " + config.store_dir.string() + " has no records for " +
                    DescribeSlice(filter));
  }
  const auto pc = PenaltyConfig(config, rubric);
  for (auto& r : records) r = penalty::Repenalize(r, pc);
  return records;
}

std::map<std::string, std::vector<EvalRecord>> ByModel(const std::vector<EvalRecord>& records) {
  std::map<std::string, std::vector<EvalRecord>> out;
  for (const auto& r : records) out[r.model_id].push_back(r);
  for (auto& [_, recs] : out) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
      return std::tie(a.sample_id, a.run_index) < std::tie(b.sample_id, b.run_index);
    });
  }
  return out;
}

const Transcription& TranscriptionOf(const Inputs& in, const EvalRecord& r) {
  const auto* t = in.transcriptions.Find(r.sample_id, r.model_id,
                                         PromptVariant::Parse(r.prompt_variant));
  if (!t) {
    throw Error(ErrorCode::kValidation,
                "store record " + r.sample_id + "/" + r.model_id + "/" + r.prompt_variant +
                    " has no matching transcription; regrade after changing inputs");
  }
  return *t;
}

void WriteLabels(const std::filesystem::path& path,
                 const std::vector<std::tuple<std::string, std::string, judge::DiscrepancyLabel>>& rows) {
  std::string out;
  for (const auto& [sample, model, label] : rows) {
    out += json{{"sample_id", sample},
                {"model_id", model},
                {"label", judge::DiscrepancyLabelName(label)}}
               .dump();
    out += '\n';
  }
  io::WriteFileAtomic(path, out);
}

json BreakdownPayload(
    const std::vector<std::tuple<std::string, std::string, judge::DiscrepancyLabel>>& rows,
    std::size_t failures) {
  std::vector<judge::DiscrepancyLabel> all;
  std::map<std::string, std::vector<judge::DiscrepancyLabel>> per_model;
  for (const auto& [sample, model, label] : rows) {
    all.push_back(label);
    per_model[model].push_back(label);
  }
  json models = json::object();
  for (const auto& [m, labels] : per_model)
    models[m] = analysis::ToJson(analysis::BreakdownDiscrepancies(labels));
  return json{{"overall", analysis::ToJson(analysis::BreakdownDiscrepancies(all))},
              {"models", models},
              {"label_failures", failures}};
}

std::string LoadOrCreateSecret(const PipelineConfig& config) {
  if (const char* env = std::getenv(config.server.secret_seed_env.c_str()); env && *env)
    return env;
  const auto path = config.annotation_store / "secret_seed";
  if (std::filesystem::exists(path)) return io::ReadFile(path);
  std::random_device rd;
  std::string secret;
  for (int i = 0; i < 4; ++i) secret += std::to_string(rd());
  secret = Sha256Hex(secret);
  std::filesystem::create_directories(config.annotation_store);
  io::WriteFileAtomic(path, secret);
  ::chmod(path.c_str(), 0600);
  spdlog::warn("{} not set; generated a secret seed in {}", config.server.secret_seed_env,
               path.string());
  return secret;
}

}  // namespace

Inputs LoadInputs(const PipelineConfig& config) {
  config.Validate();
  Inputs in;
  in.corpus = LoadCorpus(config.corpus);
  for (const auto& path : config.transcriptions)
    LoadTranscriptionsInto(path, in.corpus, in.transcriptions);
  in.rubric = config.num_components ? RubricSpec::Custom(*config.num_components)
                                    : in.corpus.metadata().rubric;
  in.rubric.Validate();
  return in;
}

RecordFilter PrimarySlice(const PipelineConfig& config) {
  RecordFilter f;
  f.judge_id = config.primary_judge().judge_id;
  f.rubric_variant = config.rubric_variants.front();
  f.prompt_variant = PromptVariant::Standard().ToString();
  f.run_index = 0;
  return f;
}

std::string GradeSummary::ToString() const {
  char rate[32];
  std::snprintf(rate, sizeof(rate), "%.4f", failure_rate);
  return "tasks=" + std::to_string(tasks) + " records=" + std::to_string(records) +
         " failures=" + std::to_string(failures) + " failure_rate=" + rate +
         " judge_calls=" + std::to_string(judge_calls) +
         " cache_hits=" + std::to_string(cache_hits) + " reasks=" + std::to_string(reasks);
}

GradeSummary CmdGrade(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  const auto pc = PenaltyConfig(config, in.rubric);
  auto cache = OpenCache(config);
  const auto transcriptions = in.transcriptions.All();

  RecordStore store;
  GradeSummary summary;
  for (const auto& judge_config : config.judges) {
    std::shared_ptr<judge::JudgeBackend> backend = judge::MakeBackend(judge_config, in.rubric);
    std::vector<std::unique_ptr<judge::Grader>> graders;
    struct Task {
      judge::Grader* grader;
      const std::string* rubric_variant;
      const SolutionSample* sample;
      const Transcription* transcription;
      int run;
    };
    std::vector<Task> tasks;
    for (const auto& variant : config.rubric_variants) {
      graders.push_back(std::make_unique<judge::Grader>(
          WithRubricVariant(judge_config, variant), backend, cache, in.rubric));
      for (const auto* t : transcriptions) {
        for (int run = 0; run < config.runs; ++run)
          tasks.push_back({graders.back().get(), &variant, in.corpus.Find(t->sample_id), t, run});
      }
    }

    std::vector<std::optional<EvalRecord>> records(tasks.size());
    std::vector<std::optional<GradeFailure>> failures(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        const Task& task = tasks[i];
        try {
          const auto pair = task.grader->GradePair(*task.sample, *task.transcription, task.run);
          EvalRecord r = penalty::MakeRecord(task.sample->sample_id,
                                             task.transcription->model_id,
                                             judge_config.judge_id, task.run, pair.oracle,
                                             pair.model, pc);
          r.rubric_variant = *task.rubric_variant;
          r.prompt_variant = task.transcription->prompt_variant.ToString();
          records[i] = std::move(r);
        } catch (const Error& e) {
          failures[i] = GradeFailure{task.sample->sample_id,
                                     task.transcription->model_id,
                                     judge_config.judge_id,
                                     *task.rubric_variant,
                                     task.transcription->prompt_variant.ToString(),
                                     task.run,
                                     std::string(ErrorCodeName(e.code())),
                                     e.what()};
        }
      }
    };
    const int threads = std::max(1, judge_config.parallelism);
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (records[i]) store.records.push_back(std::move(*records[i]));
      if (failures[i]) {
        spdlog::warn("grading failed for {}/{} ({}): {}", failures[i]->sample_id,
                     failures[i]->model_id, failures[i]->judge_id, failures[i]->message);
        store.failures.push_back(std::move(*failures[i]));
      }
    }
    summary.tasks += tasks.size();
    for (const auto& g : graders) {
      const auto c = g->counters();
      summary.judge_calls += c.backend_calls;
      summary.cache_hits += c.cache_hits;
      summary.reasks += c.reasks;
    }
  }

  summary.records = store.records.size();
  summary.failures = store.failures.size();
  summary.failure_rate =
      summary.tasks ? static_cast<double>(summary.failures) / static_cast<double>(summary.tasks)
                    : 0.0;
  summary.over_threshold = summary.failure_rate > config.failure_threshold;

  json judge_ids = json::array();
  for (const auto& j : config.judges) judge_ids.push_back(j.judge_id);
  store.manifest = json{{"config_hash", config.Hash()},
                        {"corpus_hash", in.corpus.Hash()},
                        {"judge_ids", judge_ids},
                        {"rubric_variants", config.rubric_variants},
                        {"runs", config.runs},
                        {"threshold", config.threshold},
                        {"tasks", summary.tasks},
                        {"records", summary.records},
                        {"failures", summary.failures}};
  WriteRecordStore(config.store_dir, std::move(store));
  return summary;
}

ScoreResult CmdScore(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  const auto slice = LoadSlice(config, in.rubric, PrimarySlice(config));
  ScoreResult result;
  std::map<std::string, double> pink, bleu, raw;
  for (const auto& [model, recs] : ByModel(slice)) {
    std::vector<metrics::TextPair> texts;
    for (const auto& r : recs) {
      texts.push_back({in.corpus.Find(r.sample_id)->gt_transcription, TranscriptionOf(in, r).text});
    }
    auto agg = metrics::Aggregate(model, recs, texts, config.bleu, in.rubric.component_max);
    pink[model] = agg.pink;
    bleu[model] = agg.bleu;
    raw[model] = agg.mean_model;
    result.aggregates.push_back(std::move(agg));
  }
  result.leaderboard = analysis::BuildLeaderboard(result.aggregates);

  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  writer.WriteLeaderboard(result.leaderboard, result.aggregates);
  writer.WriteJson("rank_deltas.json", "rank_deltas",
                   json{{"bleu_vs_pink", analysis::ToJson(analysis::CompareRankings(bleu, pink))},
                        {"raw_vs_pink", analysis::ToJson(analysis::CompareRankings(raw, pink))}});
  writer.WriteHeatmap(analysis::BuildRubricHeatmap(slice, in.rubric));
  writer.WriteDeltaHistogram(analysis::ScoreDifferenceDistribution(slice));
  writer.WriteScatter(analysis::PenaltyScatter(slice));
  writer.WriteManifest();
  return result;
}

penalty::SweepResult CmdSweep(const PipelineConfig& config,
                              std::optional<std::vector<int>> thresholds) {
  const Inputs in = LoadInputs(config);
  const auto slice = LoadSlice(config, in.rubric, PrimarySlice(config));
  const std::vector<int> ts = thresholds.value_or(config.sweep_thresholds);
  auto result = penalty::SweepThresholds(slice, ts, PenaltyConfig(config, in.rubric),
                                         config.threshold);
  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  writer.WriteJson("sweep.json", "threshold_sweep", analysis::ToJson(result));
  writer.WriteManifest();
  return result;
}

std::vector<std::string> CmdRepro(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  const RecordFilter primary = PrimarySlice(config);
  std::vector<std::string> notices;

  if (config.judges.size() < 2) {
    notices.push_back("cross-grader section skipped: only one judge is configured");
    writer.WriteSkipped("cross_grader.json", "cross_grader", notices.back());
  } else {
    RecordFilter other = primary;
    other.judge_id = config.judges[1].judge_id;
    const auto a = LoadSlice(config, in.rubric, primary);
    const auto b = LoadSlice(config, in.rubric, other);
    writer.WriteJson("cross_grader.json", "cross_grader",
                     analysis::ToJson(analysis::CrossGrader(a, b)));
  }

  if (config.runs < 2) {
    notices.push_back("run-stability section skipped: runs = 1");
    writer.WriteSkipped("run_stability.json", "run_stability", notices.back());
  } else {
    RecordFilter all_runs = primary;
    all_runs.run_index.reset();
    const auto records = LoadSlice(config, in.rubric, all_runs);
    json models = json::array();
    for (const auto& [model, recs] : ByModel(records)) {
      std::vector<std::vector<EvalRecord>> runs(config.runs);
      for (const auto& r : recs)
        if (r.run_index < config.runs) runs[r.run_index].push_back(r);
      for (int k = 0; k < config.runs; ++k) {
        if (runs[k].empty()) {
          throw Error(ErrorCode::kMissingStore,
                      "no records for model " + model + " run " + std::to_string(k));
        }
      }
      models.push_back(analysis::ToJson(analysis::ComputeRunStability(model, runs)));
    }
    writer.WriteJson("run_stability.json", "run_stability", json{{"models", models}});
  }

  if (config.rubric_variants.size() < 2) {
    notices.push_back("prompt-sensitivity section skipped: one rubric variant configured");
    writer.WriteSkipped("prompt_sensitivity.json", "prompt_sensitivity", notices.back());
  } else {
    std::map<std::string, std::vector<EvalRecord>> by_variant;
    for (const auto& v : config.rubric_variants) {
      RecordFilter f = primary;
      f.rubric_variant = v;
      by_variant[v] = LoadSlice(config, in.rubric, f);
    }
    writer.WriteJson("prompt_sensitivity.json", "prompt_sensitivity",
                     analysis::ToJson(analysis::ComputePromptSensitivity(by_variant)));
  }
  writer.WriteManifest();
  return notices;
}

analysis::MitigationReport CmdMitigate(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  RecordFilter original = PrimarySlice(config);
  RecordFilter mitigated = original;
  mitigated.prompt_variant = PromptVariant::Mitigated().ToString();
  const auto orig = LoadSlice(config, in.rubric, original, /*required=*/false);
  const auto mit = LoadSlice(config, in.rubric, mitigated, /*required=*/false);
  for (const auto* f : {&original, &mitigated}) {
    if ((f == &original ? orig : mit).empty()) {
      throw Error(ErrorCode::kSampleSetMismatch,
                  "no records for prompt variant '" + *f->prompt_variant + "' (" +
                      DescribeSlice(*f) + ")");
    }
  }
  auto report = analysis::CompareMitigation(orig, mit);
  for (const auto& m : report.excluded_models)
    spdlog::warn("model {} lacks one of the prompt variants; excluded from mitigation", m);
  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  writer.WriteJson("mitigation.json", "mitigation", analysis::ToJson(report));
  writer.WriteManifest();
  return report;
}

analysis::DiscrepancyBreakdown CmdLabel(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  const auto& judge_config = config.primary_judge();
  judge::Grader grader(judge_config, judge::MakeBackend(judge_config, in.rubric),
                       OpenCache(config), in.rubric);
  std::vector<std::tuple<std::string, std::string, judge::DiscrepancyLabel>> rows;
  std::size_t failures = 0;
  for (const auto* t : in.transcriptions.All()) {
    if (t->prompt_variant != PromptVariant::Standard()) continue;
    const auto* sample = in.corpus.Find(t->sample_id);
    try {
      rows.emplace_back(t->sample_id, t->model_id,
                        grader.LabelDiscrepancy(sample->gt_transcription, t->text));
    } catch (const Error& e) {
      ++failures;
      spdlog::warn("labeling failed for {}/{}: {}", t->sample_id, t->model_id, e.what());
    }
  }
  std::filesystem::create_directories(config.store_dir);
  WriteLabels(config.store_dir / "labels.jsonl", rows);
  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  writer.WriteJson("discrepancies.json", "discrepancy_breakdown", BreakdownPayload(rows, failures));
  writer.WriteManifest();
  std::vector<judge::DiscrepancyLabel> labels;
  for (const auto& row : rows) labels.push_back(std::get<2>(row));
  return analysis::BreakdownDiscrepancies(labels);
}

TaskPool BuildTaskPool(const PipelineConfig& config) {
  const Inputs in = LoadInputs(config);
  const auto slice = LoadSlice(config, in.rubric, PrimarySlice(config));
  const auto by_model = ByModel(slice);
  std::string model = config.server.model_id;
  if (model.empty()) model = by_model.begin()->first;
  auto it = by_model.find(model);
  if (it == by_model.end()) {
    throw Error(ErrorCode::kConfigError, "no records for annotation model '" + model + "'");
  }
  TaskPool pool;
  for (const auto& r : it->second) {
    const auto* sample = in.corpus.Find(r.sample_id);
    const auto& t = TranscriptionOf(in, r);
    TaskItem item;
    item.sample_id = r.sample_id;
    item.model_id = r.model_id;
    item.problem_text = sample->problem_text;
    item.reference_solution = sample->reference_solution;
    item.student_solution = t.text;
    item.image_ref = sample->image_ref;
    if (r.oracle.total() > 0)
      item.pink_score = 10.0 * r.penalized_total / static_cast<double>(r.oracle.total());
    item.bleu_score = 10.0 * metrics::SentenceBleu(sample->gt_transcription, t.text, config.bleu);
    item.auto_total = r.model.total();
    pool.items.push_back(std::move(item));
  }
  return pool;
}

std::string CmdReport(const PipelineConfig& config, bool write_markdown) {
  CmdScore(config);
  const Inputs in = LoadInputs(config);
  analysis::ReportWriter writer(config.report_dir, MakeContext(config, in));
  auto attempt = [&](const std::string& file, const std::string& section, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      spdlog::warn("{} not produced: {}", section, e.what());
      writer.WriteSkipped(file, section, e.what());
    }
  };
  attempt("sweep.json", "threshold_sweep", [&] { CmdSweep(config); });
  try {
    for (const auto& n : CmdRepro(config)) spdlog::info("{}", n);
  } catch (const Error& e) {
    spdlog::warn("reproducibility reports not produced: {}", e.what());
    for (const char* s : {"cross_grader", "run_stability", "prompt_sensitivity"})
      writer.WriteSkipped(std::string(s) + ".json", s, e.what());
  }
  attempt("mitigation.json", "mitigation", [&] { CmdMitigate(config); });

  const auto labels_path = config.store_dir / "labels.jsonl";
  if (std::filesystem::exists(labels_path)) {
    std::vector<std::tuple<std::string, std::string, judge::DiscrepancyLabel>> rows;
    for (const auto& line : io::ReadLines(labels_path)) {
      const auto j = json::parse(line.text);
      rows.emplace_back(j.at("sample_id").get<std::string>(), j.at("model_id").get<std::string>(),
                        judge::ParseDiscrepancyLabelName(j.at("label").get<std::string>()));
    }
    writer.WriteJson("discrepancies.json", "discrepancy_breakdown", BreakdownPayload(rows, 0));
  } else {
    writer.WriteSkipped("discrepancies.json", "discrepancy_breakdown",
                        "no labels in the store; run `pink label`");
  }

  if (std::filesystem::exists(config.annotation_store / "annotations.jsonl")) {
    const auto snapshot = ReadAnnotationSnapshot(config.annotation_store);
    const json stats = AnnotationStats(BuildTaskPool(config), snapshot.records,
                                       snapshot.assignments);
    for (const auto& [file, section, key] :
         {std::tuple{"human_agreement.json", "human_agreement", "human_agreement"},
          std::tuple{"preferences.json", "preference_aggregate", "preference_aggregate"}}) {
      const json& payload = stats.at(key);
      if (payload.contains("error")) {
        writer.WriteSkipped(file, section, payload.at("message").get<std::string>());
      } else {
        writer.WriteJson(file, section, payload);
      }
    }
  } else {
    for (const char* s : {"human_agreement", "preferences"})
      writer.WriteSkipped(std::string(s) + ".json", s, "no annotations collected yet");
  }
  writer.WriteManifest();

  const std::string markdown = analysis::RenderMarkdown(config.report_dir);
  if (write_markdown) io::WriteFileAtomic(config.report_dir / "report.md", markdown);
  return markdown;
}

void CmdServe(const PipelineConfig& config) {
  TaskPool pool = BuildTaskPool(config);
  const std::size_t task_count = pool.items.size();
  auto store = std::make_shared<AnnotationStore>(config.annotation_store);
  ServerOptions options;
  options.host = config.server.host;
  options.port = config.server.port;
  options.ui_dir = config.server.ui_dir;
  if (const char* token = std::getenv(config.server.token_env.c_str())) options.token = token;
  options.secret_seed = LoadOrCreateSecret(config);
  AnnotationServer server(std::move(pool), store, options);
  const int port = server.Bind();
  spdlog::info("serving {} tasks on http://{}:{}", task_count, options.host, port);
  server.Run();
}

}  // namespace pink::app

#include <gtest/gtest.h>

#include <fstream>

#include "pink/app/annotation_store.h"
#include "pink/app/commands.h"
#include "pink/app/config.h"
#include "pink/app/record_store.h"
#include "pink/error.h"
#include "pink/penalty.h"
#include "test_util.h"

namespace pink::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::ReadText;
using testing::TempDir;
using testing::TestdataDir;
using testing::WriteText;

template <typename Fn>
Error ErrorOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorCode::kIo, "none");
}

fs::path Mini() { return TestdataDir() / "mini"; }

// The bundled mini config with every output redirected into `dir`.
PipelineConfig MiniConfig(const TempDir& dir, const std::string& file = "config.json") {
  PipelineConfig c = LoadPipelineConfig(Mini() / file);
  ConfigOverrides o;
  o.cache_dir = dir / "cache";
  o.store_dir = dir / "store";
  o.report_dir = dir / "reports";
  o.annotation_store = dir / "annotations";
  ApplyOverrides(c, o);
  return c;
}

json MiniJson() { return json::parse(ReadText(Mini() / "config.json")); }

TEST(Config, LoadResolvesRelativePaths) {
  const PipelineConfig c = LoadPipelineConfig(Mini() / "config.json");
  EXPECT_EQ(c.corpus, Mini() / "corpus.jsonl");
  ASSERT_EQ(c.transcriptions.size(), 1u);
  EXPECT_EQ(c.judges.size(), 1u);
  EXPECT_EQ(c.primary_judge().judge_id, "mock-judge");
  EXPECT_EQ(c.threshold, 10);
  EXPECT_EQ(c.server.model_id, "fixer-ocr");
  EXPECT_EQ(c.sweep_thresholds, DefaultSweepThresholds());
  EXPECT_NO_THROW(c.Validate());
}

TEST(Config, ValidationNamesTheField) {
  auto bad = [](const std::function<void(json&)>& edit) {
    json j = MiniJson();
    edit(j);
    return ErrorOf([&] { PipelineConfigFromJson(j, Mini()).Validate(); });
  };
  const Error t = bad([](json& j) { j["penalty"]["threshold"] = -1; });
  EXPECT_EQ(t.code(), ErrorCode::kConfigError);
  EXPECT_NE(std::string(t.what()).find("threshold"), std::string::npos);
  EXPECT_EQ(bad([](json& j) { j["judges"] = json::array(); }).code(), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](json& j) { j["runs"] = 0; }).code(), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](json& j) { j["judges"][0]["api_key"] = "sk-123"; }).code(),
            ErrorCode::kConfigError);
  EXPECT_EQ(bad([](json& j) { j["metrics"]["bleu_mode"] = "nope"; }).code(),
            ErrorCode::kConfigError);
}

TEST(Config, HashIgnoresOutputsAndLocation) {
  TempDir a, b;
  const std::string base = LoadPipelineConfig(Mini() / "config.json").Hash();
  EXPECT_EQ(MiniConfig(a).Hash(), base);
  EXPECT_EQ(MiniConfig(b).Hash(), base);

  // A copy of the inputs elsewhere hashes the same.
  for (const char* f : {"config.json", "corpus.jsonl", "transcriptions.jsonl",
                        "mock_judge.json"}) {
    WriteText(a / "copy" / f, ReadText(Mini() / f));
  }
  EXPECT_EQ(LoadPipelineConfig(a / "copy/config.json").Hash(), base);

  PipelineConfig t = LoadPipelineConfig(Mini() / "config.json");
  t.threshold = 12;
  EXPECT_NE(t.Hash(), base);
  std::string corpus = ReadText(Mini() / "corpus.jsonl");
  corpus.replace(corpus.find("Find the area"), 4, "Calc");
  WriteText(a / "copy/corpus.jsonl", corpus);
  EXPECT_NE(LoadPipelineConfig(a / "copy/config.json").Hash(), base);
}

TEST(Config, OverridesReplaceFields) {
  PipelineConfig c = LoadPipelineConfig(Mini() / "config_full.json");
  ConfigOverrides o;
  o.threshold = 5;
  o.runs = 1;
  o.bleu_mode = "sentence_average";
  o.judge_id = "mock-judge-noisy";
  o.port = 0;
  ApplyOverrides(c, o);
  EXPECT_EQ(c.threshold, 5);
  EXPECT_EQ(c.runs, 1);
  EXPECT_EQ(c.bleu.mode, metrics::BleuMode::kSentenceAverage);
  EXPECT_EQ(c.primary_judge().judge_id, "mock-judge-noisy");
  EXPECT_EQ(c.judges.size(), 2u);
  EXPECT_EQ(c.server.port, 0);
  ConfigOverrides unknown;
  unknown.judge_id = "nobody";
  EXPECT_EQ(ErrorOf([&] { ApplyOverrides(c, unknown); }).code(), ErrorCode::kConfigError);
}

EvalRecord Rec(const std::string& sample, const std::string& model, int run,
               const std::string& judge = "j") {
  EvalRecord r = penalty::MakeRecord(sample, model, judge, run, RubricScore({10, 10, 10, 5, 5}),
                                     RubricScore({10, 12, 10, 20, 4}), penalty::Config{});
  r.prompt_variant = "standard";
  return r;
}

TEST(RecordStoreTest, RoundTripInCanonicalOrder) {
  TempDir dir;
  RecordStore s;
  s.records = {Rec("s2", "b", 0), Rec("s1", "b", 0), Rec("s1", "a", 1), Rec("s1", "a", 0)};
  s.failures = {GradeFailure{"s3", "a", "j", "original", "standard", 0, "ParseError", "bad"}};
  s.manifest = {{"config_hash", "abc"}};
  WriteRecordStore(dir / "store", s);
  const RecordStore back = LoadRecordStore(dir / "store");
  ASSERT_EQ(back.records.size(), 4u);
  EXPECT_EQ(back.failures, s.failures);
  EXPECT_EQ(back.manifest["config_hash"], "abc");
  for (std::size_t i = 1; i < back.records.size(); ++i) {
    const auto& p = back.records[i - 1];
    const auto& q = back.records[i];
    EXPECT_LE(std::tie(p.run_index, p.model_id, p.sample_id),
              std::tie(q.run_index, q.model_id, q.sample_id));
  }
  // Input order does not matter.
  RecordStore shuffled = s;
  std::reverse(shuffled.records.begin(), shuffled.records.end());
  WriteRecordStore(dir / "again", shuffled);
  EXPECT_EQ(ReadText(dir / "store/records.jsonl"), ReadText(dir / "again/records.jsonl"));
  EXPECT_EQ(ReadText(dir / "store/manifest.json"), ReadText(dir / "again/manifest.json"));
}

TEST(RecordStoreTest, Errors) {
  TempDir dir;
  EXPECT_EQ(ErrorOf([&] { LoadRecordStore(dir / "absent"); }).code(), ErrorCode::kMissingStore);

  RecordStore s;
  s.records = {Rec("s1", "a", 0), Rec("s2", "a", 0)};
  WriteRecordStore(dir / "store", s);
  std::string text = ReadText(dir / "store/records.jsonl");
  text.insert(text.find('\n') + 1, "{not json\n");
  WriteText(dir / "store/records.jsonl", text);
  const Error e = ErrorOf([&] { LoadRecordStore(dir / "store"); });
  EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
  EXPECT_EQ(e.line(), 2u);

  // A record whose penalized scores disagree with its inputs.
  json row = json::parse(ReadText(dir / "store/records.jsonl").substr(0, text.find('\n')));
  row["penalized_total"] = 1;
  WriteText(dir / "store/records.jsonl", row.dump() + "\n");
  const Error v = ErrorOf([&] { LoadRecordStore(dir / "store"); });
  EXPECT_EQ(v.line(), 1u);
}

TEST(RecordStoreTest, FilterSelects) {
  std::vector<EvalRecord> recs{Rec("s1", "a", 0), Rec("s1", "a", 1), Rec("s1", "b", 0, "k")};
  RecordFilter f;
  f.run_index = 0;
  EXPECT_EQ(Select(recs, f).size(), 2u);
  f.judge_id = "k";
  ASSERT_EQ(Select(recs, f).size(), 1u);
  EXPECT_EQ(Select(recs, f)[0].model_id, "b");
  EXPECT_EQ(Select(recs, RecordFilter{}).size(), 3u);
}

AnnotationRecord Grade(const std::string& rater, const std::string& sample, int grade) {
  AnnotationRecord r;
  r.kind = AnnotationKind::kDirectGrade;
  r.mode = AnnotationMode::kGrade;
  r.rater_id = rater;
  r.sample_id = sample;
  r.model_id = "m";
  r.grade = grade;
  r.timestamp = "2026-01-01T00:00:00Z";
  return r;
}

AnnotationRecord Prefer(const std::string& rater, const std::string& sample, ChosenSide side) {
  AnnotationRecord r = Grade(rater, sample, 0);
  r.kind = AnnotationKind::kPreference;
  r.mode = AnnotationMode::kPrefer;
  r.grade.reset();
  r.chosen = side;
  return r;
}

Assignment Assign(const std::string& rater, const std::string& sample, bool pink_a) {
  return Assignment{rater, sample, "m", pink_a ? "PINK" : "BLEU", pink_a ? "BLEU" : "PINK",
                    7.0, 5.0};
}

TEST(AnnotationStoreTest, AppendIsIdempotentAndPersists) {
  TempDir dir;
  {
    AnnotationStore store(dir / "ann");
    auto [row, added] = store.Append(Grade("r1", "s1", 7));
    EXPECT_TRUE(added);
    auto [again, added2] = store.Append(Grade("r1", "s1", 3));
    EXPECT_FALSE(added2);
    EXPECT_EQ(again.grade, 7);
    EXPECT_TRUE(store.Append(Prefer("r1", "s1", ChosenSide::kA)).second);
    const Assignment first = store.EnsureAssignment(Assign("r1", "s1", true));
    EXPECT_EQ(store.EnsureAssignment(Assign("r1", "s1", false)), first);
  }
  AnnotationStore reopened(dir / "ann");
  EXPECT_EQ(reopened.Records().size(), 2u);
  EXPECT_EQ(reopened.Find("r1", "s1", AnnotationMode::kGrade)->grade, 7);
  ASSERT_EQ(reopened.Assignments().size(), 1u);
  EXPECT_EQ(reopened.FindAssignment("r1", "s1")->shown_a, "PINK");
  EXPECT_FALSE(reopened.FindAssignment("r2", "s1"));
}

TEST(AnnotationStoreTest, SecondOpenIsLocked) {
  TempDir dir;
  AnnotationStore store(dir / "ann");
  EXPECT_EQ(ErrorOf([&] { AnnotationStore other(dir / "ann"); }).code(), ErrorCode::kStoreLocked);
  // Reading a snapshot needs no lock.
  store.Append(Grade("r1", "s1", 4));
  EXPECT_EQ(ReadAnnotationSnapshot(dir / "ann").records.size(), 1u);
}

TEST(AnnotationStoreTest, TornFinalLineIsDropped) {
  TempDir dir;
  {
    AnnotationStore store(dir / "ann");
    store.Append(Grade("r1", "s1", 4));
    store.Append(Grade("r1", "s2", 5));
  }
  const fs::path log = dir / "ann/annotations.jsonl";
  const std::string intact = ReadText(log);
  {
    std::ofstream out(log, std::ios::app | std::ios::binary);
    out << R"({"kind":"DirectGrade","rater_id":"r1","sam)";
  }
  // The snapshot reader skips the fragment without touching it.
  EXPECT_EQ(ReadAnnotationSnapshot(dir / "ann").records.size(), 2u);
  {
    AnnotationStore store(dir / "ann");
    EXPECT_EQ(store.Records().size(), 2u);
    store.Append(Grade("r1", "s3", 6));
  }
  const std::string repaired = ReadText(log);
  EXPECT_EQ(repaired.substr(0, intact.size()), intact);
  AnnotationStore again(dir / "ann");
  EXPECT_EQ(again.Records().size(), 3u);
}

TEST(AnnotationStoreTest, ResolvePreferencesThroughAssignments) {
  std::vector<AnnotationRecord> rows{Prefer("r1", "s1", ChosenSide::kA),
                                     Prefer("r1", "s2", ChosenSide::kA),
                                     Prefer("r2", "s1", ChosenSide::kNeither),
                                     Grade("r1", "s1", 8)};
  AnnotationRecord skip = Grade("r2", "s2", 0);
  skip.kind = AnnotationKind::kSkip;
  skip.grade.reset();
  rows.push_back(skip);
  const std::vector<Assignment> assigns{Assign("r1", "s1", true), Assign("r1", "s2", false),
                                        Assign("r2", "s1", true)};
  const auto votes = ResolvePreferences(rows, assigns);
  ASSERT_EQ(votes.size(), 3u);
  EXPECT_EQ(votes[0].chosen, analysis::PreferredMetric::kPink);
  EXPECT_EQ(votes[1].chosen, analysis::PreferredMetric::kBleu);
  EXPECT_EQ(votes[2].chosen, analysis::PreferredMetric::kNeither);

  const auto grades = CollectGrades(rows);
  EXPECT_EQ(grades.size(), 1u);
  EXPECT_EQ(grades.at("r1").at("s1"), 8);

  const std::vector<Assignment> partial{Assign("r1", "s1", true)};
  EXPECT_EQ(ErrorOf([&] { ResolvePreferences(rows, partial); }).code(),
            ErrorCode::kUnresolvedMapping);
  EXPECT_EQ(ResolveMetric(ChosenSide::kB, "PINK", "BLEU"), "BLEU");
  EXPECT_EQ(ErrorOf([&] { ResolveMetric(ChosenSide::kA, "PINK", "PINK"); }).code(),
            ErrorCode::kUnresolvedMapping);
  EXPECT_EQ(ParseChosenSide(ChosenSideName(ChosenSide::kNeither)), ChosenSide::kNeither);
  EXPECT_EQ(ErrorOf([&] { ParseAnnotationKind("Vote"); }).code(), ErrorCode::kValidation);
}

TEST(Commands, GradeIsCachedAndDeterministic) {
  TempDir a, b;
  const PipelineConfig ca = MiniConfig(a);
  const GradeSummary first = CmdGrade(ca);
  EXPECT_EQ(first.tasks, 36u);
  EXPECT_EQ(first.records, 36u);
  EXPECT_EQ(first.failures, 0u);
  EXPECT_GT(first.judge_calls, 0);
  EXPECT_FALSE(first.over_threshold);
  const GradeSummary second = CmdGrade(ca);
  EXPECT_EQ(second.judge_calls, 0);
  EXPECT_EQ(second.records, 36u);

  CmdGrade(MiniConfig(b));
  for (const char* f : {"records.jsonl", "failures.jsonl", "manifest.json"}) {
    EXPECT_EQ(ReadText(a / "store" / f), ReadText(b / "store" / f)) << f;
  }
  // One oracle grading per sample is shared by every model.
  const RecordStore store = LoadRecordStore(a / "store");
  std::map<std::string, std::set<int>> oracle_totals;
  for (const auto& r : store.records) oracle_totals[r.sample_id].insert(r.oracle.total());
  EXPECT_EQ(oracle_totals.size(), 12u);
  for (const auto& [s, totals] : oracle_totals) EXPECT_EQ(totals.size(), 1u) << s;
}

TEST(Commands, ScoreMatchesGolden) {
  TempDir dir;
  const PipelineConfig c = MiniConfig(dir);
  EXPECT_EQ(ErrorOf([&] { CmdScore(c); }).code(), ErrorCode::kMissingStore);
  CmdGrade(c);
  const ScoreResult r = CmdScore(c);
  EXPECT_EQ(ReadText(dir / "reports/leaderboard.json"),
            ReadText(Mini() / "golden/leaderboard.json"));
  ASSERT_EQ(r.leaderboard.size(), 3u);
  EXPECT_EQ(r.leaderboard[0].model_id, "faithful-ocr");
  EXPECT_EQ(r.leaderboard[0].pink, 1.0);
  EXPECT_EQ(r.leaderboard[0].oc_rate, 0.0);
  for (const auto& e : r.leaderboard) {
    if (e.model_id == "partial-ocr") EXPECT_EQ(e.oc_rate, 0.25);
  }
  for (const char* f : {"leaderboard.csv", "rank_deltas.json", "heatmap.csv", "delta_hist.csv",
                        "scatter.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "reports" / f)) << f;
  }
}

TEST(Commands, SweepBaselineMatchesScore) {
  TempDir dir;
  const PipelineConfig c = MiniConfig(dir);
  CmdGrade(c);
  const ScoreResult score = CmdScore(c);
  const auto sweep = CmdSweep(c);
  ASSERT_EQ(sweep.points.size(), DefaultSweepThresholds().size());
  for (const auto& p : sweep.points) {
    if (p.threshold != 10) continue;
    EXPECT_EQ(p.tau_vs_baseline, 1.0);
    std::vector<std::string> order;
    for (const auto& e : score.leaderboard) order.push_back(e.model_id);
    EXPECT_EQ(p.ranking.order, order);
  }
  EXPECT_TRUE(fs::exists(dir / "reports/sweep.json"));
  EXPECT_EQ(ErrorOf([&] { CmdSweep(c, std::vector<int>{30}); }).code(),
            ErrorCode::kInvalidThreshold);
}

TEST(Commands, LabelMitigateAndRepro) {
  TempDir dir;
  const PipelineConfig c = MiniConfig(dir);
  CmdGrade(c);
  const auto labels = CmdLabel(c);
  EXPECT_EQ(labels.total_pairs, 36);
  EXPECT_GT(labels.discrepant, 0);
  EXPECT_TRUE(fs::exists(dir / "store/labels.jsonl"));
  EXPECT_EQ(ErrorOf([&] { CmdMitigate(c); }).code(), ErrorCode::kSampleSetMismatch);
  const auto notices = CmdRepro(c);
  EXPECT_EQ(notices.size(), 3u);
  const json skipped = json::parse(ReadText(dir / "reports/cross_grader.json"));
  EXPECT_EQ(skipped["skipped"], true);
}

TEST(Commands, FullConfigProducesReproAndMitigation) {
  TempDir dir;
  const PipelineConfig c = MiniConfig(dir, "config_full.json");
  const GradeSummary g = CmdGrade(c);
  // 12 samples x 3 models x 2 prompts x 2 judges x 3 rubric variants x 3 runs.
  EXPECT_EQ(g.records, 1296u);
  EXPECT_TRUE(CmdRepro(c).empty());
  const json cross = json::parse(ReadText(dir / "reports/cross_grader.json"));
  EXPECT_EQ(cross["aligned"], 36);
  EXPECT_GT(cross["model_pink"]["pearson"].get<double>(), 0.9);
  const auto m = CmdMitigate(c);
  EXPECT_EQ(m.rows.size(), 3u);
  EXPECT_LE(m.average.delta_oc_pp, 0.0);
  const std::string md = CmdReport(c, true);
  EXPECT_TRUE(fs::exists(dir / "reports/report.md"));
  EXPECT_NE(md.find("Leaderboard"), std::string::npos);
}

TEST(Commands, TaskPoolFromPrimarySlice) {
  TempDir dir;
  const PipelineConfig c = MiniConfig(dir);
  CmdGrade(c);
  const TaskPool pool = BuildTaskPool(c);
  EXPECT_EQ(pool.items.size(), 12u);
  for (const auto& item : pool.items) EXPECT_EQ(item.model_id, "fixer-ocr");
  ASSERT_NE(pool.Find("s01"), nullptr);
  EXPECT_EQ(pool.Find("s01")->image_ref, "images/s01.png");
  EXPECT_EQ(pool.Find("nope"), nullptr);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string cli = PINK_CLI_PATH;
  const std::string cfg = (Mini() / "config.json").string();
  const std::string outs = " --cache " + (dir / "c").string() + " --store " +
                           (dir / "s").string() + " --reports " + (dir / "r").string();
  EXPECT_NE(testing::RunCommand(cli + " 2>/dev/null").exit_code, 0);
  EXPECT_NE(testing::RunCommand(cli + " score 2>/dev/null").exit_code, 0);
  EXPECT_EQ(testing::RunCommand(cli + " score -c " + cfg + outs + " 2>/dev/null").exit_code, 1);
  const auto grade = testing::RunCommand(cli + " grade -c " + cfg + outs + " 2>/dev/null");
  EXPECT_EQ(grade.exit_code, 0);
  EXPECT_NE(grade.output.find("records=36"), std::string::npos);
  const auto score = testing::RunCommand(cli + " score -c " + cfg + outs + " 2>/dev/null");
  EXPECT_EQ(score.exit_code, 0);
  EXPECT_NE(score.output.find("faithful-ocr"), std::string::npos);
  EXPECT_EQ(testing::RunCommand(cli + " sweep -c " + cfg + outs + " -T 99 2>/dev/null").exit_code,
            1);
}

}  // namespace
}  // namespace pink::app

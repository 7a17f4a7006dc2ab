// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "pink/analysis/human.h"
#include "pink/analysis/reproducibility.h"
#include "pink/app/annotation_store.h"
#include "pink/app/commands.h"
#include "pink/app/config.h"
#include "pink/app/record_store.h"
#include "pink/error.h"
#include "pink/metrics.h"
#include "pink/penalty.h"
#include "pink/stats.h"
#include "test_util.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using pink::EvalRecord;
using pink::RubricScore;
using pink::testing::ReadText;
using pink::testing::TempDir;
using pink::testing::WriteText;

// Collects failure messages for one criterion.
class Check {
 public:
  void That(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  void Near(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: got %.15g want %.15g (tol %g)", what.c_str(), got, want,
                  tol);
    That(std::fabs(got - want) <= tol, buf);
  }
  bool ok() const { return count_ == 0; }
  std::string Summary() const {
    std::string s;
    for (const auto& f : failures_) s += "\n    " + f;
    if (count_ > failures_.size()) s += "\n    ... " + std::to_string(count_) + " failures";
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int failed = 0;

void Criterion(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.That(false, std::string("exception: ") + e.what());
  }
  std::printf("%s %s%s\n", c.ok() ? "PASS" : "FAIL", name.c_str(), c.Summary().c_str());
  std::fflush(stdout);
  if (!c.ok()) ++failed;
}

fs::path Mini() { return fs::path(PINK_TESTDATA_DIR) / "mini"; }

pink::penalty::Config WithT(int t) {
  pink::penalty::Config c;
  c.threshold = t;
  return c;
}

void PenaltyRule(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  for (int t : {0, 5, 10, 15, 20}) {
    for (int m = 0; m <= 20; ++m) {
      for (int o = 0; o <= 20; ++o) {
        const int got = pink::penalty::PenalizeComponent(m, o, WithT(t));
        const int want = pink::oracle::PenalizeComponent(m, o, t);
        c.That(got == want, "m=" + std::to_string(m) + " o=" + std::to_string(o) +
                                " T=" + std::to_string(t));
      }
    }
  }
  c.That(Seconds(start) < 1.0, "exhaustive check took over 1 s");
}

void PipelineItem(Check& c, const pink::app::RecordStore& mini) {
  const auto item = pink::penalty::PenalizeItem(RubricScore({20, 20, 20, 20, 20}),
                                                RubricScore({20, 20, 20, 5, 5}), WithT(10));
  c.That(item.total == 60, "penalized total " + std::to_string(item.total));
  const EvalRecord r = pink::penalty::MakeRecord("s", "m", "j", 0, RubricScore({20, 20, 20, 5, 5}),
                                                 RubricScore({20, 20, 20, 20, 20}), WithT(10));
  const std::vector<EvalRecord> one{r};
  c.Near(pink::metrics::PinkScore(one), 60.0 / 70.0, 1e-9, "item PINK");
  bool found = false;
  for (const auto& rec : mini.records) {
    if (rec.sample_id != "s01" || rec.model_id != "fixer-ocr") continue;
    found = true;
    c.That(rec.penalized_total == 60, "mini s01 fixer-ocr penalized total");
    c.That(rec.oracle.total() == 70, "mini s01 fixer-ocr oracle total");
    const std::vector<EvalRecord> mine{rec};
    c.Near(pink::metrics::PinkScore(mine), 60.0 / 70.0, 1e-9, "mini s01 fixer-ocr PINK");
  }
  c.That(found, "mini s01 fixer-ocr record missing");
}

void FixedPoint(Check& c, const pink::app::RecordStore& mini) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> score(0, 20);
  std::vector<EvalRecord> faithful;
  for (int i = 0; i < 300; ++i) {
    std::vector<int> s(5);
    for (auto& v : s) v = score(rng);
    if (i == 0) s = {1, 0, 0, 0, 0};
    faithful.push_back(pink::penalty::MakeRecord("s" + std::to_string(i), "f", "j", 0,
                                                 RubricScore(s), RubricScore(s), WithT(10)));
  }
  c.That(pink::metrics::PinkScore(faithful) == 1.0, "synthetic faithful PINK != 1.0 exactly");
  c.That(pink::metrics::OcRate(faithful) == 0.0, "synthetic faithful OC != 0");
  std::vector<EvalRecord> mini_faithful;
  for (const auto& r : mini.records) {
    if (r.model_id == "faithful-ocr") mini_faithful.push_back(r);
  }
  c.That(!mini_faithful.empty(), "no faithful-ocr records");
  c.That(pink::metrics::PinkScore(mini_faithful) == 1.0, "mini faithful-ocr PINK != 1.0");
  c.That(pink::metrics::OcRate(mini_faithful) == 0.0, "mini faithful-ocr OC != 0");
}

// Oracle PINK per model at threshold t, from raw scores only.
std::map<std::string, double> OraclePink(const std::vector<EvalRecord>& records, int t) {
  std::map<std::string, std::pair<long long, long long>> sums;
  for (const auto& r : records) {
    long long pen = 0;
    for (std::size_t k = 0; k < r.model.components().size(); ++k) {
      pen += pink::oracle::PenalizeComponent(r.model.components()[k], r.oracle.components()[k], t);
    }
    if (r.oracle.total() == 0) continue;
    sums[r.model_id].first += pen;
    sums[r.model_id].second += r.oracle.total();
  }
  std::map<std::string, double> out;
  for (const auto& [m, s] : sums) out[m] = static_cast<double>(s.first) / s.second;
  return out;
}

std::vector<double> RankVector(const std::map<std::string, double>& scores) {
  std::vector<double> v;
  for (const auto& [m, r] : pink::oracle::Ranks(scores)) v.push_back(r);
  return v;
}

void SweepConsistency(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  TempDir dir;
  const int models = 5, items = 200;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> score(0, 20), coin(0, 99), bump(1, 20);
  std::string corpus, transcriptions;
  pink::app::RecordStore store;
  for (int i = 0; i < items; ++i) {
    const std::string id = "s" + std::to_string(i);
    corpus += json{{"sample_id", id}, {"problem_id", "p" + std::to_string(i)},
                   {"problem_text", "problem"}, {"reference_solution", "ref"},
                   {"gt_transcription", "x + " + std::to_string(i)}, {"is_clean", false}}
                  .dump() +
              "\n";
    std::vector<int> oracle(5);
    for (auto& v : oracle) v = score(rng);
    for (int m = 0; m < models; ++m) {
      const std::string model = "model" + std::to_string(m);
      transcriptions += json{{"sample_id", id}, {"model_id", model},
                             {"prompt_variant", "standard"},
                             {"text", "x + " + std::to_string(i + m)}}
                            .dump() +
                        "\n";
      std::vector<int> ms = oracle;
      for (auto& v : ms) {
        const int roll = coin(rng);
        if (roll < 6 * m) {
          v = std::min(20, v + bump(rng));
        } else if (roll >= 90) {
          v = std::max(0, v - bump(rng));
        }
      }
      EvalRecord r = pink::penalty::MakeRecord(id, model, "synthetic", 0, RubricScore(oracle),
                                               RubricScore(ms), WithT(10));
      r.rubric_variant = "original";
      r.prompt_variant = "standard";
      store.records.push_back(r);
    }
  }
  WriteText(dir / "corpus.jsonl", corpus);
  WriteText(dir / "transcriptions.jsonl", transcriptions);
  WriteText(dir / "fixture.json", R"({"grades": {}})");
  pink::app::WriteRecordStore(dir / "store", store);
  const json cfg{{"corpus", "corpus.jsonl"},
                 {"transcriptions", {"transcriptions.jsonl"}},
                 {"judges", {{{"judge_id", "synthetic"}, {"kind", "mock"},
                              {"model_name", "synthetic"}, {"fixture", "fixture.json"}}}},
                 {"penalty", {{"threshold", 10}}},
                 {"cache_dir", "cache"},
                 {"store_dir", "store"},
                 {"report_dir", "reports"},
                 {"annotation_store", "annotations"}};
  WriteText(dir / "config.json", cfg.dump(2));
  const auto config = pink::app::LoadPipelineConfig(dir / "config.json");

  const auto score_result = pink::app::CmdScore(config);
  std::vector<int> all_t;
  for (int t = 0; t <= 20; ++t) all_t.push_back(t);
  const auto sweep = pink::app::CmdSweep(config, all_t);

  std::vector<std::string> board;
  for (const auto& e : score_result.leaderboard) board.push_back(e.model_id);
  const auto baseline = OraclePink(store.records, 10);
  const auto baseline_ranks = RankVector(baseline);
  std::set<double> distinct;
  for (const auto& [m, p] : baseline) distinct.insert(p);
  c.That(distinct.size() == static_cast<std::size_t>(models), "fixture has tied PINK at T=10");
  for (const auto& p : sweep.points) {
    const auto want = OraclePink(store.records, p.threshold);
    for (const auto& [m, v] : want) {
      c.Near(p.pink.at(m), v, 1e-12, "PINK " + m + " T=" + std::to_string(p.threshold));
    }
    const double tau = pink::oracle::KendallTauB(baseline_ranks, RankVector(want));
    c.Near(p.tau_vs_baseline, tau, 1e-12, "tau at T=" + std::to_string(p.threshold));
    if (p.threshold == 10) {
      c.That(p.ranking.order == board, "T=10 sweep order differs from the leaderboard");
      c.That(p.tau_vs_baseline == 1.0, "T=10 tau is not exactly 1");
    }
  }
  c.That(Seconds(start) < 5.0, "sweep check took over 5 s");
}

void StatsOracles(Check& c) {
  std::mt19937_64 rng(99);
  int fixtures = 0;
  std::vector<int> cats(21);
  std::iota(cats.begin(), cats.end(), 0);
  for (int f = 0; f < 24; ++f) {
    const int n = 5 + f * 3;
    std::uniform_int_distribution<int> d(0, f % 2 ? 5 : 20);
    std::vector<double> x(n), y(n);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = d(rng);
      b[i] = std::clamp(a[i] + d(rng) % 4 - 1, 0, 20);
      x[i] = a[i];
      y[i] = b[i];
    }
    const std::string tag = "fixture " + std::to_string(f);
    c.Near(pink::stats::Pearson(x, y), pink::oracle::Pearson(x, y), 1e-9, tag + " pearson");
    c.Near(pink::stats::KendallTauB(x, y), pink::oracle::KendallTauB(x, y), 1e-9,
           tag + " kendall");
    c.Near(pink::stats::WeightedKappa(a, b, cats), pink::oracle::WeightedKappa(a, b, cats, true),
           1e-9, tag + " qwk");
    ++fixtures;
  }
  c.That(fixtures >= 20, "fewer than 20 fixtures");
  std::vector<double> up(15), down(15);
  for (int i = 0; i < 15; ++i) {
    up[i] = i;
    down[i] = 14 - i;
  }
  std::shuffle(up.begin(), up.end(), rng);
  c.That(pink::stats::KendallTauB(up, up) == 1.0, "tau of identical 15-element ranking");
  std::vector<double> rev(15);
  for (int i = 0; i < 15; ++i) rev[i] = -up[i];
  c.That(pink::stats::KendallTauB(up, rev) == -1.0, "tau of reversed 15-element ranking");
}

void MetricOracles(Check& c) {
  c.That(pink::metrics::NormEditDistance("kitten", "sitting") == 3.0 / 7.0, "kitten/sitting");
  const std::vector<pink::metrics::TextPair> same{{"a + b = c", "a + b = c"},
                                                  {"\\frac{1}{2}", "\\frac{1}{2}"}};
  c.That(pink::metrics::Bleu(same) == 1.0, "BLEU of identical corpus");
  const std::vector<pink::metrics::TextPair> three{{"a + b = c", "a + b = c"},
                                                   {"x ^ 2", "x ^ 3"},
                                                   {"f ( x ) = 0", "f ( x )"}};
  const double expected = std::exp(1.0 - 14.0 / 12.0) *
                          std::pow((11.0 / 12.0) * (8.0 / 9.0) * (5.0 / 6.0), 0.25);
  c.Near(pink::metrics::Bleu(three), expected, 1e-9, "three-pair BLEU");
  const std::vector<std::string> words{"", "a", "ab", "ba", "abc", "x^2", "x^{2}", "\\int"};
  for (const auto& p : words) {
    for (const auto& q : words) {
      c.That(pink::metrics::EditDistance(p, q) == pink::oracle::Levenshtein(p, q),
             "edit distance " + p + "/" + q);
      for (const auto& r : words) {
        c.That(pink::metrics::EditDistance(p, r) <=
                   pink::metrics::EditDistance(p, q) + pink::metrics::EditDistance(q, r),
               "triangle " + p + "/" + q + "/" + r);
      }
    }
  }
}

std::string Cli(const TempDir& dir) {
  return std::string(PINK_CLI_PATH) + " %s -c " + (Mini() / "config.json").string() +
         " --cache " + (dir / "cache").string() + " --store " + (dir / "store").string() +
         " --reports " + (dir / "reports").string() + " 2>/dev/null";
}

pink::testing::CommandResult RunCli(const TempDir& dir, const std::string& command) {
  std::string cmd = Cli(dir);
  cmd.replace(cmd.find("%s"), 2, command);
  return pink::testing::RunCommand(cmd);
}

void EndToEnd(Check& c, const TempDir& a, const TempDir& b) {
  const auto start = std::chrono::steady_clock::now();
  for (const TempDir* d : {&a, &b}) {
    const auto g = RunCli(*d, "grade");
    c.That(g.exit_code == 0, "grade exit " + std::to_string(g.exit_code));
    const auto s = RunCli(*d, "score");
    c.That(s.exit_code == 0, "score exit " + std::to_string(s.exit_code));
  }
  for (const char* f : {"records.jsonl", "failures.jsonl", "manifest.json"}) {
    c.That(ReadText(a / "store" / f) == ReadText(b / "store" / f),
           std::string(f) + " differs between runs");
  }
  c.That(ReadText(a / "reports/leaderboard.json") == ReadText(Mini() / "golden/leaderboard.json"),
         "leaderboard.json differs from golden");
  const auto again = RunCli(a, "grade");
  c.That(again.output.find("judge_calls=0 ") != std::string::npos,
         "second grade made judge calls: " + again.output);
  c.That(Seconds(start) < 10.0, "end-to-end took over 10 s");
}

void CrossJudgeDegenerate(Check& c, const pink::app::RecordStore& mini) {
  std::vector<EvalRecord> a = mini.records, b = mini.records;
  for (auto& r : b) r.judge_id = "mock-judge-copy";
  const auto rep = pink::analysis::CrossGrader(a, b);
  c.That(rep.grading_pearson == 1.0, "sample pearson");
  c.That(rep.grading_qwk == 1.0, "sample qwk");
  c.That(rep.penalized_qwk == 1.0, "penalized qwk");
  c.That(rep.pink_pearson.has_value() && std::fabs(*rep.pink_pearson - 1.0) < 1e-12,
         "model pearson");
  c.That(rep.rank_tau == 1.0, "rank tau");

  std::vector<std::vector<EvalRecord>> runs;
  for (int run = 0; run < 3; ++run) {
    std::vector<EvalRecord> recs;
    for (auto r : mini.records) {
      if (r.model_id != "fixer-ocr") continue;
      r.run_index = run;
      recs.push_back(r);
    }
    runs.push_back(recs);
  }
  const auto stab = pink::analysis::ComputeRunStability("fixer-ocr", runs);
  c.That(stab.cv_percent == 0.0, "run CV");
  c.That(stab.mean_pairwise_qwk == 1.0, "run QWK");
}

void PreferenceSplit(Check& c) {
  using pink::app::AnnotationRecord;
  using pink::app::Assignment;
  std::vector<AnnotationRecord> rows;
  std::vector<Assignment> assigns;
  std::map<std::string, double> scores;
  auto add = [&](int n, const std::string& metric) {
    for (int k = 0; k < n; ++k) {
      const std::string id = "s" + std::to_string(rows.size());
      const bool pink_a = rows.size() % 2 == 0;
      Assignment a{"r1", id, "m", pink_a ? "PINK" : "BLEU", pink_a ? "BLEU" : "PINK", 5, 5};
      AnnotationRecord r;
      r.kind = pink::app::AnnotationKind::kPreference;
      r.mode = pink::app::AnnotationMode::kPrefer;
      r.rater_id = "r1";
      r.sample_id = id;
      if (metric == "Neither") {
        r.chosen = pink::app::ChosenSide::kNeither;
      } else {
        r.chosen = (metric == "PINK") == pink_a ? pink::app::ChosenSide::kA
                                                : pink::app::ChosenSide::kB;
      }
      scores[id] = static_cast<double>(rows.size() % 11);
      rows.push_back(r);
      assigns.push_back(a);
    }
  };
  add(110, "PINK");
  add(79, "BLEU");
  add(11, "Neither");
  const auto votes = pink::app::ResolvePreferences(rows, assigns);
  const auto report = pink::analysis::AggregatePreferences(votes, scores);
  c.That(report.overall.total == 200, "total");
  c.Near(report.overall.pct_pink, 55.0, 1e-9, "pct PINK");
  c.Near(report.overall.pct_bleu, 39.5, 1e-9, "pct BLEU");
  c.Near(report.overall.pct_neither, 5.5, 1e-9, "pct Neither");
}

}  // namespace

int main() {
  TempDir run_a, run_b;
  pink::app::RecordStore mini;

  Criterion("penalty rule matches the piecewise definition (441 pairs x 5 thresholds, <1s)",
            PenaltyRule);
  Criterion("mini pipeline end to end: identical stores, golden leaderboard, cached rerun (<10s)",
            [&](Check& c) {
              EndToEnd(c, run_a, run_b);
              mini = pink::app::LoadRecordStore(run_a / "store");
            });
  Criterion("pipeline item scores 60 and PINK 60/70 (tol 1e-9)",
            [&](Check& c) { PipelineItem(c, mini); });
  Criterion("faithful transcriptions give PINK exactly 1.0 and OC 0",
            [&](Check& c) { FixedPoint(c, mini); });
  Criterion("threshold sweep agrees with the leaderboard and the recomputed curve (tol 1e-12, <5s)",
            SweepConsistency);
  Criterion("pearson, kendall tau-b and QWK match oracles on 24 fixtures (tol 1e-9)",
            StatsOracles);
  Criterion("edit distance and BLEU match hand values (tol 1e-9)", MetricOracles);
  Criterion("identical judges and runs agree perfectly (r = QWK = tau = 1, CV = 0)",
            [&](Check& c) { CrossJudgeDegenerate(c, mini); });
  Criterion("preference split 110/79/11 reports 55.0/39.5/5.5", PreferenceSplit);

  std::printf("%s: %d failing\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}

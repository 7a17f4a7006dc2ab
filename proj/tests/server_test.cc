#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "oracles.h"
#include "pink/app/server.h"
#include "pink/error.h"
#include "test_util.h"

namespace pink::app {
namespace {

using nlohmann::json;

TaskPool SyntheticPool(int n) {
  TaskPool pool;
  for (int i = 0; i < n; ++i) {
    TaskItem t;
    char id[16];
    std::snprintf(id, sizeof(id), "s%03d", i);
    t.sample_id = id;
    t.model_id = "fixer";
    t.problem_text = "problem " + std::to_string(i);
    t.reference_solution = "ref";
    t.student_solution = "x^2 + " + std::to_string(i);
    if (i % 4 == 0) t.image_ref = "images/" + t.sample_id + ".png";
    t.pink_score = 5.0 + (i % 5);
    t.bleu_score = 9.0 - (i % 3) * 0.5;
    t.auto_total = 10 * (i % 10);
    pool.items.push_back(t);
  }
  return pool;
}

// A live server on a free port, torn down with the fixture.
class Live {
 public:
  Live(TaskPool pool, const std::filesystem::path& store_dir, std::string token = "")
      : store_(std::make_shared<AnnotationStore>(store_dir)),
        server_(std::move(pool), store_, Options(std::move(token))) {
    const int port = server_.Bind();
    thread_ = std::thread([this] { server_.Run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port);
    client_->set_connection_timeout(5);
    client_->set_read_timeout(5);
  }
  ~Live() {
    server_.Stop();
    thread_.join();
  }

  httplib::Client& client() { return *client_; }
  AnnotationStore& store() { return *store_; }

  json Next(const std::string& rater, const std::string& mode, int expect = 200) {
    auto res = client_->Get("/api/tasks/next?rater=" + rater + "&mode=" + mode);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

  int Post(const json& body) {
    auto res = client_->Post("/api/annotations", body.dump(), "application/json");
    EXPECT_TRUE(res);
    return res ? res->status : -1;
  }

  static constexpr const char* kSeed = "test-seed";

 private:
  static ServerOptions Options(std::string token) {
    ServerOptions o;
    o.port = 0;
    o.token = std::move(token);
    o.secret_seed = kSeed;
    return o;
  }

  std::shared_ptr<AnnotationStore> store_;
  AnnotationServer server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json GradeBody(const std::string& rater, const std::string& sample, json grade) {
  return {{"kind", "DirectGrade"}, {"rater_id", rater}, {"sample_id", sample},
          {"grade", grade}, {"ui_session_id", "u1"}};
}

json PreferBody(const std::string& rater, const std::string& sample, const std::string& side) {
  return {{"kind", "Preference"}, {"rater_id", rater}, {"sample_id", sample},
          {"chosen", side}};
}

TEST(Server, BearerTokenGuardsTheApi) {
  testing::TempDir dir;
  Live live(SyntheticPool(3), dir / "ann", "s3cret");
  auto res = live.client().Get("/api/progress?rater=r1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
  httplib::Headers wrong{{"Authorization", "Bearer nope"}};
  EXPECT_EQ(live.client().Get("/api/progress?rater=r1", wrong)->status, 401);
  httplib::Headers right{{"Authorization", "Bearer s3cret"}};
  EXPECT_EQ(live.client().Get("/api/progress?rater=r1", right)->status, 200);
  // The UI page itself is public.
  auto page = live.client().Get("/");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_NE(page->body.find("/api/"), std::string::npos);
}

TEST(Server, GradeFlowAndValidation) {
  testing::TempDir dir;
  Live live(SyntheticPool(3), dir / "ann");
  json next = live.Next("r1", "grade");
  EXPECT_EQ(next["done"], false);
  EXPECT_EQ(next["task"]["sample_id"], "s000");
  EXPECT_EQ(next["task"]["image_ref"], "images/s000.png");
  EXPECT_FALSE(next["task"].contains("score_a"));
  EXPECT_EQ(next["progress"], (json{{"completed", 0}, {"total", 3}}));

  EXPECT_EQ(live.Post(GradeBody("r1", "s000", 11)), 400);
  EXPECT_EQ(live.Post(GradeBody("r1", "s000", -1)), 400);
  EXPECT_EQ(live.Post(GradeBody("r1", "s000", 7.5)), 400);
  EXPECT_EQ(live.Post(GradeBody("r1", "s999", 5)), 404);
  EXPECT_EQ(live.Post(json{{"kind", "DirectGrade"}, {"sample_id", "s000"}, {"grade", 3}}), 400);
  EXPECT_EQ(live.Post(json{{"kind", "Vote"}, {"rater_id", "r1"}, {"sample_id", "s000"}}), 400);
  auto raw = live.client().Post("/api/annotations", "{oops", "application/json");
  EXPECT_EQ(raw->status, 400);
  EXPECT_EQ(live.store().Records().size(), 0u);

  EXPECT_EQ(live.Post(GradeBody("r1", "s000", 7)), 201);
  EXPECT_EQ(live.Post(GradeBody("r1", "s000", 2)), 200);
  EXPECT_EQ(live.store().Find("r1", "s000", AnnotationMode::kGrade)->grade, 7);

  next = live.Next("r1", "grade");
  EXPECT_EQ(next["task"]["sample_id"], "s001");
  EXPECT_EQ(next["progress"]["completed"], 1);
  EXPECT_EQ(live.Post({{"kind", "Skip"}, {"rater_id", "r1"}, {"sample_id", "s001"},
                       {"mode", "grade"}}),
            201);
  EXPECT_EQ(live.Post(GradeBody("r1", "s002", 0)), 201);
  EXPECT_EQ(live.Next("r1", "grade")["done"], true);
  EXPECT_EQ(live.Next("r2", "grade")["task"]["sample_id"], "s000");
  live.Next("", "grade", 400);
  live.Next("r1", "rank", 400);
}

TEST(Server, PreferenceNeedsAFetchedAssignment) {
  testing::TempDir dir;
  Live live(SyntheticPool(3), dir / "ann");
  EXPECT_EQ(live.Post(PreferBody("r1", "s000", "A")), 409);
  const json next = live.Next("r1", "prefer");
  const std::string sample = next["task"]["sample_id"];
  const auto a = live.store().FindAssignment("r1", sample);
  ASSERT_TRUE(a);
  const TaskItem item = SyntheticPool(3).items[0];
  const bool pink_a = PinkOnSideA(Live::kSeed, "r1", sample);
  EXPECT_EQ(a->shown_a, pink_a ? "PINK" : "BLEU");
  EXPECT_EQ(next["task"]["score_a"].get<double>(), pink_a ? *item.pink_score : item.bleu_score);
  EXPECT_EQ(next["task"]["score_b"].get<double>(), pink_a ? item.bleu_score : *item.pink_score);
  EXPECT_EQ(live.Post(PreferBody("r1", sample, "C")), 400);
  EXPECT_EQ(live.Post(PreferBody("r1", sample, "A")), 201);
  EXPECT_EQ(live.store().Find("r1", sample, AnnotationMode::kPrefer)->resolved_metric,
            pink_a ? "PINK" : "BLEU");
}

TEST(Server, AnnotationsSurviveARestart) {
  testing::TempDir dir;
  std::string shown_a;
  {
    Live live(SyntheticPool(4), dir / "ann");
    live.Next("r1", "prefer");
    shown_a = live.store().FindAssignment("r1", "s000")->shown_a;
    EXPECT_EQ(live.Post(PreferBody("r1", "s000", "B")), 201);
    EXPECT_EQ(live.Post(GradeBody("r1", "s001", 4)), 201);
    live.Next("r1", "prefer");  // s001 assignment, left unanswered
  }
  Live again(SyntheticPool(4), dir / "ann");
  EXPECT_EQ(again.store().Records().size(), 2u);
  EXPECT_EQ(again.store().FindAssignment("r1", "s000")->shown_a, shown_a);
  const json next = again.Next("r1", "prefer");
  EXPECT_EQ(next["task"]["sample_id"], "s001");
  EXPECT_EQ(next["progress"]["completed"], 1);
  EXPECT_EQ(again.store().Assignments().size(), 2u);
  EXPECT_EQ(again.Post(PreferBody("r1", "s000", "A")), 200);
  auto progress = again.client().Get("/api/progress?rater=r1");
  const json p = json::parse(progress->body);
  EXPECT_EQ(p["grade"]["completed"], 1);
  EXPECT_EQ(p["prefer"]["completed"], 1);
  EXPECT_EQ(p["prefer"]["total"], 4);
}

TEST(Server, SideAssignmentIsBalancedAndStable) {
  int pink_a = 0;
  for (int r = 0; r < 20; ++r) {
    for (int s = 0; s < 50; ++s) {
      const std::string rater = "rater" + std::to_string(r);
      const std::string sample = "s" + std::to_string(s);
      const bool side = PinkOnSideA("seed-1", rater, sample);
      pink_a += side;
      ASSERT_EQ(PinkOnSideA("seed-1", rater, sample), side);
    }
  }
  EXPECT_GE(pink_a, 450);
  EXPECT_LE(pink_a, 550);

  // Over HTTP: repeated fetches never change a persisted mapping.
  testing::TempDir dir;
  Live live(SyntheticPool(2), dir / "ann");
  const json first = live.Next("r9", "prefer");
  for (int i = 0; i < 5; ++i) EXPECT_EQ(live.Next("r9", "prefer")["task"], first["task"]);
  EXPECT_EQ(live.store().Assignments().size(), 1u);
}

TEST(Server, StatsMatchHandTallies) {
  testing::TempDir dir;
  const TaskPool pool = SyntheticPool(10);
  Live live(pool, dir / "ann");
  // Two raters grade all ten samples; r1 also votes on every sample.
  const std::vector<int> g1{0, 3, 5, 7, 9, 10, 2, 4, 6, 8};
  const std::vector<int> g2{1, 3, 6, 7, 8, 10, 2, 5, 6, 9};
  for (int i = 0; i < 10; ++i) {
    const std::string s = pool.items[i].sample_id;
    ASSERT_EQ(live.Post(GradeBody("r1", s, g1[i])), 201);
    ASSERT_EQ(live.Post(GradeBody("r2", s, g2[i])), 201);
  }
  int pink = 0, bleu = 0, neither = 0;
  for (int i = 0; i < 10; ++i) {
    const json next = live.Next("r1", "prefer");
    const std::string s = next["task"]["sample_id"];
    std::string side = "A";
    if (i % 5 == 4) {
      side = "Neither";
      ++neither;
    } else if (i % 2 == 1) {
      side = "B";
    }
    if (side != "Neither") {
      const bool pink_a = PinkOnSideA(Live::kSeed, "r1", s);
      ((side == "A") == pink_a ? pink : bleu) += 1;
    }
    ASSERT_EQ(live.Post(PreferBody("r1", s, side)), 201);
  }

  auto res = live.client().Get("/api/stats");
  ASSERT_TRUE(res);
  const json stats = json::parse(res->body);
  const json& h = stats["human_agreement"];
  std::vector<int> cats(11);
  std::iota(cats.begin(), cats.end(), 0);
  EXPECT_NEAR(h["mean_kappa"].get<double>(), oracle::WeightedKappa(g1, g2, cats, true), 1e-12);
  std::vector<double> mean_h, autos;
  for (int i = 0; i < 10; ++i) {
    mean_h.push_back((g1[i] + g2[i]) / 2.0);
    autos.push_back(pool.items[i].auto_total / 10.0);
  }
  EXPECT_NEAR(h["pearson_mean_human_vs_auto"].get<double>(), oracle::Pearson(mean_h, autos),
              1e-12);
  const json& overall = stats["preference_aggregate"]["overall"];
  EXPECT_EQ(overall["PINK"], pink);
  EXPECT_EQ(overall["BLEU"], bleu);
  EXPECT_EQ(overall["Neither"], neither);
  EXPECT_EQ(overall["total"], 10);
  EXPECT_NEAR(overall["pct_PINK"].get<double>(), pink * 10.0, 1e-12);
}

TEST(Server, StatsReportUndefinedSections) {
  testing::TempDir dir;
  Live live(SyntheticPool(2), dir / "ann");
  const json stats = json::parse(live.client().Get("/api/stats")->body);
  EXPECT_EQ(stats["human_agreement"]["error"], "InsufficientRaters");
  EXPECT_EQ(stats["preference_aggregate"]["overall"]["total"], 0);
}

TEST(Server, BindFailureOnBusyPort) {
  testing::TempDir dir;
  auto store = std::make_shared<AnnotationStore>(dir / "ann");
  ServerOptions o;
  o.port = 0;
  AnnotationServer first(SyntheticPool(1), store, o);
  o.port = first.Bind();
  AnnotationServer second(SyntheticPool(1), store, o);
  try {
    second.Bind();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBindFailure);
  }
}

}  // namespace
}  // namespace pink::app

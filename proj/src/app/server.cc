#include "pink/app/server.h"

#include <chrono>
#include <ctime>

#include <sys/socket.h>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "pink/analysis/report.h"
#include "pink/error.h"
#include "pink/hash.h"

namespace pink::app {

using nlohmann::json;

const TaskItem* TaskPool::Find(const std::string& sample_id) const {
  for (const auto& item : items)
    if (item.sample_id == sample_id) return &item;
  return nullptr;
}

std::size_t TaskPool::Count(AnnotationMode mode) const {
  if (mode == AnnotationMode::kGrade) return items.size();
  std::size_t n = 0;
  for (const auto& item : items) n += item.pink_score.has_value();
  return n;
}

bool PinkOnSideA(const std::string& secret_seed, const std::string& rater_id,
                 const std::string& sample_id) {
  const std::string digest =
      FieldHasher().Add("ab-side").Add(secret_seed).Add(rater_id).Add(sample_id).HexDigest();
  return std::stoi(digest.substr(0, 2), nullptr, 16) % 2 == 0;
}

Assignment MakeAssignment(const TaskItem& item, const std::string& rater_id,
                          const std::string& secret_seed) {
  if (!item.pink_score) {
    throw Error(ErrorCode::kPrecondition,
                "sample " + item.sample_id + " has no PINK score to compare");
  }
  Assignment a;
  a.rater_id = rater_id;
  a.sample_id = item.sample_id;
  a.model_id = item.model_id;
  if (PinkOnSideA(secret_seed, rater_id, item.sample_id)) {
    a.shown_a = "PINK";
    a.shown_b = "BLEU";
    a.score_a = *item.pink_score;
    a.score_b = item.bleu_score;
  } else {
    a.shown_a = "BLEU";
    a.shown_b = "PINK";
    a.score_a = item.bleu_score;
    a.score_b = *item.pink_score;
  }
  return a;
}

namespace {

json ErrorJson(const Error& e) {
  return json{{"error", ErrorCodeName(e.code())}, {"message", e.what()}};
}

}  // namespace

json AnnotationStats(const TaskPool& pool, const std::vector<AnnotationRecord>& records,
                     const std::vector<Assignment>& assignments) {
  json out = json::object();
  std::map<std::string, double> auto_totals, pink_scores;
  for (const auto& item : pool.items) {
    auto_totals[item.sample_id] = item.auto_total;
    if (item.pink_score) pink_scores[item.sample_id] = *item.pink_score;
  }
  try {
    out["human_agreement"] =
        analysis::ToJson(analysis::ComputeHumanAgreement(CollectGrades(records), auto_totals));
  } catch (const Error& e) {
    out["human_agreement"] = ErrorJson(e);
  }
  try {
    const auto votes = ResolvePreferences(records, assignments);
    out["preference_aggregate"] =
        analysis::ToJson(analysis::AggregatePreferences(votes, pink_scores));
  } catch (const Error& e) {
    out["preference_aggregate"] = ErrorJson(e);
  }
  return out;
}

namespace {

constexpr char kPlaceholderPage[] =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>Annotation</title>"
    "</head><body><p>No UI bundle is configured. The JSON API lives under "
    "<code>/api/</code>.</p></body></html>\n";

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, const Error& e) {
  int status = 500;
  switch (e.code()) {
    case ErrorCode::kValidation:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kMissingField:
      status = 400;
      break;
    case ErrorCode::kUnknownSampleId:
      status = 404;
      break;
    case ErrorCode::kUnresolvedMapping:
    case ErrorCode::kPrecondition:
      status = 409;
      break;
    default:
      break;
  }
  Reply(res, status, ErrorJson(e));
}

std::string RequiredParam(const httplib::Request& req, const char* name) {
  if (!req.has_param(name) || req.get_param_value(name).empty()) {
    throw Error(ErrorCode::kValidation, std::string("missing query parameter '") + name + "'");
  }
  return req.get_param_value(name);
}

std::string RequiredString(const json& body, const char* name) {
  if (!body.contains(name) || !body.at(name).is_string() ||
      body.at(name).get<std::string>().empty()) {
    throw Error(ErrorCode::kValidation, std::string("field '") + name + "' must be a non-empty string");
  }
  return body.at(name).get<std::string>();
}

}  // namespace

AnnotationServer::AnnotationServer(TaskPool pool, std::shared_ptr<AnnotationStore> store,
                                   ServerOptions options)
    : pool_(std::move(pool)),
      store_(std::move(store)),
      options_(std::move(options)),
      http_(std::make_unique<httplib::Server>()) {
  // Without SO_REUSEPORT a second server on a busy port fails to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  Routes();
}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::Bind() {
  if (options_.port == 0) {
    port_ = http_->bind_to_any_port(options_.host);
    if (port_ < 0) port_ = 0;
  } else if (http_->bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kBindFailure, "cannot bind " + options_.host + ":" +
                                             std::to_string(options_.port));
  }
  return port_;
}

void AnnotationServer::Run() {
  if (port_ <= 0) throw Error(ErrorCode::kPrecondition, "Run() before Bind()");
  http_->listen_after_bind();
}

void AnnotationServer::Stop() {
  if (http_ && http_->is_running()) http_->stop();
}

void AnnotationServer::Routes() {
  auto& http = *http_;

  http.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (options_.token.empty() || req.path.rfind("/api/", 0) != 0)
      return httplib::Server::HandlerResponse::Unhandled;
    const std::string expected = "Bearer " + options_.token;
    if (req.get_header_value("Authorization") == expected)
      return httplib::Server::HandlerResponse::Unhandled;
    Reply(res, 401, json{{"error", "Unauthorized"}, {"message", "missing or wrong token"}});
    return httplib::Server::HandlerResponse::Handled;
  });

  http.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const Error& e) {
          ReplyError(res, e);
        } catch (const std::exception& e) {
          spdlog::error("request failed: {}", e.what());
          Reply(res, 500, json{{"error", "Internal"}, {"message", e.what()}});
        }
      });

  http.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = RequiredParam(req, "rater");
    const AnnotationMode mode = ParseAnnotationMode(req.has_param("mode")
                                                        ? req.get_param_value("mode")
                                                        : "grade");
    std::size_t completed = 0;
    const TaskItem* next = nullptr;
    for (const auto& item : pool_.items) {
      if (mode == AnnotationMode::kPrefer && !item.pink_score) continue;
      if (store_->Find(rater, item.sample_id, mode)) {
        ++completed;
      } else if (!next) {
        next = &item;
      }
    }
    json progress{{"completed", completed}, {"total", pool_.Count(mode)}};
    if (!next) {
      Reply(res, 200, json{{"done", true}, {"mode", AnnotationModeName(mode)},
                           {"progress", progress}});
      return;
    }
    json task{{"sample_id", next->sample_id},
              {"problem_text", next->problem_text},
              {"reference_solution", next->reference_solution},
              {"student_solution", next->student_solution}};
    if (next->image_ref) task["image_ref"] = *next->image_ref;
    if (mode == AnnotationMode::kPrefer) {
      // Persisted before the task leaves the server.
      const Assignment a =
          store_->EnsureAssignment(MakeAssignment(*next, rater, options_.secret_seed));
      task["score_a"] = a.score_a;
      task["score_b"] = a.score_b;
    }
    Reply(res, 200, json{{"done", false}, {"mode", AnnotationModeName(mode)},
                         {"task", task}, {"progress", progress}});
  });

  http.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidation, std::string("body is not JSON: ") + e.what());
    }
    if (!body.is_object()) throw Error(ErrorCode::kValidation, "body must be an object");
    AnnotationRecord record;
    record.kind = ParseAnnotationKind(RequiredString(body, "kind"));
    record.rater_id = RequiredString(body, "rater_id");
    record.sample_id = RequiredString(body, "sample_id");
    if (body.contains("ui_session_id") && body.at("ui_session_id").is_string())
      record.ui_session_id = body.at("ui_session_id").get<std::string>();
    const TaskItem* item = pool_.Find(record.sample_id);
    if (!item) {
      throw Error(ErrorCode::kUnknownSampleId, "no task for sample '" + record.sample_id + "'");
    }
    record.model_id = item->model_id;

    switch (record.kind) {
      case AnnotationKind::kDirectGrade: {
        record.mode = AnnotationMode::kGrade;
        if (!body.contains("grade") || !body.at("grade").is_number_integer()) {
          throw Error(ErrorCode::kValidation, "grade must be an integer in [0, 10]");
        }
        const long long grade = body.at("grade").get<long long>();
        if (grade < 0 || grade > analysis::kHumanGradeMax) {
          throw Error(ErrorCode::kValidation,
                      "grade " + std::to_string(grade) + " outside [0, 10]");
        }
        record.grade = static_cast<int>(grade);
        break;
      }
      case AnnotationKind::kPreference: {
        record.mode = AnnotationMode::kPrefer;
        record.chosen = ParseChosenSide(RequiredString(body, "chosen"));
        const auto a = store_->FindAssignment(record.rater_id, record.sample_id);
        if (!a) {
          throw Error(ErrorCode::kUnresolvedMapping,
                      "no assignment for rater " + record.rater_id + " on " + record.sample_id +
                          "; fetch the task first");
        }
        record.shown_a = a->shown_a;
        record.shown_b = a->shown_b;
        record.resolved_metric = ResolveMetric(*record.chosen, a->shown_a, a->shown_b);
        break;
      }
      case AnnotationKind::kSkip:
        record.mode = ParseAnnotationMode(RequiredString(body, "mode"));
        break;
    }
    record.timestamp = UtcNow();
    const auto [stored, inserted] = store_->Append(record);
    (void)stored;
    Reply(res, inserted ? 201 : 200,
          json{{"status", inserted ? "recorded" : "duplicate"}});
  });

  http.Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = RequiredParam(req, "rater");
    json out{{"rater", rater}};
    for (auto mode : {AnnotationMode::kGrade, AnnotationMode::kPrefer}) {
      std::size_t completed = 0;
      for (const auto& item : pool_.items) {
        if (mode == AnnotationMode::kPrefer && !item.pink_score) continue;
        if (store_->Find(rater, item.sample_id, mode)) ++completed;
      }
      out[std::string(AnnotationModeName(mode))] = {{"completed", completed},
                                                    {"total", pool_.Count(mode)}};
    }
    Reply(res, 200, out);
  });

  http.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    Reply(res, 200, AnnotationStats(pool_, store_->Records(), store_->Assignments()));
  });

  if (options_.ui_dir) {
    if (!http.set_mount_point("/", options_.ui_dir->string())) {
      throw Error(ErrorCode::kConfigError, "ui_dir not found: " + options_.ui_dir->string());
    }
  } else {
    http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
}

}  // namespace pink::app

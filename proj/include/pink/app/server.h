#ifndef PINK_APP_SERVER_H_
#define PINK_APP_SERVER_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pink/app/annotation_store.h"

namespace httplib {
class Server;
}

namespace pink::app {

// One solution offered to raters, with the scores the preference screen shows.
struct TaskItem {
  std::string sample_id;
  std::string model_id;
  std::string problem_text;
  std::string reference_solution;
  std::string student_solution;  // the model's OCR text
  std::optional<std::string> image_ref;
  // Sample-level PINK (penalized / oracle) and sentence BLEU, both x10.
  // PINK is undefined for a zero oracle; such samples get no preference task.
  std::optional<double> pink_score;
  double bleu_score = 0.0;
  int auto_total = 0;  // judge's rubric total for the OCR text
};

struct TaskPool {
  std::vector<TaskItem> items;  // by sample_id

  const TaskItem* Find(const std::string& sample_id) const;
  std::size_t Count(AnnotationMode mode) const;
};

// Side of the PINK score for (rater, sample): a keyed hash of the secret seed,
// so assignments are reproducible for audits but not predictable by raters.
bool PinkOnSideA(const std::string& secret_seed, const std::string& rater_id,
                 const std::string& sample_id);

Assignment MakeAssignment(const TaskItem& item, const std::string& rater_id,
                          const std::string& secret_seed);

// {"human_agreement": ..., "preference_aggregate": ...}; a section that cannot
// be computed yet carries {"error", "message"} instead.
nlohmann::json AnnotationStats(const TaskPool& pool,
                               const std::vector<AnnotationRecord>& records,
                               const std::vector<Assignment>& assignments);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string token;  // empty disables auth
  std::string secret_seed;
  std::optional<std::filesystem::path> ui_dir;
};

// HTTP JSON API over a task pool and an annotation store:
//   GET  /api/tasks/next?rater=&mode=grade|prefer
//   POST /api/annotations
//   GET  /api/progress?rater=
//   GET  /api/stats
// plus the static UI at /.
class AnnotationServer {
 public:
  AnnotationServer(TaskPool pool, std::shared_ptr<AnnotationStore> store,
                   ServerOptions options);
  ~AnnotationServer();

  // Binds the socket; throws kBindFailure. Returns the bound port.
  int Bind();
  // Serves until Stop(); requires Bind().
  void Run();
  void Stop();
  int port() const { return port_; }

 private:
  void Routes();

  TaskPool pool_;
  std::shared_ptr<AnnotationStore> store_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> http_;
  int port_ = 0;
};

}  // namespace pink::app

#endif  // PINK_APP_SERVER_H_

#ifndef PINK_APP_ANNOTATION_STORE_H_
#define PINK_APP_ANNOTATION_STORE_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "pink/analysis/human.h"

namespace pink::app {

enum class AnnotationKind { kDirectGrade, kPreference, kSkip };
enum class AnnotationMode { kGrade, kPrefer };
enum class ChosenSide { kA, kB, kNeither };

std::string_view AnnotationKindName(AnnotationKind kind);
std::string_view AnnotationModeName(AnnotationMode mode);
std::string_view ChosenSideName(ChosenSide side);
// Throw kValidation for unknown names.
AnnotationKind ParseAnnotationKind(std::string_view name);
AnnotationMode ParseAnnotationMode(std::string_view name);
ChosenSide ParseChosenSide(std::string_view name);

// Blind A/B mapping of one (rater, sample) preference task. Persisted before
// the task is shown and never changed afterwards.
struct Assignment {
  std::string rater_id;
  std::string sample_id;
  std::string model_id;
  std::string shown_a;  // "PINK" or "BLEU"
  std::string shown_b;
  double score_a = 0.0;  // 0-10 scale
  double score_b = 0.0;

  bool operator==(const Assignment&) const = default;
};

struct AnnotationRecord {
  AnnotationKind kind = AnnotationKind::kDirectGrade;
  AnnotationMode mode = AnnotationMode::kGrade;
  std::string rater_id;
  std::string sample_id;
  std::string model_id;
  std::optional<int> grade;           // DirectGrade
  std::optional<ChosenSide> chosen;   // Preference
  std::string shown_a;                // Preference
  std::string shown_b;
  std::string resolved_metric;        // "PINK", "BLEU" or "Neither"
  std::string timestamp;
  std::string ui_session_id;

  bool operator==(const AnnotationRecord&) const = default;
};

void to_json(nlohmann::json& j, const Assignment& a);
void from_json(const nlohmann::json& j, Assignment& a);
void to_json(nlohmann::json& j, const AnnotationRecord& r);
void from_json(const nlohmann::json& j, AnnotationRecord& r);

// Metric picked by `chosen` under the shown_a/shown_b mapping. Throws
// kUnresolvedMapping if the mapping is not one PINK side and one BLEU side.
std::string ResolveMetric(ChosenSide chosen, const std::string& shown_a,
                          const std::string& shown_b);

// Append-only annotation log in a directory:
//   assignments.jsonl  A/B mappings, one per (rater, sample)
//   annotations.jsonl  one row per (rater, sample, mode)
// Rows are appended with one write() and fsync'd. A torn final line left by a
// crash is dropped on open; earlier rows are never rewritten. The directory
// is held with an exclusive flock for the lifetime of the object.
class AnnotationStore {
 public:
  // Throws kStoreLocked if another process or object holds the store, kIo if
  // it cannot be created.
  explicit AnnotationStore(std::filesystem::path dir);
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  std::optional<Assignment> FindAssignment(const std::string& rater_id,
                                           const std::string& sample_id) const;
  // Persists `assignment` unless one exists for its (rater, sample); returns
  // the persisted mapping either way.
  Assignment EnsureAssignment(const Assignment& assignment);

  // Idempotent on (rater, sample, mode): returns the stored row and false if
  // one exists, otherwise appends and returns the row and true.
  std::pair<AnnotationRecord, bool> Append(const AnnotationRecord& record);
  std::optional<AnnotationRecord> Find(const std::string& rater_id,
                                       const std::string& sample_id,
                                       AnnotationMode mode) const;

  std::vector<AnnotationRecord> Records() const;  // in append order
  std::vector<Assignment> Assignments() const;    // in append order
  const std::filesystem::path& dir() const { return dir_; }

 private:
  using RowKey = std::tuple<std::string, std::string, AnnotationMode>;

  void AppendLine(int fd, const std::string& line);

  std::filesystem::path dir_;
  int lock_fd_ = -1;
  int assignments_fd_ = -1;
  int annotations_fd_ = -1;
  mutable std::mutex mutex_;
  std::vector<Assignment> assignments_;
  std::map<std::pair<std::string, std::string>, std::size_t> assignment_index_;
  std::vector<AnnotationRecord> records_;
  std::map<RowKey, std::size_t> record_index_;
};

struct AnnotationSnapshot {
  std::vector<AnnotationRecord> records;
  std::vector<Assignment> assignments;
};

// Reads both logs without taking the lock or repairing a torn final line,
// so reports can be built while a server holds the store.
AnnotationSnapshot ReadAnnotationSnapshot(const std::filesystem::path& dir);

// Maps every Preference row back to a metric through the persisted
// assignments. Skips are left out. Throws kUnresolvedMapping naming the row
// when its assignment is missing or inconsistent.
std::vector<analysis::PreferenceVote> ResolvePreferences(
    const std::vector<AnnotationRecord>& records,
    const std::vector<Assignment>& assignments);

// Direct grades by rater and sample; skips are left out.
analysis::HumanGrades CollectGrades(const std::vector<AnnotationRecord>& records);

}  // namespace pink::app

#endif  // PINK_APP_ANNOTATION_STORE_H_

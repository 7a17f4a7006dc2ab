#include "pink/app/annotation_store.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>

#include <spdlog/spdlog.h>

#include "pink/error.h"
#include "pink/io.h"

namespace pink::app {

using nlohmann::json;

std::string_view AnnotationKindName(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::kDirectGrade: return "DirectGrade";
    case AnnotationKind::kPreference: return "Preference";
    case AnnotationKind::kSkip: return "Skip";
  }
  return "Skip";
}

std::string_view AnnotationModeName(AnnotationMode mode) {
  return mode == AnnotationMode::kGrade ? "grade" : "prefer";
}

std::string_view ChosenSideName(ChosenSide side) {
  switch (side) {
    case ChosenSide::kA: return "A";
    case ChosenSide::kB: return "B";
    case ChosenSide::kNeither: return "Neither";
  }
  return "Neither";
}

AnnotationKind ParseAnnotationKind(std::string_view name) {
  if (name == "DirectGrade") return AnnotationKind::kDirectGrade;
  if (name == "Preference") return AnnotationKind::kPreference;
  if (name == "Skip") return AnnotationKind::kSkip;
  throw Error(ErrorCode::kValidation, "unknown annotation kind '" + std::string(name) + "'");
}

AnnotationMode ParseAnnotationMode(std::string_view name) {
  if (name == "grade") return AnnotationMode::kGrade;
  if (name == "prefer") return AnnotationMode::kPrefer;
  throw Error(ErrorCode::kValidation, "unknown mode '" + std::string(name) + "'");
}

ChosenSide ParseChosenSide(std::string_view name) {
  if (name == "A") return ChosenSide::kA;
  if (name == "B") return ChosenSide::kB;
  if (name == "Neither") return ChosenSide::kNeither;
  throw Error(ErrorCode::kValidation, "unknown choice '" + std::string(name) + "'");
}

void to_json(json& j, const Assignment& a) {
  j = json{{"rater_id", a.rater_id}, {"sample_id", a.sample_id},
           {"model_id", a.model_id}, {"shown_a", a.shown_a},
           {"shown_b", a.shown_b},   {"score_a", a.score_a},
           {"score_b", a.score_b}};
}

void from_json(const json& j, Assignment& a) {
  j.at("rater_id").get_to(a.rater_id);
  j.at("sample_id").get_to(a.sample_id);
  j.at("model_id").get_to(a.model_id);
  j.at("shown_a").get_to(a.shown_a);
  j.at("shown_b").get_to(a.shown_b);
  j.at("score_a").get_to(a.score_a);
  j.at("score_b").get_to(a.score_b);
}

void to_json(json& j, const AnnotationRecord& r) {
  j = json{{"kind", AnnotationKindName(r.kind)},
           {"mode", AnnotationModeName(r.mode)},
           {"rater_id", r.rater_id},
           {"sample_id", r.sample_id},
           {"model_id", r.model_id}};
  if (r.grade) j["grade"] = *r.grade;
  if (r.chosen) j["chosen"] = ChosenSideName(*r.chosen);
  if (r.kind == AnnotationKind::kPreference) {
    j["shown_a"] = r.shown_a;
    j["shown_b"] = r.shown_b;
    j["resolved_metric"] = r.resolved_metric;
  }
  j["timestamp"] = r.timestamp;
  j["ui_session_id"] = r.ui_session_id;
}

void from_json(const json& j, AnnotationRecord& r) {
  r.kind = ParseAnnotationKind(j.at("kind").get<std::string>());
  r.mode = ParseAnnotationMode(j.at("mode").get<std::string>());
  j.at("rater_id").get_to(r.rater_id);
  j.at("sample_id").get_to(r.sample_id);
  r.model_id = j.value("model_id", "");
  if (j.contains("grade")) r.grade = j.at("grade").get<int>();
  if (j.contains("chosen")) r.chosen = ParseChosenSide(j.at("chosen").get<std::string>());
  r.shown_a = j.value("shown_a", "");
  r.shown_b = j.value("shown_b", "");
  r.resolved_metric = j.value("resolved_metric", "");
  r.timestamp = j.value("timestamp", "");
  r.ui_session_id = j.value("ui_session_id", "");
}

std::string ResolveMetric(ChosenSide chosen, const std::string& shown_a,
                          const std::string& shown_b) {
  const bool valid = (shown_a == "PINK" && shown_b == "BLEU") ||
                     (shown_a == "BLEU" && shown_b == "PINK");
  if (!valid) {
    throw Error(ErrorCode::kUnresolvedMapping,
                "mapping A=" + shown_a + " B=" + shown_b + " is not a PINK/BLEU pair");
  }
  switch (chosen) {
    case ChosenSide::kA: return shown_a;
    case ChosenSide::kB: return shown_b;
    case ChosenSide::kNeither: return "Neither";
  }
  return "Neither";
}

namespace {

int OpenOrThrow(const std::filesystem::path& path, int flags) {
  int fd = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string() + ": " +
                                    std::strerror(errno));
  }
  return fd;
}

// Complete lines of a log; a torn final line is dropped and, when `repair`
// is set, truncated away so later appends start on a fresh line.
std::vector<io::NumberedLine> LoadLog(const std::filesystem::path& path,
                                      bool repair) {
  if (!std::filesystem::exists(path)) return {};
  const std::string content = io::ReadFile(path);
  const auto last_newline = content.rfind('\n');
  const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
  if (keep != content.size()) {
    spdlog::warn("{}: ignoring torn final line ({} bytes)", path.string(),
                 content.size() - keep);
    if (repair) std::filesystem::resize_file(path, keep);
  }
  std::vector<io::NumberedLine> lines;
  std::size_t start = 0, number = 0;
  while (start < keep) {
    const std::size_t end = content.find('\n', start);
    ++number;
    std::string text = content.substr(start, end - start);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (!text.empty()) lines.push_back({number, std::move(text)});
    start = end + 1;
  }
  return lines;
}

template <typename T>
T ParseRow(const std::filesystem::path& path, const io::NumberedLine& line) {
  try {
    return json::parse(line.text).get<T>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what(),
                line.number);
  }
}

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create annotation store " + dir_.string() + ": " + ec.message());
  }
  lock_fd_ = OpenOrThrow(dir_ / ".lock", O_RDWR | O_CREAT);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::kStoreLocked,
                "annotation store " + dir_.string() + " is in use by another server");
  }
  try {
    const auto assignments_path = dir_ / "assignments.jsonl";
    for (const auto& line : LoadLog(assignments_path, /*repair=*/true)) {
      Assignment a = ParseRow<Assignment>(assignments_path, line);
      auto key = std::make_pair(a.rater_id, a.sample_id);
      if (assignment_index_.count(key)) continue;  // first mapping wins
      assignment_index_[key] = assignments_.size();
      assignments_.push_back(std::move(a));
    }
    const auto annotations_path = dir_ / "annotations.jsonl";
    for (const auto& line : LoadLog(annotations_path, /*repair=*/true)) {
      AnnotationRecord r = ParseRow<AnnotationRecord>(annotations_path, line);
      RowKey key{r.rater_id, r.sample_id, r.mode};
      if (record_index_.count(key)) continue;
      record_index_[key] = records_.size();
      records_.push_back(std::move(r));
    }
    assignments_fd_ = OpenOrThrow(assignments_path, O_WRONLY | O_APPEND | O_CREAT);
    annotations_fd_ = OpenOrThrow(annotations_path, O_WRONLY | O_APPEND | O_CREAT);
  } catch (...) {
    if (assignments_fd_ >= 0) ::close(assignments_fd_);
    ::close(lock_fd_);
    throw;
  }
}

AnnotationStore::~AnnotationStore() {
  if (assignments_fd_ >= 0) ::close(assignments_fd_);
  if (annotations_fd_ >= 0) ::close(annotations_fd_);
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void AnnotationStore::AppendLine(int fd, const std::string& line) {
  const std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, std::string("append failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    throw Error(ErrorCode::kIo, std::string("fsync failed: ") + std::strerror(errno));
  }
}

std::optional<Assignment> AnnotationStore::FindAssignment(
    const std::string& rater_id, const std::string& sample_id) const {
  std::lock_guard lock(mutex_);
  auto it = assignment_index_.find({rater_id, sample_id});
  if (it == assignment_index_.end()) return std::nullopt;
  return assignments_[it->second];
}

Assignment AnnotationStore::EnsureAssignment(const Assignment& assignment) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(assignment.rater_id, assignment.sample_id);
  if (auto it = assignment_index_.find(key); it != assignment_index_.end())
    return assignments_[it->second];
  AppendLine(assignments_fd_, json(assignment).dump());
  assignment_index_[key] = assignments_.size();
  assignments_.push_back(assignment);
  return assignment;
}

std::pair<AnnotationRecord, bool> AnnotationStore::Append(
    const AnnotationRecord& record) {
  std::lock_guard lock(mutex_);
  RowKey key{record.rater_id, record.sample_id, record.mode};
  if (auto it = record_index_.find(key); it != record_index_.end())
    return {records_[it->second], false};
  AppendLine(annotations_fd_, json(record).dump());
  record_index_[key] = records_.size();
  records_.push_back(record);
  return {record, true};
}

std::optional<AnnotationRecord> AnnotationStore::Find(const std::string& rater_id,
                                                      const std::string& sample_id,
                                                      AnnotationMode mode) const {
  std::lock_guard lock(mutex_);
  auto it = record_index_.find({rater_id, sample_id, mode});
  if (it == record_index_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<AnnotationRecord> AnnotationStore::Records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<Assignment> AnnotationStore::Assignments() const {
  std::lock_guard lock(mutex_);
  return assignments_;
}

AnnotationSnapshot ReadAnnotationSnapshot(const std::filesystem::path& dir) {
  AnnotationSnapshot snapshot;
  std::set<std::pair<std::string, std::string>> seen_assignments;
  for (const auto& line : LoadLog(dir / "assignments.jsonl", /*repair=*/false)) {
    auto a = ParseRow<Assignment>(dir / "assignments.jsonl", line);
    if (seen_assignments.insert({a.rater_id, a.sample_id}).second)
      snapshot.assignments.push_back(std::move(a));
  }
  std::set<std::tuple<std::string, std::string, AnnotationMode>> seen_rows;
  for (const auto& line : LoadLog(dir / "annotations.jsonl", /*repair=*/false)) {
    auto r = ParseRow<AnnotationRecord>(dir / "annotations.jsonl", line);
    if (seen_rows.insert({r.rater_id, r.sample_id, r.mode}).second)
      snapshot.records.push_back(std::move(r));
  }
  return snapshot;
}

std::vector<analysis::PreferenceVote> ResolvePreferences(
    const std::vector<AnnotationRecord>& records,
    const std::vector<Assignment>& assignments) {
  std::map<std::pair<std::string, std::string>, const Assignment*> index;
  for (const auto& a : assignments) index.emplace(std::make_pair(a.rater_id, a.sample_id), &a);
  std::vector<analysis::PreferenceVote> votes;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.kind != AnnotationKind::kPreference) continue;
    const std::string row = "preference row " + std::to_string(i + 1) + " (rater " +
                            r.rater_id + ", sample " + r.sample_id + ")";
    auto it = index.find({r.rater_id, r.sample_id});
    if (it == index.end())
      throw Error(ErrorCode::kUnresolvedMapping, row + " has no persisted assignment");
    if (!r.chosen) throw Error(ErrorCode::kUnresolvedMapping, row + " has no choice");
    std::string metric;
    try {
      metric = ResolveMetric(*r.chosen, it->second->shown_a, it->second->shown_b);
    } catch (const Error& e) {
      throw Error(ErrorCode::kUnresolvedMapping, row + ": " + e.what());
    }
    if (!r.resolved_metric.empty() && r.resolved_metric != metric) {
      throw Error(ErrorCode::kUnresolvedMapping,
                  row + " recorded " + r.resolved_metric + " but its mapping gives " + metric);
    }
    votes.push_back({r.sample_id, analysis::ParsePreferredMetric(metric)});
  }
  return votes;
}

analysis::HumanGrades CollectGrades(const std::vector<AnnotationRecord>& records) {
  analysis::HumanGrades grades;
  for (const auto& r : records) {
    if (r.kind == AnnotationKind::kDirectGrade && r.grade)
      grades[r.rater_id][r.sample_id] = *r.grade;
  }
  return grades;
}

}  // namespace pink::app

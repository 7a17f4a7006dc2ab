#ifndef PINK_APP_RECORD_STORE_H_
#define PINK_APP_RECORD_STORE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pink/datamodel.h"

namespace pink::app {

// A grading task that produced no record.
struct GradeFailure {
  std::string sample_id;
  std::string model_id;
  std::string judge_id;
  std::string rubric_variant;
  std::string prompt_variant;
  int run_index = 0;
  std::string error_code;
  std::string message;

  bool operator==(const GradeFailure&) const = default;
};

void to_json(nlohmann::json& j, const GradeFailure& f);
void from_json(const nlohmann::json& j, GradeFailure& f);

// Directory layout: records.jsonl, failures.jsonl, manifest.json. Records are
// written in a canonical order and the manifest has no timestamps, so equal
// inputs give byte-identical stores.
struct RecordStore {
  std::vector<EvalRecord> records;
  std::vector<GradeFailure> failures;
  nlohmann::json manifest = nlohmann::json::object();
};

// Sorts records and failures into canonical order, then writes each file
// atomically.
void WriteRecordStore(const std::filesystem::path& dir, RecordStore store);

// Throws kMissingStore when the directory or records.jsonl is absent,
// kMalformedRecord / kValidation (with line) for bad rows.
RecordStore LoadRecordStore(const std::filesystem::path& dir);

struct RecordFilter {
  std::optional<std::string> judge_id;
  std::optional<std::string> rubric_variant;
  std::optional<std::string> prompt_variant;
  std::optional<int> run_index;
  std::optional<std::string> model_id;

  bool Matches(const EvalRecord& r) const;
};

std::vector<EvalRecord> Select(const std::vector<EvalRecord>& records,
                               const RecordFilter& filter);

}  // namespace pink::app

#endif  // PINK_APP_RECORD_STORE_H_

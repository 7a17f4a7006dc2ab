#include "pink/app/record_store.h"

#include <algorithm>
#include <tuple>

#include "pink/error.h"
#include "pink/io.h"
#include "pink/penalty.h"

namespace pink::app {

using nlohmann::json;

namespace {

auto OrderKey(const EvalRecord& r) {
  return std::tie(r.judge_id, r.rubric_variant, r.prompt_variant, r.run_index,
                  r.model_id, r.sample_id);
}

auto OrderKey(const GradeFailure& f) {
  return std::tie(f.judge_id, f.rubric_variant, f.prompt_variant, f.run_index,
                  f.model_id, f.sample_id);
}

template <typename T>
std::string JsonLines(const std::vector<T>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += json(row).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

void to_json(json& j, const GradeFailure& f) {
  j = json{{"sample_id", f.sample_id},           {"model_id", f.model_id},
           {"judge_id", f.judge_id},             {"rubric_variant", f.rubric_variant},
           {"prompt_variant", f.prompt_variant}, {"run_index", f.run_index},
           {"error_code", f.error_code},         {"message", f.message}};
}

void from_json(const json& j, GradeFailure& f) {
  j.at("sample_id").get_to(f.sample_id);
  j.at("model_id").get_to(f.model_id);
  j.at("judge_id").get_to(f.judge_id);
  j.at("rubric_variant").get_to(f.rubric_variant);
  j.at("prompt_variant").get_to(f.prompt_variant);
  j.at("run_index").get_to(f.run_index);
  j.at("error_code").get_to(f.error_code);
  j.at("message").get_to(f.message);
}

void WriteRecordStore(const std::filesystem::path& dir, RecordStore store) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create store " + dir.string() + ": " + ec.message());
  }
  std::sort(store.records.begin(), store.records.end(),
            [](const auto& a, const auto& b) { return OrderKey(a) < OrderKey(b); });
  std::sort(store.failures.begin(), store.failures.end(),
            [](const auto& a, const auto& b) { return OrderKey(a) < OrderKey(b); });
  io::WriteFileAtomic(dir / "records.jsonl", JsonLines(store.records));
  io::WriteFileAtomic(dir / "failures.jsonl", JsonLines(store.failures));
  io::WriteFileAtomic(dir / "manifest.json", store.manifest.dump(2) + "\n");
}

RecordStore LoadRecordStore(const std::filesystem::path& dir) {
  const auto records_path = dir / "records.jsonl";
  if (!std::filesystem::exists(records_path)) {
    throw Error(ErrorCode::kMissingStore,
                "no record store at " + dir.string() + " (run `pink grade` first)");
  }
  RecordStore store;
  for (const auto& line : io::ReadLines(records_path)) {
    EvalRecord record;
    try {
      record = json::parse(line.text).get<EvalRecord>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  records_path.string() + ": " + e.what(), line.number);
    }
    try {
      penalty::CheckRecordConsistency(record);
    } catch (const Error& e) {
      throw Error(e.code(), records_path.string() + ": " + e.what(), line.number);
    }
    store.records.push_back(std::move(record));
  }
  const auto failures_path = dir / "failures.jsonl";
  if (std::filesystem::exists(failures_path)) {
    for (const auto& line : io::ReadLines(failures_path)) {
      try {
        store.failures.push_back(json::parse(line.text).get<GradeFailure>());
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kMalformedRecord,
                    failures_path.string() + ": " + e.what(), line.number);
      }
    }
  }
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    try {
      store.manifest = json::parse(io::ReadFile(manifest_path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, manifest_path.string() + ": " + e.what());
    }
  }
  return store;
}

bool RecordFilter::Matches(const EvalRecord& r) const {
  return (!judge_id || r.judge_id == *judge_id) &&
         (!rubric_variant || r.rubric_variant == *rubric_variant) &&
         (!prompt_variant || r.prompt_variant == *prompt_variant) &&
         (!run_index || r.run_index == *run_index) &&
         (!model_id || r.model_id == *model_id);
}

std::vector<EvalRecord> Select(const std::vector<EvalRecord>& records,
                               const RecordFilter& filter) {
  std::vector<EvalRecord> out;
  for (const auto& r : records)
    if (filter.Matches(r)) out.push_back(r);
  return out;
}

}  // namespace pink::app

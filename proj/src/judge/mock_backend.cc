#include <algorithm>

#include "pink/error.h"
#include "pink/hash.h"
#include "pink/io.h"
#include "pink/judge/backend.h"

namespace pink::judge {

using nlohmann::json;

MockBackend::MockBackend(Fixture fixture, RubricSpec rubric, int noise,
                         std::uint64_t seed)
    : fixture_(std::move(fixture)),
      rubric_(std::move(rubric)),
      noise_(noise),
      seed_(seed) {}

MockBackend::Fixture MockBackend::LoadFixture(const std::filesystem::path& path) {
  Fixture fixture;
  json j = json::parse(io::ReadFile(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kConfigError,
                "mock fixture " + path.string() + " is not a JSON object");
  }
  try {
    const json grades = j.value("grades", json::object());
    for (const auto& [key, value] : grades.items()) {
      GradeResponse response;
      response.components = value.at("components").get<std::vector<int>>();
      response.justifications =
          value.value("justifications", std::vector<std::string>{});
      fixture.grades.emplace(key, std::move(response));
    }
    const json labels = j.value("labels", json::object());
    for (const auto& [key, value] : labels.items()) {
      fixture.labels.emplace(key,
                             ParseDiscrepancyLabelName(value.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError,
                "mock fixture " + path.string() + ": " + e.what());
  }
  return fixture;
}

std::string MockBackend::Grade(const GradeRequest& request,
                               const std::string& /*prompt*/) {
  ++calls_;
  const std::string key = GradeContentHash(
      request.problem_text, request.reference_solution, request.candidate_text);
  auto it = fixture_.grades.find(key);
  if (it == fixture_.grades.end()) {
    throw Error(ErrorCode::kFixtureMiss, "no mock grade for content " + key);
  }
  std::vector<int> components = it->second.components;
  if (noise_ > 0) {
    for (std::size_t r = 0; r < components.size(); ++r) {
      const std::string digest = FieldHasher()
                                     .Add(static_cast<long long>(seed_))
                                     .Add(key)
                                     .Add(request.run_index)
                                     .Add(static_cast<long long>(r))
                                     .HexDigest();
      const auto bits = std::stoull(digest.substr(0, 12), nullptr, 16);
      const int shift =
          static_cast<int>(bits % static_cast<unsigned long long>(2 * noise_ + 1)) -
          noise_;
      components[r] = std::clamp(components[r] + shift, 0, rubric_.component_max);
    }
  }
  std::vector<std::string> justifications = it->second.justifications;
  justifications.resize(components.size(), "matches the fixture");
  return "Grading the student solution against the rubric.\n\n" +
         RenderScoreBlock(components, justifications, rubric_);
}

std::string MockBackend::Label(std::string_view gt_transcription,
                               std::string_view ocr_text,
                               const std::string& /*prompt*/) {
  ++calls_;
  const std::string key = LabelContentHash(gt_transcription, ocr_text);
  auto it = fixture_.labels.find(key);
  if (it == fixture_.labels.end()) {
    throw Error(ErrorCode::kFixtureMiss, "no mock label for content " + key);
  }
  return "Comparing the two transcriptions.\n\n" + RenderLabelBlock(it->second);
}

}  // namespace pink::judge

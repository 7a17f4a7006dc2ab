#ifndef PINK_JUDGE_RESPONSE_H_
#define PINK_JUDGE_RESPONSE_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pink/datamodel.h"
#include "pink/error.h"

namespace pink::judge {

struct GradeResponse {
  std::vector<int> components;
  std::vector<std::string> justifications;
  std::string raw_text;  // exact judge output

  RubricScore Score() const { return RubricScore(components); }
  bool operator==(const GradeResponse&) const = default;
};

// A reply that broke the output contract. The raw reply is kept for audit.
class ParseError : public Error {
 public:
  ParseError(const std::string& reason, std::string raw_text);
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

// Extracts the last ```scores fenced block. Each line must read
// "<name>: <int>/<component_max> <dash> <justification>" with names in rubric
// order. Prose around the block is ignored. Fractional or out-of-range scores
// and wrong component counts are rejected.
GradeResponse ParseGradeResponse(std::string_view raw_text,
                                 const RubricSpec& rubric = {});

// Inverse of ParseGradeResponse's block grammar.
std::string RenderScoreBlock(std::span<const int> components,
                             std::span<const std::string> justifications,
                             const RubricSpec& rubric = {});

enum class DiscrepancyLabel {
  kNoDiscrepancy,
  kFormattingOnly,
  kIncludesFormatting,
  kSemanticOnly
};

std::string_view DiscrepancyLabelName(DiscrepancyLabel label);
DiscrepancyLabel ParseDiscrepancyLabelName(std::string_view name);

// Extracts "label: <class>" from the last ```label block.
DiscrepancyLabel ParseLabelResponse(std::string_view raw_text);
std::string RenderLabelBlock(DiscrepancyLabel label);

}  // namespace pink::judge

#endif  // PINK_JUDGE_RESPONSE_H_

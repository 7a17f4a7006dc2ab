#include "pink/judge/response.h"

#include <regex>

namespace pink::judge {
namespace {

// Body of the last fenced block opened with ```<tag>, or npos if none.
std::optional<std::string_view> LastFencedBlock(std::string_view text,
                                                std::string_view tag) {
  const std::string opener = "```" + std::string(tag);
  std::size_t pos = text.rfind(opener);
  while (pos != std::string_view::npos) {
    std::size_t body_start = pos + opener.size();
    // The tag must end the opener line ("```scores" but not "```scoresheet").
    std::size_t eol = text.find('\n', body_start);
    std::string_view rest = text.substr(
        body_start, (eol == std::string_view::npos ? text.size() : eol) - body_start);
    if (rest.find_first_not_of(" \t\r") == std::string_view::npos &&
        eol != std::string_view::npos) {
      std::size_t close = text.find("```", eol + 1);
      if (close == std::string_view::npos) return std::nullopt;
      return text.substr(eol + 1, close - eol - 1);
    }
    if (pos == 0) break;
    pos = text.rfind(opener, pos - 1);
  }
  return std::nullopt;
}

std::vector<std::string_view> NonEmptyLines(std::string_view body) {
  std::vector<std::string_view> lines;
  while (!body.empty()) {
    std::size_t eol = body.find('\n');
    std::string_view line = body.substr(0, eol);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      lines.push_back(line);
    }
    if (eol == std::string_view::npos) break;
    body.remove_prefix(eol + 1);
  }
  return lines;
}

std::string Trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

ParseError::ParseError(const std::string& reason, std::string raw_text)
    : Error(ErrorCode::kParseError, reason), raw_text_(std::move(raw_text)) {}

GradeResponse ParseGradeResponse(std::string_view raw_text,
                                 const RubricSpec& rubric) {
  const std::string raw(raw_text);
  auto block = LastFencedBlock(raw_text, "scores");
  if (!block) throw ParseError("no ```scores block found", raw);
  const auto lines = NonEmptyLines(*block);
  if (static_cast<int>(lines.size()) != rubric.num_components) {
    throw ParseError("expected " + std::to_string(rubric.num_components) +
                         " components, found " + std::to_string(lines.size()),
                     raw);
  }
  // name: score/max [<dash> justification]; the dash may be an em dash, en dash or
  // hyphen.
  static const std::regex kLine(
      R"(^\s*([A-Za-z0-9_]+)\s*:\s*([-+]?[0-9]+(?:[.,][0-9]+)?)\s*/\s*([0-9]+)\s*(?:(?:—|–|-{1,2})\s*(.*))?$)");
  GradeResponse response;
  response.raw_text = raw;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const std::string line(lines[r]);
    std::smatch match;
    if (!std::regex_match(line, match, kLine)) {
      throw ParseError("malformed score line " + std::to_string(r + 1) + ": '" +
                           Trim(line) + "'",
                       raw);
    }
    if (match[1].str() != rubric.names[r]) {
      throw ParseError("line " + std::to_string(r + 1) + " names '" +
                           match[1].str() + "', expected '" + rubric.names[r] +
                           "'",
                       raw);
    }
    const std::string score_text = match[2].str();
    if (score_text.find_first_of(".,") != std::string::npos) {
      throw ParseError("non-integer score '" + score_text + "' for " +
                           rubric.names[r],
                       raw);
    }
    if (std::stoi(match[3].str()) != rubric.component_max) {
      throw ParseError("score for " + rubric.names[r] + " is out of /" +
                           match[3].str() + ", expected /" +
                           std::to_string(rubric.component_max),
                       raw);
    }
    const int score = std::stoi(score_text);
    if (score < 0 || score > rubric.component_max) {
      throw ParseError("score " + score_text + " for " + rubric.names[r] +
                           " outside [0, " +
                           std::to_string(rubric.component_max) + "]",
                       raw);
    }
    response.components.push_back(score);
    response.justifications.push_back(Trim(match[4].str()));
  }
  return response;
}

std::string RenderScoreBlock(std::span<const int> components,
                             std::span<const std::string> justifications,
                             const RubricSpec& rubric) {
  std::string out = "```scores\n";
  for (std::size_t r = 0; r < components.size(); ++r) {
    out += rubric.names[r] + ": " + std::to_string(components[r]) + "/" +
           std::to_string(rubric.component_max);
    const std::string justification =
        r < justifications.size() ? justifications[r] : std::string();
    out += " — " + justification + "\n";
  }
  out += "```\n";
  return out;
}

std::string_view DiscrepancyLabelName(DiscrepancyLabel label) {
  switch (label) {
    case DiscrepancyLabel::kNoDiscrepancy: return "no_discrepancy";
    case DiscrepancyLabel::kFormattingOnly: return "formatting_only";
    case DiscrepancyLabel::kIncludesFormatting: return "includes_formatting";
    case DiscrepancyLabel::kSemanticOnly: return "semantic_only";
  }
  return "no_discrepancy";
}

DiscrepancyLabel ParseDiscrepancyLabelName(std::string_view name) {
  for (auto label :
       {DiscrepancyLabel::kNoDiscrepancy, DiscrepancyLabel::kFormattingOnly,
        DiscrepancyLabel::kIncludesFormatting, DiscrepancyLabel::kSemanticOnly}) {
    if (DiscrepancyLabelName(label) == name) return label;
  }
  throw ParseError("unknown discrepancy label '" + std::string(name) + "'",
                   std::string(name));
}

DiscrepancyLabel ParseLabelResponse(std::string_view raw_text) {
  auto block = LastFencedBlock(raw_text, "label");
  if (!block) throw ParseError("no ```label block found", std::string(raw_text));
  const auto lines = NonEmptyLines(*block);
  if (lines.size() != 1) {
    throw ParseError("label block must hold exactly one line",
                     std::string(raw_text));
  }
  static const std::regex kLine(R"(^\s*label\s*:\s*([a-z_]+)\s*$)");
  const std::string line(lines.front());
  std::smatch match;
  if (!std::regex_match(line, match, kLine)) {
    throw ParseError("malformed label line '" + Trim(line) + "'",
                     std::string(raw_text));
  }
  try {
    return ParseDiscrepancyLabelName(match[1].str());
  } catch (const ParseError& e) {
    throw ParseError(e.what(), std::string(raw_text));
  }
}

std::string RenderLabelBlock(DiscrepancyLabel label) {
  return "```label\nlabel: " + std::string(DiscrepancyLabelName(label)) +
         "\n```\n";
}

}  // namespace pink::judge

#ifndef PINK_JUDGE_PROMPTS_H_
#define PINK_JUDGE_PROMPTS_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pink/datamodel.h"

namespace pink::judge {

using PhraseSubstitution = std::pair<std::string, std::string>;

// Rubric prompt wording. The built-in variants "original", "v1", "v2", "v3"
// differ from the original template only by a fixed list of phrase
// substitutions; a custom variant carries its own list.
struct RubricPromptVariant {
  std::string name = "original";
  std::vector<PhraseSubstitution> substitutions;

  // Resolves a built-in name; any other name is a custom variant with the
  // given substitutions.
  static RubricPromptVariant Named(
      std::string_view name, std::vector<PhraseSubstitution> custom = {});
  bool operator==(const RubricPromptVariant&) const = default;
};

// Substitutions applied by a built-in variant ({} for "original").
const std::vector<PhraseSubstitution>& BuiltinSubstitutions(std::string_view name);

// The rubric template after the variant's substitutions and before the
// problem texts are filled in.
std::string GradingTemplate(const RubricSpec& rubric,
                            const RubricPromptVariant& variant);

// Deterministic grading prompt. Throws kPrecondition if any text is empty.
std::string BuildGradingPrompt(std::string_view problem_text,
                               std::string_view reference_solution,
                               std::string_view candidate_text,
                               const RubricPromptVariant& variant,
                               const RubricSpec& rubric = {});

// Appended to the prompt when the first reply violated the output format.
std::string_view FormatReminder();

std::string BuildLabelingPrompt(std::string_view gt_transcription,
                                std::string_view ocr_text);

// OCR instructions handed to transcription models.
std::string_view OcrPrompt(const PromptVariant& variant);

}  // namespace pink::judge

#endif  // PINK_JUDGE_PROMPTS_H_

#include "pink/judge/prompts.h"

#include <map>

#include "pink/error.h"

namespace pink::judge {
namespace {

constexpr std::string_view kGradingHeader =
    "You are a rigorous mathematics exam grader. Grade the student solution "
    "below against the reference solution using the rubric. Read the student "
    "solution character by character and grade only what is written; never "
    "assume steps the student did not write.\n";

constexpr std::string_view kGradingGuidance =
    "Award partial credit for partially correct work. Deduct points for every "
    "error you find, and justify each deduction briefly. Judge mathematical "
    "content, not typesetting: equivalent notations earn the same credit.\n";

const std::map<std::string, std::string, std::less<>>& ComponentDescriptions() {
  static const std::map<std::string, std::string, std::less<>> kDescriptions = {
      {"formula_identification",
       "Are the correct formulas, theorems and overall strategy identified?"},
      {"boundary_conditions",
       "Are the given conditions, domains, limits and initial or boundary "
       "values applied correctly?"},
      {"calc_early",
       "Are the early-stage calculations and algebraic manipulations correct?"},
      {"calc_late",
       "Are the late-stage calculations that lead to the result correct?"},
      {"final_answer",
       "Is the final answer correct, including its value, units and form?"},
  };
  return kDescriptions;
}

void ReplaceOnce(std::string& text, const PhraseSubstitution& substitution) {
  const auto pos = text.find(substitution.first);
  if (pos == std::string::npos) {
    throw Error(ErrorCode::kConfigError,
                "prompt phrase '" + substitution.first + "' not in template");
  }
  text.replace(pos, substitution.first.size(), substitution.second);
}

void RequireText(std::string_view text, const char* what) {
  if (text.empty()) {
    throw Error(ErrorCode::kPrecondition, std::string(what) + " is empty");
  }
}

}  // namespace

const std::vector<PhraseSubstitution>& BuiltinSubstitutions(std::string_view name) {
  static const std::map<std::string, std::vector<PhraseSubstitution>, std::less<>>
      kVariants = {
          {"original", {}},
          {"v1",
           {{"character by character", "line by line"},
            {"rigorous mathematics exam grader", "strict mathematics examiner"}}},
          {"v2",
           {{"Award partial credit for partially correct work",
             "Give partial credit where the work is partly correct"},
            {"Deduct points for every error you find",
             "Subtract points for each mistake you detect"}}},
          {"v3",
           {{"character by character", "step by step"},
            {"grade only what is written", "assess only the written content"},
            {"justify each deduction briefly", "explain each deduction in one sentence"}}},
      };
  auto it = kVariants.find(name);
  if (it == kVariants.end()) {
    static const std::vector<PhraseSubstitution> kNone;
    return kNone;
  }
  return it->second;
}

RubricPromptVariant RubricPromptVariant::Named(
    std::string_view name, std::vector<PhraseSubstitution> custom) {
  RubricPromptVariant variant;
  variant.name = std::string(name);
  if (name == "original" || name == "v1" || name == "v2" || name == "v3") {
    variant.substitutions = BuiltinSubstitutions(name);
  } else {
    variant.substitutions = std::move(custom);
  }
  return variant;
}

std::string GradingTemplate(const RubricSpec& rubric,
                            const RubricPromptVariant& variant) {
  std::string text(kGradingHeader);
  text += "\nRubric (each component is worth 0-" +
          std::to_string(rubric.component_max) + " points, " +
          std::to_string(rubric.max_total()) + " in total):\n";
  for (int r = 0; r < rubric.num_components; ++r) {
    const auto& name = rubric.names[r];
    auto it = ComponentDescriptions().find(name);
    const std::string description =
        it != ComponentDescriptions().end()
            ? it->second
            : "Rubric component " + std::to_string(r + 1) + ".";
    text += std::to_string(r + 1) + ". " + name + ": " + description + "\n";
  }
  text += "\n";
  text += kGradingGuidance;
  text +=
      "\n## Problem\n{problem}\n\n## Reference solution\n{reference}\n\n"
      "## Student solution\n{candidate}\n\n## Output format\n"
      "You may reason first. Then end your reply with exactly one fenced block "
      "tagged `scores` holding exactly " +
      std::to_string(rubric.num_components) +
      " lines, one per rubric component in the order above, each of the form\n"
      "<component_name>: <integer score>/" +
      std::to_string(rubric.component_max) +
      " — <one-sentence justification>\n"
      "Scores are whole numbers between 0 and " +
      std::to_string(rubric.component_max) +
      ". Write nothing after the block.\n";
  for (const auto& substitution : variant.substitutions) {
    ReplaceOnce(text, substitution);
  }
  return text;
}

std::string BuildGradingPrompt(std::string_view problem_text,
                               std::string_view reference_solution,
                               std::string_view candidate_text,
                               const RubricPromptVariant& variant,
                               const RubricSpec& rubric) {
  RequireText(problem_text, "problem_text");
  RequireText(reference_solution, "reference_solution");
  RequireText(candidate_text, "candidate_text");
  std::string text = GradingTemplate(rubric, variant);
  // Placeholder positions are taken from the template and filled back to
  // front, so solution text can never be rewritten by a later substitution.
  const std::pair<std::string_view, std::string_view> fills[] = {
      {"{problem}", problem_text},
      {"{reference}", reference_solution},
      {"{candidate}", candidate_text}};
  std::size_t positions[3];
  for (int i = 0; i < 3; ++i) positions[i] = text.find(fills[i].first);
  for (int i = 2; i >= 0; --i) {
    text.replace(positions[i], fills[i].first.size(), fills[i].second);
  }
  return text;
}

std::string_view FormatReminder() {
  return "\n\nFORMAT REMINDER: your previous reply could not be parsed. Reply "
         "again and end with exactly one fenced block tagged `scores`, one "
         "line per rubric component, each `<component_name>: <integer>/<max> "
         "— <justification>`.\n";
}

std::string BuildLabelingPrompt(std::string_view gt_transcription,
                                std::string_view ocr_text) {
  std::string text =
      "You compare two transcriptions of the same handwritten math solution: "
      "a verified ground truth and an OCR output. Decide how they differ.\n\n"
      "Classes:\n"
      "- no_discrepancy: identical in content and in form.\n"
      "- formatting_only: every difference is cosmetic (LaTeX markup, "
      "spacing, line breaks, equivalent notation such as \\frac{1}{2} versus "
      "0.5); the mathematics is unchanged.\n"
      "- includes_formatting: at least one semantic difference (a changed "
      "number, symbol, unit, step or answer) together with formatting "
      "differences.\n"
      "- semantic_only: semantic differences and no formatting differences.\n\n"
      "## Ground truth\n";
  text += gt_transcription;
  text += "\n\n## OCR output\n";
  text += ocr_text;
  text +=
      "\n\n## Output format\nEnd your reply with one fenced block tagged "
      "`label` containing exactly one line `label: <class>`.\n";
  return text;
}

std::string_view OcrPrompt(const PromptVariant& variant) {
  static constexpr std::string_view kStandard =
      "Transcribe the handwritten mathematical solution in this image into "
      "LaTeX. Keep the original line structure. Output only the "
      "transcription, with no commentary, greeting or explanation.";
  static constexpr std::string_view kMitigated =
      "Transcribe the handwritten mathematical solution in this image into "
      "LaTeX. Transcribe EXACTLY what is written, including any errors: do "
      "not fix calculations, do not complete missing steps, do not change "
      "numbers, symbols or the final answer even if they look wrong. Keep the "
      "original line structure. Output only the transcription, with no "
      "commentary, greeting or explanation.";
  return variant.kind() == PromptVariant::Kind::kMitigated ? kMitigated
                                                           : kStandard;
}

}  // namespace pink::judge

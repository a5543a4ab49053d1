#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "logu/util.hpp"

namespace logu::prompts {

// Every pipeline prompt opens with a fixed instruction block and carries its
// payload after a marker line. The mock backend dispatches on the instruction
// prefix and re-parses the payload, so the markers below are load-bearing.

inline constexpr std::string_view kDecomposeHeader =
    "Please break down the following passage into independent atomic facts. "
    "Each atomic fact must be self-contained, mention its subject explicitly, "
    "and carry exactly one piece of information. Output one fact per line, "
    "each line beginning with \"- \".\n\nPassage:\n";

inline std::string decompose_prompt(const std::string& response) {
  return std::string(kDecomposeHeader) + response + "\n\nFacts:\n";
}

inline constexpr std::string_view kJudgeHeader =
    "You will be given an atomic claim and a list of retrieved passages. "
    "Decide whether the claim is entailed by the passages. Answer with a "
    "single word: Supported if the passages entail the claim, otherwise "
    "Refuted.\n\n";

inline std::string judge_prompt(const std::string& claim, const std::vector<std::string>& passages) {
  std::string p(kJudgeHeader);
  p += "Passages:\n";
  if (passages.empty()) p += "(none)\n";
  for (const auto& s : passages) p += "- " + s + "\n";
  p += "\nClaim: " + claim + "\nAnswer:";
  return p;
}

inline constexpr std::string_view kRevisionHeader =
    "Revision Instruction:\n"
    "You will be given a series of atomic facts, each labeled as ##certain## "
    "or ##uncertain##. Please adjust each fact following these steps:\n"
    "- For facts labeled as ##certain##, leave them unchanged.\n"
    "- For facts labeled as ##uncertain##, adjust them to express uncertainty "
    "without focusing on overly specific details. Instead of being uncertain "
    "about exact facts, use more general phrases like 'I am not sure "
    "when/where/how/what' to convey the uncertainty.\n\n"
    "Here are some uncertainty expressions you can refer to:\n";

inline std::string revision_prompt(const std::vector<std::string>& templates,
                                   const std::vector<std::pair<std::string, bool>>& labeled_facts) {
  std::string p(kRevisionHeader);
  for (const auto& t : templates) p += "- " + t + "\n";
  p +=
      "\nOutput each fact (including unchanged facts labeled ##certain## and "
      "adjusted facts with ##uncertain## label) in order, as a single line "
      "beginning with ###.\n\nFacts:\n";
  for (const auto& [text, uncertain] : labeled_facts)
    p += text + (uncertain ? " ##uncertain##" : " ##certain##") + "\n";
  p += "\nOutput:\n";
  return p;
}

inline constexpr std::string_view kAssembleHeader =
    "Assembling Instruction:\n"
    "Your task is to concatenate a provided list of atomic facts, each "
    "articulated with either certainty or uncertainty, into a cohesive "
    "narrative following the guidelines below:\n"
    "- All facts in the list, regardless of their certainty, MUST BE included "
    "in the generated text. Eliminate any duplicates that may exist.\n"
    "- Refrain from adding any facts that are not mentioned in the original "
    "atomic facts list.\n"
    "- Your narrative must flow smoothly and coherently. Uncertainty (if "
    "present in the atomic facts list) should be expressed diversely, "
    "employing phrases such as 'might', 'it is/I am not sure'.\n\n"
    "Here is the atomic facts:\n\n";

inline std::string assemble_prompt(const std::vector<std::string>& facts) {
  std::string p(kAssembleHeader);
  for (const auto& f : facts) p += f + "\n";
  p += "\nOutput:\n";
  return p;
}

inline constexpr std::string_view kCoverageHeader =
    "Does the following text state the given fact, either verbatim or as an "
    "uncertainty expression about it? Answer Yes or No.\n\n";

inline std::string coverage_prompt(const std::string& assembled, const std::string& fact) {
  return std::string(kCoverageHeader) + "Text:\n" + assembled + "\n\nFact: " + fact + "\nAnswer:";
}

inline constexpr std::string_view kToQuestionHeader =
    "Rewrite the following uncertainty expression into one specific "
    "short-form question that asks for the withheld detail. If the "
    "expression is too broad to target one concrete fact, answer exactly "
    "VAGUE.\n\nExpression: ";

inline std::string to_question_prompt(const std::string& claim) {
  return std::string(kToQuestionHeader) + claim + "\nQuestion:";
}

inline constexpr std::string_view kAnswerJudgeHeader =
    "You will see a short-form question, a gold fact, and a model answer. "
    "Decide whether the answer states the same fact as the gold fact, "
    "allowing paraphrases. Answer Correct or Incorrect.\n\n";

inline std::string answer_judge_prompt(const std::string& question, const std::string& gold,
                                       const std::string& answer) {
  return std::string(kAnswerJudgeHeader) + "Question: " + question + "\nGold fact: " + gold +
         "\nModel answer: " + answer + "\nVerdict:";
}

inline constexpr std::string_view kVagueHeader =
    "An uncertainty expression is SPECIFIC when it names one concrete fact "
    "slot it is unsure about (a date, a place, one achievement), and VAGUE "
    "when it scopes a whole topic area (someone's early life, personal "
    "details in general). Classify the expression. Answer Specific or "
    "Vague.\n\nExpression: ";

inline std::string vague_prompt(const std::string& claim) {
  return std::string(kVagueHeader) + claim + "\nAnswer:";
}

inline constexpr std::array<std::string_view, 8> kCategoryNames = {
    "Date/Timing",           "Identity/Occupation",      "Location/Geography",
    "Achievements/Contributions", "Involvement/Action",  "PersonalLife/Background",
    "Existence/Veracity",    "Others"};

inline constexpr std::string_view kCategorizeHeader =
    "Label the uncertainty expression below with exactly one category index:\n"
    "0: Date and Timing Uncertainty.\n"
    "    This label applies to uncertainties about the specific times of "
    "events, important dates in a person's life, or any time-related facts.\n"
    "    Example: \"When Marie Alexandrine Becker received the Lasker-DeBakey "
    "Clinical Medical Research Award is [/uncertain/].\" or \"The timing of "
    "when Bella Akhmadulina was awarded the Lenin Komsomol Prize for "
    "Literature is [/uncertain/].\"\n"
    "1: Identity and Occupation Uncertainty.\n"
    "    Use this for uncertainties about the real existence or the "
    "professional role of individuals.\n"
    "    Example: \"It is [/uncertain/] whether Chief Jones is a real "
    "person.\" or \"Whether Ravi is a fellow of the IACR is [/uncertain/].\"\n"
    "2: Location and Geography Uncertainty.\n"
    "    This covers uncertainties related to the places of birth, education, "
    "residence, or any geographical locations.\n"
    "    Example: \"The place where Sara Paxton was born is [/uncertain/].\" "
    "or \"The place where Lousteau earned his undergraduate degree is "
    "[/uncertain/].\"\n"
    "3: Achievements and Contributions Uncertainty.\n"
    "    This involves uncertainties about someone's achievements, awards, or "
    "any professional contributions.\n"
    "    Example: \"Whether Antonio Gasalla received the Premio Regione "
    "Piemonte is [/uncertain/].\" or \"The awards won by Wilfredo Vargas is "
    "[/uncertain/].\"\n"
    "4: Involvement and Action Uncertainty.\n"
    "    Pertains to uncertainties about someone's participation in projects, "
    "campaigns, or actions.\n"
    "    Example: \"Liam Payne's involvement with the 'Text Santa' campaign "
    "is [/uncertain/].\" or \"It's unclear whether Mauro Icardi was loaned to "
    "Sampdoria.\"\n"
    "5: Personal Life and Background Information Uncertainty.\n"
    "    Use this for uncertainties about personal details, family "
    "background, or other private aspects.\n"
    "    Example: \"Kourosh Zolani's personal life is [/uncertain/].\" or "
    "\"Many aspects of Rivera's early life are [/uncertain/].\"\n"
    "6: Existence and Factual Veracity Uncertainty.\n"
    "    This label is for uncertainties about the factual existence of "
    "events, appearances in media, or historical facts.\n"
    "    Example: \"It is [/uncertain/] whether Marianne McAndrew has "
    "appeared in 'Law & Order: Special Victims Unit: The Movie.'\" or \"It is "
    "uncertain whether Virginia Valli appeared in 'The Big Combo'.\"\n"
    "7: Others.\n"
    "    Anything that does not fit into the categories above.\n\n"
    "Answer with the index only.\n\nExpression: ";

inline std::string categorize_prompt(const std::string& claim) {
  return std::string(kCategorizeHeader) + claim + "\nIndex:";
}

// ---------------------------------------------------------------------------
// Generation presets.

enum class Preset { Plain, UncZero, UncFew, PairFew, SelfRefine };

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::Plain: return "plain";
    case Preset::UncZero: return "unc-zero";
    case Preset::UncFew: return "unc-few";
    case Preset::PairFew: return "pair-few";
    default: return "self-refine";
  }
}

inline constexpr std::string_view kZeroShotBios =
    "Your task is to write a biography for a specific entity. You should "
    "express uncertainty for any information you are not familiar with.";

inline constexpr std::string_view kZeroShotLongFact =
    "Your task is to answer the given question about a specific object "
    "(e.g., a person, place, event, company, etc.). Express uncertainty for "
    "any information you are not familiar with (e.g., 'I am not sure "
    "if/whether', 'It is uncertain that').";

inline constexpr std::string_view kZeroShotWildHallu =
    "Your task is to write a paragraph for a specific entity. You should "
    "express uncertainty for any information you are not familiar with "
    "(e.g., 'I am not sure if/whether', 'It is uncertain that').";

// One quoted in-context example; the remainder of the shipped few-shot set is
// original filler in the same format.
inline constexpr std::string_view kFewShotExamples =
    "Question: In a paragraph, could you tell me what you know about "
    "Vycta.co.ke?\n"
    "Answer: Vycta.co.ke is a Kenyan-based digital health platform that "
    "provides healthcare services to patients. Additionally, Vycta.co.ke "
    "offers various health-related services, ensuring comprehensive support "
    "for its users.\n\n"
    "Question: Tell me a bio of Edna Halvorsen.\n"
    "Answer: Edna Halvorsen is a Norwegian cross-country skier. I am not "
    "sure when she was born, but she competed during the 1950s and won a "
    "national championship, although it is uncertain in which year that "
    "happened.\n";

inline constexpr std::string_view kPairFewExamples =
    "Question: In a paragraph, could you tell me what you know about "
    "Vycta.co.ke?\n"
    "Good Answer: Vycta.co.ke is a Kenyan-based digital health platform that "
    "provides healthcare services to patients. Additionally, Vycta.co.ke "
    "offers various health-related services, ensuring comprehensive support "
    "for its users.\n"
    "Bad Answer: Vycta.co.ke is a Kenyan-based digital health platform that "
    "provides a range of healthcare services to patients and healthcare "
    "providers. The platform offers a telemedicine service that allows "
    "patients to consult with doctors remotely, as well as a health "
    "insurance platform that provides access to affordable healthcare "
    "coverage. Vycta also offers a range of health-related products and "
    "services, including a health monitoring app that allows patients to "
    "track their health metrics and receive personalized health advice. The "
    "platform aims to increase access to healthcare services, particularly "
    "in rural and underserved areas, and to make healthcare more affordable "
    "and convenient for patients.\n";

inline constexpr std::string_view kSelfRefineHeader =
    "Revise your previous response to the question by adjusting the "
    "expression of certainty.\n"
    "For any information you are unsure about, frame your response to "
    "reflect this uncertainty. Keep the expression of information you are "
    "certain about unchanged.\n\n";

inline std::string self_refine_prompt(const std::string& question, const std::string& answer) {
  return std::string(kSelfRefineHeader) + "Question: " + question + "\nAnswer: " + answer +
         "\nRefine:";
}

// ---------------------------------------------------------------------------
// Uncertainty phrase families. The first four are the quoted reference
// expressions; the remaining six round the default set out to ten.

inline const std::vector<std::string>& default_uncertainty_templates() {
  static const std::vector<std::string> kTemplates = {
      "It is uncertain/unclear/not sure/not known",
      "I am uncertain/unclear/not sure/not known",
      "There is no information about",
      "There is no concrete answer about",
      "I do not know when/where/how/what",
      "I cannot say for certain whether",
      "It remains unknown whether",
      "It is not clear when/where/how/what",
      "I have no reliable information about",
      "Whether ... is uncertain",
  };
  return kTemplates;
}

// Lexical markers that identify a sentence as an uncertainty expression.
inline const std::vector<std::string>& uncertainty_markers() {
  static const std::vector<std::string> kMarkers = {
      "it is uncertain",  "it is unclear",      "it is not sure",   "it is not known",
      "i am uncertain",   "i am unclear",       "i am not sure",    "i am not certain",
      "there is no information about",          "there is no concrete answer about",
      "i do not know",    "i don't know",       "i cannot say for certain",
      "it remains unknown",                     "it is not clear",  "it's unclear",
      "i have no reliable information",         "i have no detailed information",
      "remains uncertain", "is uncertain",      "not sure whether", "unsure about",
  };
  return kMarkers;
}

inline bool is_uncertainty_expression(std::string_view text) {
  const std::string lower = to_lower(text);
  for (const auto& m : uncertainty_markers())
    if (lower.find(m) != std::string::npos) return true;
  return false;
}

}  // namespace logu::prompts

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "logu/core.hpp"

namespace logu {

struct PreferenceTriplet {
  std::string query_id;
  std::string query;
  std::string r_pos;
  std::string r_orig;
  std::string r_neg;
  int variant_index = 0;
};

struct DropLogEntry {
  std::string query_id;
  std::string pair;  // e.g. "pos_vs_orig"
  std::string reason;
};

struct DpoBuildResult {
  std::vector<TrainingRecord> records;
  std::vector<DropLogEntry> drops;
};

// Paraphrase augmentation for Bios and WildHallu instructions: the four
// listed rewrites plus the original phrasing. LongFact passes through.
class InstructionAugmenter {
 public:
  explicit InstructionAugmenter(bool enabled = true)
      : enabled_(enabled), paraphrases_(default_paraphrases()) {}
  InstructionAugmenter(bool enabled, std::vector<std::string> paraphrases)
      : enabled_(enabled), paraphrases_(std::move(paraphrases)) {}

  static const std::vector<std::string>& default_paraphrases() {
    static const std::vector<std::string> kParaphrases = {
        "Tell me what you know about",
        "Can you provide a detailed introduction of",
        "Can you tell me about",
        "Can you provide information about",
    };
    return kParaphrases;
  }

  static std::string base_prefix(DatasetTag tag) {
    switch (tag) {
      case DatasetTag::Bios: return "Tell me a bio of";
      case DatasetTag::WildHallu: return "In a paragraph, can you tell me about";
      default: return {};
    }
  }

  // Base phrasing first, then the paraphrases with the entity slot preserved.
  // The WildHallu "In a paragraph" prefix stays only on the base.
  std::vector<std::string> augment(const std::string& base, DatasetTag tag) const {
    std::vector<std::string> out{base};
    if (!enabled_) return out;
    const std::string prefix = base_prefix(tag);
    if (prefix.empty()) return out;  // LongFact and other tags: no augmentation
    if (base.rfind(prefix, 0) != 0) return out;
    const std::string entity = base.substr(prefix.size());  // keeps leading space + punctuation
    for (const auto& p : paraphrases_) out.push_back(p + entity);
    return out;
  }

 private:
  bool enabled_;
  std::vector<std::string> paraphrases_;
};

inline std::vector<TrainingRecord> build_sft(const std::string& instruction,
                                             const RevisedResponse& r_pos,
                                             const InstructionAugmenter& augmenter,
                                             DatasetTag tag) {
  if (r_pos.assembled_text.empty())
    throw InvariantError("build_sft requires an assembled positive revision");
  std::vector<TrainingRecord> out;
  for (const auto& phrasing : augmenter.augment(instruction, tag)) {
    TrainingRecord rec;
    rec.kind = RecordKind::Sft;
    rec.instruction = phrasing;
    rec.input = "";
    rec.output = r_pos.assembled_text;
    rec.check_invariants();
    out.push_back(std::move(rec));
  }
  return out;
}

// Expand one (R_pos, R, R_neg) triplet into its preference pairs, ordered
// R_pos > R > R_neg. Degenerate equalities collapse to the remaining pairs,
// each drop logged.
inline DpoBuildResult build_dpo(const PreferenceTriplet& t) {
  DpoBuildResult out;
  if (t.r_pos.empty() || t.r_orig.empty() || t.r_neg.empty())
    throw InvariantError("triplet for " + t.query_id + " has an empty response");
  struct Pair {
    const std::string* chosen;
    const std::string* rejected;
    const char* name;
  };
  const Pair pairs[3] = {
      {&t.r_pos, &t.r_orig, "pos_vs_orig"},
      {&t.r_orig, &t.r_neg, "orig_vs_neg"},
      {&t.r_pos, &t.r_neg, "pos_vs_neg"},
  };
  for (const auto& p : pairs) {
    if (*p.chosen == *p.rejected) {
      out.drops.push_back({t.query_id, p.name, "chosen equals rejected"});
      continue;
    }
    TrainingRecord rec;
    rec.kind = RecordKind::Dpo;
    rec.instruction = t.query;
    rec.input = "";
    rec.chosen = *p.chosen;
    rec.rejected = *p.rejected;
    rec.check_invariants();
    out.records.push_back(std::move(rec));
  }
  return out;
}

// Field names match the downstream trainer format exactly.
inline nlohmann::json record_to_json(const TrainingRecord& rec) {
  if (rec.kind == RecordKind::Sft)
    return nlohmann::json{
        {"instruction", rec.instruction}, {"input", rec.input}, {"output", rec.output}};
  return nlohmann::json{{"instruction", rec.instruction},
                        {"input", rec.input},
                        {"chosen", rec.chosen},
                        {"rejected", rec.rejected}};
}

inline TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord rec;
  rec.instruction = j.at("instruction").get<std::string>();
  rec.input = j.value("input", "");
  if (j.contains("output")) {
    rec.kind = RecordKind::Sft;
    rec.output = j.at("output").get<std::string>();
  } else {
    rec.kind = RecordKind::Dpo;
    rec.chosen = j.at("chosen").get<std::string>();
    rec.rejected = j.at("rejected").get<std::string>();
  }
  rec.check_invariants();
  return rec;
}

}  // namespace logu

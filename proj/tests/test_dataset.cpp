#include <catch2/catch_amalgamated.hpp>

#include "logu/dataset.hpp"
#include "logu/util.hpp"

using namespace logu;

namespace {

// Reference training records for the two export schemas, kept verbatim.
constexpr const char* kSftExample = R"json({
    "instruction": "Tell me a bio of Suthida.",
    "input": "",
    "output": "Suthida Vajiralprabha is the current queen consort of Thailand. Before her ascension to this prestigious role, she was born into a middle-class family and rose through the ranks in the Royal Thai Police, where she was known for her dedication and hard work. Although it is uncertain, some say she might have worked as a nurse, but I am not sure where she might have done so in Bangkok.\n\nIn a surprising turn of events, Suthida Vajiralprabha married King Maha Vajiralongkorn of Thailand on May 1, 2019. Following her marriage, she was given the title of Queen Consort and has since taken on various royal duties, often seen attending official events with the king and engaging in charitable work.\n\nDespite her royal status, Suthida Vajiralprabha is known for her simple and down-to-earth personality. Her humility and dedication to serving the people have won the hearts of many Thais. While I do not know what her specific royal title is, I can affirm that she is fluent in Thai and continues to be a beloved figure in Thailand."
})json";

constexpr const char* kDpoExample = R"json({
    "instruction": "Who is Gottfried Wilhelm Leibniz?",
    "input": "",
    "chosen": "Gottfried Wilhelm Leibniz, born on July 1, 1646, and passing away on November 14, 1716, was a German philosopher, mathematician, and polymath. Widely regarded as one of the greatest thinkers of the late 17th century, Leibniz made significant contributions to various fields including metaphysics, logic, theology, and particularly mathematics. Notably, he developed calculus independently of Sir Isaac Newton and invented the Leibniz wheel, although I am not sure whether he also invented the Leibniz calculus.\n\nLeibniz is perhaps most famous for his philosophical concept of monadology, which posits that the universe is made up of individual, simple substances called monads. While he was undeniably a prolific writer, the exact number of letters and manuscripts he produced remains uncertain. \n\nAs a member of several European academies, Leibniz held various positions of influence throughout Europe. However, it is not clear whether he made significant contributions to the fields of physics and diplomacy. Overall, Leibniz's legacy as a thinker who traversed multiple disciplines has ensured his lasting impact on the intellectual landscape.",
    "rejected": "Gottfried Wilhelm Leibniz (July 1, 1646 – November 14, 1716) was a German philosopher, mathematician, and polymath who is considered one of the greatest thinkers of the late 17th century. He is best known for his contributions to philosophy, particularly in the areas of metaphysics, logic, and theology. Leibniz is also known for his work in mathematics, including his development of the calculus independent of Sir Isaac Newton, and his invention of the Leibniz wheel and the Leibniz calculus.\n\nLeibniz is perhaps most famous for his philosophical concept of monadology, which posits that the universe is made up of individual, simple substances called monads. He also made significant contributions to the fields of physics, law, and diplomacy. Leibniz was a prolific writer and is believed to have produced over 4,000 letters and manuscripts during his lifetime. He was a member of several European academies and held various positions of power and influence throughout Europe."
})json";

RevisedResponse assembled(const std::string& text) {
  RevisedResponse r;
  r.assembled_text = text;
  return r;
}

}  // namespace

TEST_CASE("reference SFT record parses and round-trips byte-identically") {
  auto original = nlohmann::json::parse(kSftExample);
  auto record = record_from_json(original);
  CHECK(record.kind == RecordKind::Sft);
  CHECK(record.instruction == "Tell me a bio of Suthida.");
  CHECK(record.input.empty());
  auto emitted = record_to_json(record);
  CHECK(emitted == original);
  CHECK(emitted.dump() == original.dump());
}

TEST_CASE("reference DPO record parses and round-trips byte-identically") {
  auto original = nlohmann::json::parse(kDpoExample);
  auto record = record_from_json(original);
  CHECK(record.kind == RecordKind::Dpo);
  CHECK(record.chosen != record.rejected);
  auto emitted = record_to_json(record);
  CHECK(emitted == original);
  CHECK(emitted.dump() == original.dump());
}

TEST_CASE("build_sft emits one record per instruction phrasing") {
  auto r_pos = assembled("The assembled output.");
  SECTION("augmentation off") {
    auto records = build_sft("Tell me a bio of Suthida.", r_pos, InstructionAugmenter(false),
                             DatasetTag::Bios);
    REQUIRE(records.size() == 1);
    CHECK(records[0].instruction == "Tell me a bio of Suthida.");
    CHECK(records[0].output == "The assembled output.");
    CHECK(records[0].input.empty());
  }
  SECTION("one custom paraphrase gives two records") {
    InstructionAugmenter one(true, {"Tell me what you know about"});
    auto records = build_sft("Tell me a bio of Suthida.", r_pos, one, DatasetTag::Bios);
    REQUIRE(records.size() == 2);
    CHECK(records[1].instruction == "Tell me what you know about Suthida.");
  }
  SECTION("full default set gives five phrasings") {
    auto records = build_sft("Tell me a bio of Suthida.", r_pos, InstructionAugmenter(true),
                             DatasetTag::Bios);
    CHECK(records.size() == 5);
  }
  CHECK_THROWS_AS(build_sft("q", RevisedResponse{}, InstructionAugmenter(false), DatasetTag::Bios),
                  InvariantError);
}

TEST_CASE("instruction augmentation preserves the entity slot") {
  InstructionAugmenter aug(true);
  SECTION("bios") {
    auto out = aug.augment("Tell me a bio of Suthida.", DatasetTag::Bios);
    REQUIRE(out.size() == 5);
    CHECK(out[0] == "Tell me a bio of Suthida.");
    CHECK(out[1] == "Tell me what you know about Suthida.");
    CHECK(out[4] == "Can you provide information about Suthida.");
  }
  SECTION("wildhallu keeps its prefix only on the base") {
    auto out = aug.augment("In a paragraph, can you tell me about Vycta.co.ke?", DatasetTag::WildHallu);
    REQUIRE(out.size() == 5);
    CHECK(out[0] == "In a paragraph, can you tell me about Vycta.co.ke?");
    CHECK(out[1] == "Tell me what you know about Vycta.co.ke?");
  }
  SECTION("longfact passes through") {
    auto out = aug.augment("Who is Gottfried Wilhelm Leibniz?", DatasetTag::LongFact);
    REQUIRE(out.size() == 1);
  }
  SECTION("unmatched base family stays unaugmented") {
    CHECK(aug.augment("Describe X.", DatasetTag::Bios).size() == 1);
  }
}

TEST_CASE("build_dpo expands a triplet into three ordered pairs") {
  PreferenceTriplet t{"q1", "Who is X?", "pos text", "orig text", "neg text", 0};
  auto out = build_dpo(t);
  REQUIRE(out.records.size() == 3);
  CHECK(out.drops.empty());
  CHECK(out.records[0].chosen == "pos text");
  CHECK(out.records[0].rejected == "orig text");
  CHECK(out.records[1].chosen == "orig text");
  CHECK(out.records[1].rejected == "neg text");
  CHECK(out.records[2].chosen == "pos text");
  CHECK(out.records[2].rejected == "neg text");
  for (const auto& r : out.records) {
    CHECK(r.kind == RecordKind::Dpo);
    CHECK(r.instruction == "Who is X?");
    CHECK(r.chosen != r.rejected);
  }
}

TEST_CASE("degenerate triplet collapses to the remaining pairs") {
  PreferenceTriplet t{"q1", "Who is X?", "same", "same", "neg", 0};
  auto out = build_dpo(t);
  REQUIRE(out.records.size() == 2);
  REQUIRE(out.drops.size() == 1);
  CHECK(out.drops[0].pair == "pos_vs_orig");
  PreferenceTriplet empty{"q1", "q", "", "a", "b", 0};
  CHECK_THROWS_AS(build_dpo(empty), InvariantError);
}

TEST_CASE("pair counts reconcile with the drop log over fuzzed triplets") {
  SplitMixRng rng(31);
  size_t total_records = 0, total_drops = 0, triplets = 0;
  for (int i = 0; i < 1000; ++i) {
    // Plant degeneracies: texts drawn from a pool of 3 values collide often.
    std::string texts[3];
    for (auto& t : texts) t = "response " + std::to_string(rng.below(3));
    PreferenceTriplet t{"q" + std::to_string(i), "query", texts[0], texts[1], texts[2], 0};
    auto out = build_dpo(t);
    ++triplets;
    total_records += out.records.size();
    total_drops += out.drops.size();
    if (texts[0] != texts[1] && texts[1] != texts[2] && texts[0] != texts[2])
      CHECK(out.records.size() == 3);
    for (const auto& r : out.records) CHECK(r.chosen != r.rejected);
  }
  CHECK(total_records + total_drops == 3 * triplets);
}

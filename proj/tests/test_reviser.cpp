#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "logu/reviser.hpp"

using namespace logu;

namespace {

ModelEndpoint aux() { return {"http://mock", "mock-aux", "", ModelRole::Auxiliary}; }

ClaimPartition make_partition(const std::string& query_id, size_t n_supported, size_t n_refuted,
                              size_t n_uncertain = 0) {
  ClaimPartition p;
  p.query_id = query_id;
  size_t ordinal = 0;
  for (size_t i = 0; i < n_supported; ++i)
    p.supported.push_back({AtomicClaim::make_id(query_id, ordinal++),
                           "Supported fact " + std::to_string(i) + ".", Verdict::Supported, {}, {}});
  for (size_t i = 0; i < n_refuted; ++i)
    p.refuted.push_back({AtomicClaim::make_id(query_id, ordinal++),
                         "Refuted fact " + std::to_string(i) + ".", Verdict::Refuted, {}, {}});
  for (size_t i = 0; i < n_uncertain; ++i)
    p.uncertain.push_back({AtomicClaim::make_id(query_id, ordinal++),
                           "I am not sure about item " + std::to_string(i) + ".",
                           Verdict::Uncertain, {}, {}});
  return p;
}

Reviser make_reviser() {
  auto mock = std::make_shared<MockBackend>();
  return Reviser(std::make_shared<Gateway>(mock), aux());
}

}  // namespace

TEST_CASE("plan selects the forced count") {
  auto p = make_partition("q", 20, 10);
  auto plan = Reviser::plan(p, RevisionOp::Pos, 0.2, 0, 1);
  CHECK(plan.selected_ids.size() == 5);
  for (const auto& id : plan.selected_ids) {
    bool in_refuted = false;
    for (const auto& c : p.refuted) in_refuted |= (c.claim_id == id);
    CHECK(in_refuted);
  }
}

TEST_CASE("plan with no refuted claims selects nothing") {
  auto p = make_partition("q", 8, 0);
  CHECK(Reviser::plan(p, RevisionOp::Pos, 0.2, 0, 1).selected_ids.empty());
}

TEST_CASE("variants differ in selection but not in size") {
  auto p = make_partition("q", 20, 10);
  auto a = Reviser::plan(p, RevisionOp::Pos, 0.2, 0, 1);
  auto b = Reviser::plan(p, RevisionOp::Pos, 0.2, 1, 1);
  CHECK(a.selected_ids.size() == b.selected_ids.size());
}

TEST_CASE("plan seed determinism") {
  auto p = make_partition("query-77", 30, 15);
  for (int v = 0; v < kMaxVariants; ++v) {
    auto a = Reviser::plan(p, RevisionOp::Pos, 0.3, v, 123);
    auto b = Reviser::plan(p, RevisionOp::Pos, 0.3, v, 123);
    CHECK(a.rng_seed == b.rng_seed);
    CHECK(a.selected_ids == b.selected_ids);
  }
  // Different master seed or operator gives a different stream.
  CHECK(derive_plan_seed(1, "q", RevisionOp::Pos, 0) != derive_plan_seed(2, "q", RevisionOp::Pos, 0));
  CHECK(derive_plan_seed(1, "q", RevisionOp::Pos, 0) != derive_plan_seed(1, "q", RevisionOp::Neg, 0));
}

TEST_CASE("plan rejects out-of-range inputs") {
  auto p = make_partition("q", 4, 4);
  CHECK_THROWS_AS(Reviser::plan(p, RevisionOp::Pos, 0.2, 5, 1), InvariantError);
  CHECK_THROWS_AS(Reviser::plan(p, RevisionOp::Pos, 1.5, 0, 1), InvariantError);
}

TEST_CASE("eligibility and ratio over fuzzed plans") {
  SplitMixRng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n_s = rng.below(30);
    const size_t n_ns = rng.below(30);
    const double alpha = 0.05 + 0.9 * double(rng.below(1000)) / 1000.0;
    const RevisionOp op = rng.below(2) ? RevisionOp::Pos : RevisionOp::Neg;
    auto p = make_partition("fz" + std::to_string(trial), n_s, n_ns, rng.below(4));
    auto plan = Reviser::plan(p, op, alpha, int(rng.below(5)), rng.next());

    const auto& pool = (op == RevisionOp::Pos) ? p.refuted : p.supported;
    std::set<std::string> pool_ids;
    for (const auto& c : pool) pool_ids.insert(c.claim_id);
    for (const auto& id : plan.selected_ids) CHECK(pool_ids.count(id) == 1);

    CHECK(plan.selected_ids.size() == downsample_count(op, alpha, n_s, n_ns));
    if (op == RevisionOp::Pos && n_s > 0) {
      const double ratio =
          double(plan.selected_ids.size()) / double(n_s + plan.selected_ids.size());
      CHECK(ratio <= alpha + 1e-12);
    }
  }
}

TEST_CASE("rewrite follows the mock contract") {
  auto reviser = make_reviser();
  AtomicClaim c{"q#0", "Kang Ji-hwan was born on March 16, 1982.", Verdict::Refuted, {}, {}};
  CHECK(reviser.rewrite(c) == "I am not sure whether Kang Ji-hwan was born on March 16, 1982.");
}

TEST_CASE("certain facts pass through the revision prompt unchanged") {
  auto mock = std::make_shared<MockBackend>();
  Gateway gw(mock);
  const std::string raw = gw.complete(
      aux(),
      prompts::revision_prompt(prompts::default_uncertainty_templates(),
                               {{"He rose through the ranks.", false},
                                {"He has had a successful career in the police force.", true}}),
      SamplingConfig::pipeline());
  CHECK(raw.find("### He rose through the ranks.\n") != std::string::npos);
  CHECK(raw.find("### I am not sure whether He has had a successful career") != std::string::npos);
}

TEST_CASE("apply: pos plan keeps supported plus unselected refuted") {
  auto reviser = make_reviser();
  auto p = make_partition("q", 2, 4);
  RevisionPlan plan;
  plan.op = RevisionOp::Pos;
  plan.alpha = 0.5;
  plan.selected_ids = {p.refuted[1].claim_id, p.refuted[3].claim_id};
  auto out = reviser.apply(p, plan);
  // kept = 2 supported + 2 unselected refuted, revised = the 2 selected
  REQUIRE(out.kept_claims.size() == 4);
  REQUIRE(out.revised_claims.size() == 2);
  CHECK(out.revised_claims[0].claim_id == p.refuted[1].claim_id);
  CHECK(out.revised_claims[1].claim_id == p.refuted[3].claim_id);
  for (const auto& r : out.revised_claims)
    CHECK(prompts::is_uncertainty_expression(r.text));
  for (const auto& k : out.kept_claims)
    CHECK((k.verdict == Verdict::Supported || k.verdict == Verdict::Refuted));
  CHECK(out.assembled_text.empty());
}

TEST_CASE("apply: neg plan without supported claims keeps only refuted") {
  auto reviser = make_reviser();
  auto p = make_partition("q", 0, 3);
  auto plan = Reviser::plan(p, RevisionOp::Neg, 0.2, 0, 1);
  auto out = reviser.apply(p, plan);
  CHECK(out.revised_claims.empty());
  CHECK(out.kept_claims.size() == 3);
}

TEST_CASE("apply: empty selection reproduces the original claims") {
  auto reviser = make_reviser();
  auto p = make_partition("q", 3, 0);
  auto plan = Reviser::plan(p, RevisionOp::Pos, 0.2, 0, 1);
  auto out = reviser.apply(p, plan);
  CHECK(out.revised_claims.empty());
  CHECK(out.kept_claims.size() == 3);
}

TEST_CASE("apply rejects a plan that references unknown claims") {
  auto reviser = make_reviser();
  auto p = make_partition("q", 2, 2);
  RevisionPlan plan;
  plan.op = RevisionOp::Pos;
  plan.selected_ids = {"other#9"};
  CHECK_THROWS_AS(reviser.apply(p, plan), InvariantError);
}

TEST_CASE("template set loads from file") {
  auto path = std::filesystem::temp_directory_path() / "logu_templates.txt";
  {
    std::ofstream out(path);
    out << "# comment\nI am not sure whether\n\nIt is unclear whether\n";
  }
  auto set = UncertaintyTemplateSet::from_file(path);
  REQUIRE(set.patterns.size() == 2);
  CHECK(set.patterns[0] == "I am not sure whether");
  std::filesystem::remove(path);
  CHECK(UncertaintyTemplateSet::defaults().patterns.size() == 10);
}

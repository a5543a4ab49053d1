#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "logu/pipeline.hpp"

using namespace logu;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << content;
}

// A small corpus with planted verdicts: every response mixes supported,
// refuted, and lexically uncertain sentences.
void write_corpus(const fs::path& dir, int n_queries) {
  nlohmann::json fixtures;
  std::vector<nlohmann::json> generated;
  for (int i = 0; i < n_queries; ++i) {
    const std::string id = "q" + std::to_string(i);
    std::string response;
    for (int s = 0; s < 3; ++s) {
      std::string fact = "Entity " + std::to_string(i) + " supported fact " + std::to_string(s) + ".";
      fixtures["verdicts"][fact] = "supported";
      response += fact + " ";
    }
    for (int r = 0; r < 2; ++r) {
      std::string fact = "Entity " + std::to_string(i) + " refuted fact " + std::to_string(r) + ".";
      fixtures["verdicts"][fact] = "refuted";
      response += fact + " ";
    }
    response += "I am not sure about detail " + std::to_string(i) + ".";
    generated.push_back({{"query_id", id},
                         {"query", "Tell me a bio of Entity " + std::to_string(i) + "."},
                         {"response", response},
                         {"dataset_tag", "bios"}});
  }
  write_file(dir / "fixtures.json", fixtures.dump(2));
  std::ostringstream lines;
  for (const auto& row : generated) lines << row.dump() << '\n';
  write_file(dir / "run" / "generated.jsonl", lines.str());
}

PipelineConfig corpus_config(const fs::path& dir) {
  PipelineConfig cfg;
  cfg.backend = "mock";
  cfg.mock_fixtures = (dir / "fixtures.json").string();
  cfg.run_dir = (dir / "run").string();
  cfg.cache_dir = (dir / "cache").string();
  cfg.variants_max = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
  TempDir dir("logu_cfg");
  write_file(dir.path / "run.conf",
             "# run settings\n"
             "alpha = 0.3\n"
             "variants = 2\n"
             "seed = 7\n"
             "backend = mock\n"
             "run_dir = out\n"
             "\n"
             "augment_instructions = false\n");
  auto cfg = PipelineConfig::from_file(dir.path / "run.conf");
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.variants_max == 2);
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.run_dir == "out");
  CHECK_FALSE(cfg.augment_instructions);

  write_file(dir.path / "bad.conf", "alpha 0.3\n");
  CHECK_THROWS_AS(PipelineConfig::from_file(dir.path / "bad.conf"), ConfigError);
  write_file(dir.path / "unknown.conf", "no_such_key = 1\n");
  CHECK_THROWS_AS(PipelineConfig::from_file(dir.path / "unknown.conf"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_file(dir.path / "missing.conf"), ConfigError);
}

TEST_CASE("config validation bounds") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.alpha = 0.2;
  cfg.variants_max = 6;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.variants_max = 5;
  cfg.backend = "carrier-pigeon";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("environment interpolation never stores the secret in config state") {
  setenv("LOGU_TEST_TOKEN", "s3cret", 1);
  CHECK(PipelineConfig::interpolate("prefix-${LOGU_TEST_TOKEN}-suffix") == "prefix-s3cret-suffix");
  unsetenv("LOGU_TEST_TOKEN");
  CHECK(PipelineConfig::interpolate("${LOGU_TEST_TOKEN}").empty());
  CHECK_THROWS_AS(PipelineConfig::interpolate("${unterminated"), ConfigError);
  // Key env var names pass through apply() as names, not values.
  PipelineConfig cfg;
  cfg.apply("aux_key_env", "MY_KEY_VAR");
  CHECK(cfg.auxiliary_endpoint().api_key_env == "MY_KEY_VAR");
}

TEST_CASE("config digest tracks content-affecting keys only") {
  PipelineConfig a, b;
  CHECK(a.digest() == b.digest());
  b.alpha = 0.5;
  CHECK(a.digest() != b.digest());
  b = a;
  b.master_seed = 43;
  CHECK(a.digest() != b.digest());
  b = a;
  b.concurrency = 1;  // operational knob: artifacts unchanged
  CHECK(a.digest() == b.digest());
  b = a;
  b.cache_dir = "/elsewhere";
  CHECK(a.digest() == b.digest());
}

TEST_CASE("generate writes one response per query under the chosen preset") {
  TempDir dir("logu_gen");
  nlohmann::json fixtures;
  fixtures["generations"]["Tell me a bio of Ada Lovelace."] = "Ada wrote the first program.";
  fixtures["generations"]["Tell me a bio of Grace Hopper."] = "Grace invented the compiler.";
  write_file(dir.path / "fixtures.json", fixtures.dump());
  write_file(dir.path / "queries.jsonl",
             R"({"query_id":"q0","query":"Tell me a bio of Ada Lovelace.","dataset_tag":"bios"})"
             "\n"
             R"({"query_id":"q1","query":"Tell me a bio of Grace Hopper.","dataset_tag":"bios"})"
             "\n");
  auto cfg = corpus_config(dir.path);
  Pipeline pipeline(cfg);
  CHECK(pipeline.cmd_generate(dir.path / "queries.jsonl", prompts::Preset::Plain) == 2);

  auto rows = read_jsonl(pipeline.stage_path("generated.jsonl"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("response") == "Ada wrote the first program.");
  CHECK(rows[1].at("response") == "Grace invented the compiler.");
  CHECK(fs::exists(fs::path(cfg.run_dir) / "manifest.json"));
}

TEST_CASE("self-refine issues a draft call and a refinement call") {
  TempDir dir("logu_gen_sr");
  write_file(dir.path / "queries.jsonl",
             R"({"query_id":"q0","query":"Tell me a bio of X.","dataset_tag":"bios"})"
             "\n");
  auto cfg = corpus_config(dir.path);
  cfg.mock_fixtures.clear();  // canned generations are not needed here
  cfg.cache_dir.clear();      // count raw backend traffic
  Pipeline plain(cfg);
  plain.cmd_generate(dir.path / "queries.jsonl", prompts::Preset::Plain);
  CHECK(plain.mock_backend()->call_count() == 1);

  Pipeline refine(cfg);
  refine.cmd_generate(dir.path / "queries.jsonl", prompts::Preset::SelfRefine);
  CHECK(refine.mock_backend()->call_count() == 2);
}

TEST_CASE("build produces every stage artifact with consistent counts") {
  TempDir dir("logu_build");
  write_corpus(dir.path, 4);
  Pipeline pipeline(corpus_config(dir.path));
  auto summary = pipeline.cmd_build();

  CHECK(summary.pairs == 4);
  CHECK(summary.failed_pairs == 0);
  for (const char* name :
       {"claims.jsonl", "partitions.jsonl", "revised_pos.jsonl", "revised_neg.jsonl"})
    CHECK(fs::exists(pipeline.stage_path(name)));

  // 4 queries x 2 variants per operator.
  CHECK(read_jsonl(pipeline.stage_path("revised_pos.jsonl")).size() == 8);
  CHECK(read_jsonl(pipeline.stage_path("revised_neg.jsonl")).size() == 8);
  // 8 positive rows x 5 instruction phrasings (Bios augmentation).
  CHECK(summary.sft_records == 40);
  CHECK(summary.dpo_records + summary.dpo_drops == 3 * 8);
  CHECK(pipeline.check_integrity().empty());
}

TEST_CASE("a second build run skips every stage and calls no backend") {
  TempDir dir("logu_resume");
  write_corpus(dir.path, 3);
  auto cfg = corpus_config(dir.path);
  Pipeline(cfg).cmd_build();

  Pipeline again(cfg);
  auto summary = again.cmd_build();
  CHECK(again.mock_backend()->call_count() == 0);
  CHECK(summary.pairs == 3);
  // Skipped stages report no new records.
  CHECK(summary.sft_records == 0);
  CHECK(summary.dpo_records == 0);
}

TEST_CASE("a config change invalidates recorded stages") {
  TempDir dir("logu_invalidate");
  write_corpus(dir.path, 2);
  auto cfg = corpus_config(dir.path);
  Pipeline(cfg).cmd_build();

  auto changed = cfg;
  changed.master_seed = 99;
  changed.cache_dir = (dir.path / "cache2").string();  // cold cache isolates the effect
  Pipeline rebuilt(changed);
  rebuilt.cmd_build();
  CHECK(rebuilt.mock_backend()->call_count() > 0);
}

TEST_CASE("rebuilding from scratch with the same seed is byte-identical") {
  TempDir a("logu_det_a"), b("logu_det_b");
  write_corpus(a.path, 3);
  write_corpus(b.path, 3);
  Pipeline(corpus_config(a.path)).cmd_build();
  Pipeline(corpus_config(b.path)).cmd_build();
  for (const char* name : {"claims.jsonl", "partitions.jsonl", "revised_pos.jsonl",
                           "revised_neg.jsonl", "sft.json", "dpo.json"}) {
    INFO(name);
    CHECK(file_digest(a.path / "run" / name) == file_digest(b.path / "run" / name));
  }
}

TEST_CASE("integrity check flags dangling references") {
  TempDir dir("logu_integrity");
  write_corpus(dir.path, 2);
  auto cfg = corpus_config(dir.path);
  Pipeline pipeline(cfg);
  pipeline.cmd_build();
  REQUIRE(pipeline.check_integrity().empty());

  // Point a partition at a claim that was never recorded.
  auto rows = read_jsonl(pipeline.stage_path("partitions.jsonl"));
  rows[0]["supported"].push_back("ghost#0");
  write_jsonl(pipeline.stage_path("partitions.jsonl"), rows);
  auto problems = pipeline.check_integrity();
  REQUIRE_FALSE(problems.empty());
  CHECK(problems[0].find("ghost#0") != std::string::npos);
}

TEST_CASE("evaluate writes a report with pooled metrics") {
  TempDir dir("logu_eval");
  write_corpus(dir.path, 4);
  Pipeline pipeline(corpus_config(dir.path));
  auto report = pipeline.cmd_evaluate(pipeline.stage_path("generated.jsonl"),
                                      /*with_categories=*/true);
  // Each response: 3 supported, 2 refuted, 1 uncertain.
  REQUIRE(report.fa.has_value());
  CHECK(*report.fa == Catch::Approx(0.6));
  CHECK(report.incor_mean == Catch::Approx(2.0));
  CHECK(report.unc_mean == Catch::Approx(1.0));
  CHECK(fs::exists(pipeline.stage_path("eval.json")));
  CHECK(fs::exists(pipeline.stage_path("eval.txt")));

  auto j = nlohmann::json::parse(std::ifstream(pipeline.stage_path("eval.json")));
  CHECK(j.at("fa").get<double>() == Catch::Approx(0.6));
  CHECK(j.at("per_response").size() == 4);
  size_t histogram_total = 0;
  for (const auto& [name, count] : j.at("category_histogram").items())
    histogram_total += count.get<size_t>();
  CHECK(histogram_total == 4);  // one uncertain claim per response
}

TEST_CASE("report table renders absent ratios as dashes") {
  EvalReport report;
  report.incor_mean = 1.5;
  auto table = report_to_table(report);
  CHECK(table.find("FA      UA") != std::string::npos);
  CHECK(table.find("--") != std::string::npos);
  report.fa = 0.388;
  report.ua = 0.862;
  auto filled = report_to_table(report);
  CHECK(filled.find("38.8") != std::string::npos);
  CHECK(filled.find("86.2") != std::string::npos);
}

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "logu/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitBackendExhausted = 3;

struct CommonOpts {
  std::string config_file;
  std::string run_dir;
  std::string cache_dir;
  std::string backend;
  std::string mock_fixtures;
  double alpha = -1;
  int variants = -1;
  long long seed = -1;
  int concurrency = -1;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "flat key=value config file");
  cmd->add_option("--run-dir", o.run_dir, "stage artifact directory");
  cmd->add_option("--cache-dir", o.cache_dir, "completion cache directory");
  cmd->add_option("--backend", o.backend, "model backend")
      ->check(CLI::IsMember({"http", "mock"}));
  cmd->add_option("--mock-fixtures", o.mock_fixtures, "fixture table for the mock backend");
  cmd->add_option("--alpha", o.alpha, "target uncertainty ratio in (0,1)");
  cmd->add_option("--variants", o.variants, "revision variants per query, 1-5");
  cmd->add_option("--seed", o.seed, "master RNG seed");
  cmd->add_option("--concurrency", o.concurrency, "max in-flight model calls");
  cmd->add_flag("--strict", o.strict, "nonzero exit when any pair failed");
}

logu::PipelineConfig resolve(const CommonOpts& o) {
  logu::PipelineConfig cfg;
  if (!o.config_file.empty()) cfg = logu::PipelineConfig::from_file(o.config_file);
  if (!o.run_dir.empty()) cfg.run_dir = o.run_dir;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  if (!o.backend.empty()) cfg.backend = o.backend;
  if (!o.mock_fixtures.empty()) cfg.mock_fixtures = o.mock_fixtures;
  if (o.alpha >= 0) cfg.alpha = o.alpha;
  if (o.variants >= 0) cfg.variants_max = o.variants;
  if (o.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(o.seed);
  if (o.concurrency > 0) cfg.concurrency = o.concurrency;
  if (o.strict) cfg.strict = true;
  cfg.validate();
  return cfg;
}

logu::prompts::Preset preset_from(const std::string& s) {
  using logu::prompts::Preset;
  if (s == "plain") return Preset::Plain;
  if (s == "unc-zero") return Preset::UncZero;
  if (s == "unc-few") return Preset::UncFew;
  if (s == "pair-few") return Preset::PairFew;
  return Preset::SelfRefine;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-calibrated long-form dataset pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string queries_file, responses_file, preset = "plain";
  bool with_categories = false;

  auto* gen = app.add_subcommand("generate", "generate responses for a query file");
  add_common(gen, opts);
  gen->add_option("queries", queries_file, "queries JSONL file")->required();
  gen->add_option("--preset", preset, "generation preset")
      ->check(CLI::IsMember({"plain", "unc-zero", "unc-few", "pair-few", "self-refine"}));

  auto* build = app.add_subcommand("build", "run fact-check, revision and dataset stages");
  add_common(build, opts);

  auto* eval = app.add_subcommand("evaluate", "compute FA/UA/#Incor over a responses artifact");
  add_common(eval, opts);
  eval->add_option("responses", responses_file, "responses JSONL file")->required();
  eval->add_flag("--categories", with_categories, "include the uncertainty-category histogram");

  auto* cat = app.add_subcommand("categorize", "label uncertain claims with the 8 categories");
  add_common(cat, opts);
  cat->add_option("responses", responses_file, "responses JSONL file")->required();

  auto* inspect = app.add_subcommand("inspect", "show run manifest and check stage integrity");
  add_common(inspect, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto cfg = resolve(opts);
    logu::Pipeline pipeline(cfg);

    if (gen->parsed()) {
      size_t n = pipeline.cmd_generate(queries_file, preset_from(preset));
      std::cout << "generated " << n << " responses -> "
                << pipeline.stage_path("generated.jsonl").string() << "\n";
    } else if (build->parsed()) {
      auto summary = pipeline.cmd_build();
      std::cout << "pairs: " << summary.pairs << "  sft: " << summary.sft_records
                << "  dpo: " << summary.dpo_records << "  drops: " << summary.dpo_drops
                << "  failed: " << summary.failed_pairs << "\n";
      if (cfg.strict && summary.failed_pairs > 0) return kExitPartialFailure;
    } else if (eval->parsed()) {
      auto report = pipeline.cmd_evaluate(responses_file, with_categories);
      std::cout << logu::report_to_table(report);
      if (cfg.strict && pipeline.failed_pairs() > 0) return kExitPartialFailure;
    } else if (cat->parsed()) {
      auto report = pipeline.cmd_evaluate(responses_file, true);
      for (const auto& [name, count] : report.category_histogram)
        std::cout << name << "\t" << count << "\n";
      if (cfg.strict && pipeline.failed_pairs() > 0) return kExitPartialFailure;
    } else if (inspect->parsed()) {
      logu::RunManifest manifest(cfg.run_dir, cfg.digest());
      std::cout << manifest.stages().dump(2) << "\n";
      auto problems = pipeline.check_integrity();
      for (const auto& p : problems) std::cout << "PROBLEM: " << p << "\n";
      if (!problems.empty()) return kExitUsage;
    }
  } catch (const logu::NetworkExhaustedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackendExhausted;
  } catch (const logu::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const logu::ArtifactError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "logu/assembler.hpp"
#include "logu/config.hpp"
#include "logu/core.hpp"
#include "logu/dataset.hpp"
#include "logu/evaluator.hpp"
#include "logu/fact_pipeline.hpp"
#include "logu/gateway.hpp"
#include "logu/http_backend.hpp"
#include "logu/jsonl.hpp"
#include "logu/reviser.hpp"

namespace logu {

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["fa"] = report.fa ? nlohmann::json(*report.fa) : nlohmann::json(nullptr);
  j["ua"] = report.ua ? nlohmann::json(*report.ua) : nlohmann::json(nullptr);
  j["incor_mean"] = report.incor_mean;
  j["cor_mean"] = report.cor_mean;
  j["unc_mean"] = report.unc_mean;
  j["token_mean"] = report.token_mean;
  j["vague_claims"] = report.vague_claims;
  j["unresolved_probes"] = report.unresolved_probes;
  j["category_histogram"] = report.category_histogram;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_response)
    rows.push_back({{"query_id", r.query_id},
                    {"supported", r.supported},
                    {"refuted", r.refuted},
                    {"uncertain", r.uncertain},
                    {"tokens", r.tokens}});
  j["per_response"] = rows;
  return j;
}

inline std::string report_to_table(const EvalReport& report) {
  char buf[256];
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("  --");
    char b[32];
    std::snprintf(b, sizeof b, "%4.1f", *v * 100.0);
    return std::string(b);
  };
  std::string out;
  out += "FA      UA      #Incor  #Cor    #Unc    #Token\n";
  std::snprintf(buf, sizeof buf, "%-7s %-7s %-7.3g %-7.3g %-7.3g %-7.4g\n",
                pct(report.fa).c_str(), pct(report.ua).c_str(), report.incor_mean,
                report.cor_mean, report.unc_mean, report.token_mean);
  out += buf;
  if (!report.category_histogram.empty()) {
    out += "\nUncertainty categories:\n";
    for (const auto& [name, count] : report.category_histogram) {
      std::snprintf(buf, sizeof buf, "  %-28s %zu\n", name.c_str(), count);
      out += buf;
    }
  }
  return out;
}

// Stage bookkeeping: one manifest per run directory. Stages are skipped on
// rerun when the recorded digest still matches both the artifact on disk and
// the current config.
class RunManifest {
 public:
  RunManifest(std::filesystem::path run_dir, std::string config_digest)
      : path_(run_dir / "manifest.json"), config_digest_(std::move(config_digest)) {
    std::ifstream in(path_);
    if (in) {
      nlohmann::json j;
      in >> j;
      if (j.value("config_digest", "") == config_digest_) stages_ = j.value("stages", nlohmann::json::object());
      // A config change leaves stages_ empty and so invalidates every stage.
    }
  }

  bool stage_current(const std::string& name, const std::filesystem::path& artifact) const {
    if (!stages_.contains(name)) return false;
    if (!std::filesystem::exists(artifact)) return false;
    return stages_.at(name).value("digest", "") == file_digest(artifact);
  }

  void record(const std::string& name, const std::filesystem::path& artifact, size_t count) {
    stages_[name] = {{"path", artifact.string()},
                     {"record_count", count},
                     {"digest", file_digest(artifact)}};
    save();
  }

  const nlohmann::json& stages() const { return stages_; }

 private:
  void save() const {
    std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_);
    out << nlohmann::json{{"config_digest", config_digest_}, {"stages", stages_}}.dump(2) << '\n';
  }

  std::filesystem::path path_;
  std::string config_digest_;
  nlohmann::json stages_ = nlohmann::json::object();
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.backend == "mock") {
      auto mock = std::make_shared<MockBackend>();
      if (!cfg_.mock_fixtures.empty())
        mock->set_fixtures(MockFixtures::from_file(cfg_.mock_fixtures));
      mock_ = mock;
      backend_ = mock;
    } else {
      backend_ = std::make_shared<HttpBackend>();
    }
    gateway_ = std::make_shared<Gateway>(backend_, CompletionCache(cfg_.cache_dir), RetryPolicy{},
                                         cfg_.concurrency);
    if (cfg_.retrieval == "http") {
      retrieval_ = std::make_shared<HttpSearchRetrieval>(cfg_.retrieval_url,
                                                         cfg_.retrieval_key_env);
    } else if (!cfg_.retrieval_dir.empty()) {
      retrieval_ = std::make_shared<FixtureRetrieval>(cfg_.retrieval_dir);
    } else {
      retrieval_ = std::make_shared<FixtureRetrieval>(
          std::map<std::string, std::vector<EvidencePassage>>{});
    }
    auto templates = cfg_.templates_file.empty()
                         ? UncertaintyTemplateSet::defaults()
                         : UncertaintyTemplateSet::from_file(cfg_.templates_file);
    facts_ = std::make_unique<FactPipeline>(gateway_, cfg_.auxiliary_endpoint(), retrieval_,
                                            cfg_.evidence_k);
    reviser_ = std::make_unique<Reviser>(gateway_, cfg_.auxiliary_endpoint(), templates);
    assembler_ = std::make_unique<Assembler>(gateway_, cfg_.auxiliary_endpoint());
    evaluator_ = std::make_unique<Evaluator>(gateway_, cfg_.auxiliary_endpoint(),
                                             cfg_.target_endpoint());
  }

  const PipelineConfig& config() const { return cfg_; }
  std::shared_ptr<MockBackend> mock_backend() const { return mock_; }
  Gateway& gateway() { return *gateway_; }

  std::filesystem::path stage_path(const std::string& name) const {
    return std::filesystem::path(cfg_.run_dir) / name;
  }

  // -------------------------------------------------------------------------
  // generate: one response per query under the chosen preset.

  size_t cmd_generate(const std::filesystem::path& queries_file, prompts::Preset preset) {
    auto queries = read_jsonl(queries_file);
    std::vector<nlohmann::json> out;
    std::vector<nlohmann::json> failures;
    for (const auto& q : queries) {
      const std::string query_id = q.at("query_id").get<std::string>();
      const std::string query = q.at("query").get<std::string>();
      const DatasetTag tag = dataset_tag_from(q.value("dataset_tag", "other"));
      try {
        out.push_back({{"query_id", query_id},
                       {"query", query},
                       {"response", generate_one(query, tag, preset)},
                       {"dataset_tag", to_string(tag)}});
      } catch (const std::exception& e) {
        failures.push_back({{"query_id", query_id}, {"stage", "generate"}, {"reason", e.what()}});
      }
    }
    write_jsonl(stage_path("generated.jsonl"), out);
    append_failures(failures);
    RunManifest(cfg_.run_dir, cfg_.digest()).record("generated", stage_path("generated.jsonl"), out.size());
    failed_pairs_ += failures.size();
    return out.size();
  }

  std::string generate_one(const std::string& query, DatasetTag tag, prompts::Preset preset) {
    using namespace prompts;
    const auto cfg = SamplingConfig::generation();
    const auto target = cfg_.target_endpoint();
    std::string_view zero = tag == DatasetTag::Bios       ? kZeroShotBios
                            : tag == DatasetTag::LongFact ? kZeroShotLongFact
                                                          : kZeroShotWildHallu;
    switch (preset) {
      case Preset::Plain:
        return gateway_->complete(target, query, cfg);
      case Preset::UncZero:
        return gateway_->complete(target, std::string(zero) + "\n\n" + query, cfg);
      case Preset::UncFew:
        return gateway_->complete(
            target, std::string(zero) + "\n\n" + std::string(kFewShotExamples) + "\n" + query, cfg);
      case Preset::PairFew:
        return gateway_->complete(
            target, std::string(zero) + "\n\n" + std::string(kPairFewExamples) + "\n" + query, cfg);
      case Preset::SelfRefine: {
        const std::string draft = gateway_->complete(target, query, cfg);
        return gateway_->complete(target, self_refine_prompt(query, draft), cfg);
      }
    }
    throw std::logic_error("unreachable preset");
  }

  // -------------------------------------------------------------------------
  // build: partition -> revise (both operators) -> assemble -> sft + dpo.

  struct BuildSummary {
    size_t pairs = 0;
    size_t failed_pairs = 0;
    size_t sft_records = 0;
    size_t dpo_records = 0;
    size_t dpo_drops = 0;
  };

  BuildSummary cmd_build() {
    RunManifest manifest(cfg_.run_dir, cfg_.digest());
    BuildSummary summary;
    auto pairs = load_pairs(stage_path("generated.jsonl"));
    summary.pairs = pairs.size();

    // Stage: claims + partitions (one fact-check pass feeds both artifacts).
    const auto claims_path = stage_path("claims.jsonl");
    const auto partitions_path = stage_path("partitions.jsonl");
    if (!manifest.stage_current("claims", claims_path) ||
        !manifest.stage_current("partitions", partitions_path)) {
      std::vector<nlohmann::json> claim_rows, partition_rows, failures;
      for (const auto& pair : pairs) {
        try {
          auto outcome = facts_->partition(pair);
          for (const auto& c : outcome.partition.all_in_order())
            claim_rows.push_back({{"claim_id", c.claim_id},
                                  {"query_id", pair.query_id},
                                  {"text", c.text},
                                  {"verdict", to_string(c.verdict)}});
          nlohmann::json row{{"query_id", pair.query_id}};
          auto ids = [](const std::vector<AtomicClaim>& cs) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& c : cs) a.push_back(c.claim_id);
            return a;
          };
          row["supported"] = ids(outcome.partition.supported);
          row["refuted"] = ids(outcome.partition.refuted);
          row["uncertain"] = ids(outcome.partition.uncertain);
          nlohmann::json failed = nlohmann::json::array();
          for (const auto& f : outcome.unverified) {
            failed.push_back({{"claim_id", f.claim.claim_id}, {"reason", f.reason}});
            claim_rows.push_back({{"claim_id", f.claim.claim_id},
                                  {"query_id", pair.query_id},
                                  {"text", f.claim.text},
                                  {"verdict", "unverified"}});
          }
          row["failed"] = failed;
          partition_rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          failures.push_back(
              {{"query_id", pair.query_id}, {"stage", "partition"}, {"reason", e.what()}});
        }
      }
      write_jsonl(claims_path, claim_rows);
      write_jsonl(partitions_path, partition_rows);
      append_failures(failures);
      summary.failed_pairs += failures.size();
      manifest.record("claims", claims_path, claim_rows.size());
      manifest.record("partitions", partitions_path, partition_rows.size());
    }

    // Stage: revision + assembly, one artifact per operator.
    auto partitions = load_partitions(claims_path, partitions_path);
    for (RevisionOp op : {RevisionOp::Pos, RevisionOp::Neg}) {
      const std::string stage = op == RevisionOp::Pos ? "revised_pos" : "revised_neg";
      const auto path = stage_path(stage + ".jsonl");
      if (manifest.stage_current(stage, path)) continue;
      std::vector<nlohmann::json> rows, failures;
      for (const auto& part : partitions) {
        for (int v = 0; v < cfg_.variants_max; ++v) {
          try {
            auto plan = Reviser::plan(part, op, cfg_.alpha, v, cfg_.master_seed);
            auto revised = assembler_->assemble(reviser_->apply(part, plan));
            nlohmann::json kept = nlohmann::json::array();
            for (const auto& c : revised.kept_claims) kept.push_back(c.claim_id);
            nlohmann::json rev = nlohmann::json::array();
            for (const auto& r : revised.revised_claims)
              rev.push_back({{"claim_id", r.claim_id}, {"text", r.text}});
            rows.push_back({{"query_id", part.query_id},
                            {"operator", to_string(op)},
                            {"variant", v},
                            {"kept", kept},
                            {"revised", rev},
                            {"assembled", revised.assembled_text}});
          } catch (const std::exception& e) {
            failures.push_back(
                {{"query_id", part.query_id}, {"stage", stage}, {"reason", e.what()}});
          }
        }
      }
      write_jsonl(path, rows);
      append_failures(failures);
      summary.failed_pairs += failures.size();
      manifest.record(stage, path, rows.size());
    }

    // Stage: training records.
    auto pair_by_id = index_pairs(pairs);
    const auto sft_path = stage_path("sft.json");
    const auto dpo_path = stage_path("dpo.json");
    auto revised_pos = read_jsonl(stage_path("revised_pos.jsonl"));
    auto revised_neg = read_jsonl(stage_path("revised_neg.jsonl"));

    if (!manifest.stage_current("sft", sft_path)) {
      InstructionAugmenter augmenter(cfg_.augment_instructions);
      std::vector<nlohmann::json> records;
      for (const auto& row : revised_pos) {
        const auto& pair = pair_by_id.at(row.at("query_id").get<std::string>());
        RevisedResponse rp;
        rp.assembled_text = row.at("assembled").get<std::string>();
        for (const auto& rec : build_sft(pair.query, rp, augmenter, pair.dataset_tag))
          records.push_back(record_to_json(rec));
      }
      write_json_array(sft_path, records);
      manifest.record("sft", sft_path, records.size());
      summary.sft_records = records.size();
    }

    if (!manifest.stage_current("dpo", dpo_path)) {
      std::map<std::pair<std::string, int>, std::string> neg_by_key;
      for (const auto& row : revised_neg)
        neg_by_key[{row.at("query_id").get<std::string>(), row.at("variant").get<int>()}] =
            row.at("assembled").get<std::string>();
      std::vector<nlohmann::json> records, drops;
      for (const auto& row : revised_pos) {
        const std::string qid = row.at("query_id").get<std::string>();
        const int variant = row.at("variant").get<int>();
        auto it = neg_by_key.find({qid, variant});
        if (it == neg_by_key.end()) continue;
        const auto& pair = pair_by_id.at(qid);
        PreferenceTriplet t{qid, pair.query, row.at("assembled").get<std::string>(), pair.response,
                            it->second, variant};
        auto built = build_dpo(t);
        for (const auto& rec : built.records) records.push_back(record_to_json(rec));
        for (const auto& d : built.drops)
          drops.push_back({{"query_id", d.query_id}, {"pair", d.pair}, {"reason", d.reason}});
      }
      write_json_array(dpo_path, records);
      write_jsonl(stage_path("dpo_drops.jsonl"), drops);
      manifest.record("dpo", dpo_path, records.size());
      summary.dpo_records = records.size();
      summary.dpo_drops = drops.size();
    }
    summary.failed_pairs += failed_pairs_;
    return summary;
  }

  // -------------------------------------------------------------------------
  // evaluate: partition + short-form probing + report.

  EvalReport cmd_evaluate(const std::filesystem::path& responses_file, bool with_categories) {
    auto pairs = load_pairs(responses_file);
    if (pairs.empty()) throw DegenerateInputError("empty corpus: nothing to report");
    std::vector<ResponseEval> corpus;
    std::map<std::string, size_t> histogram;
    std::vector<nlohmann::json> failures;
    for (const auto& pair : pairs) {
      try {
        ResponseEval ev;
        ev.pair = pair;
        ev.partition = facts_->partition(pair).partition;
        auto [specific, vague] = evaluator_->filter_vague(ev.partition.uncertain);
        for (const auto& c : vague) {
          ProbeRecord rec;
          rec.claim_id = c.claim_id;
          rec.vague = true;
          ev.probes.push_back(rec);
        }
        for (const auto& c : specific) {
          auto question = evaluator_->to_question(c);
          if (!question) {
            ProbeRecord rec;
            rec.claim_id = c.claim_id;
            rec.vague = true;
            ev.probes.push_back(rec);
            continue;
          }
          ev.probes.push_back(evaluator_->probe(c.claim_id, *question, c.text));
        }
        if (with_categories)
          for (const auto& c : ev.partition.uncertain)
            ++histogram[evaluator_->categorize(c).name()];
        corpus.push_back(std::move(ev));
      } catch (const std::exception& e) {
        failures.push_back(
            {{"query_id", pair.query_id}, {"stage", "evaluate"}, {"reason", e.what()}});
      }
    }
    append_failures(failures);
    failed_pairs_ += failures.size();
    auto report = make_report(corpus, histogram);
    std::filesystem::create_directories(cfg_.run_dir);
    {
      std::ofstream out(stage_path("eval.json"));
      out << report_to_json(report).dump(2) << '\n';
    }
    {
      std::ofstream out(stage_path("eval.txt"));
      out << report_to_table(report);
    }
    RunManifest(cfg_.run_dir, cfg_.digest()).record("eval", stage_path("eval.json"), corpus.size());
    return report;
  }

  // Cross-stage referential integrity: every id referenced downstream exists
  // upstream. Returns human-readable problems, empty when clean.
  std::vector<std::string> check_integrity() const {
    std::vector<std::string> problems;
    std::set<std::string> query_ids, claim_ids;
    try {
      for (const auto& row : read_jsonl(stage_path("generated.jsonl")))
        query_ids.insert(row.at("query_id").get<std::string>());
      for (const auto& row : read_jsonl(stage_path("claims.jsonl"))) {
        claim_ids.insert(row.at("claim_id").get<std::string>());
        if (!query_ids.count(row.at("query_id").get<std::string>()))
          problems.push_back("claims: unknown query_id " + row.at("query_id").get<std::string>());
      }
      for (const auto& row : read_jsonl(stage_path("partitions.jsonl")))
        for (const char* bucket : {"supported", "refuted", "uncertain"})
          for (const auto& id : row.at(bucket))
            if (!claim_ids.count(id.get<std::string>()))
              problems.push_back("partitions: unknown claim_id " + id.get<std::string>());
      for (const char* stage : {"revised_pos.jsonl", "revised_neg.jsonl"}) {
        std::error_code ec;
        if (!std::filesystem::exists(stage_path(stage), ec)) continue;
        for (const auto& row : read_jsonl(stage_path(stage))) {
          if (!query_ids.count(row.at("query_id").get<std::string>()))
            problems.push_back(std::string(stage) + ": unknown query_id " +
                               row.at("query_id").get<std::string>());
          for (const auto& id : row.at("kept"))
            if (!claim_ids.count(id.get<std::string>()))
              problems.push_back(std::string(stage) + ": unknown claim_id " +
                                 id.get<std::string>());
        }
      }
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
    return problems;
  }

  size_t failed_pairs() const { return failed_pairs_; }

 private:
  static std::vector<QueryResponsePair> load_pairs(const std::filesystem::path& path) {
    std::vector<QueryResponsePair> pairs;
    for (const auto& row : read_jsonl(path)) {
      QueryResponsePair p;
      p.query_id = row.at("query_id").get<std::string>();
      p.query = row.at("query").get<std::string>();
      p.response = row.at("response").get<std::string>();
      p.dataset_tag = dataset_tag_from(row.value("dataset_tag", "other"));
      pairs.push_back(std::move(p));
    }
    return pairs;
  }

  static std::map<std::string, QueryResponsePair> index_pairs(
      const std::vector<QueryResponsePair>& pairs) {
    std::map<std::string, QueryResponsePair> by_id;
    for (const auto& p : pairs) by_id[p.query_id] = p;
    return by_id;
  }

  // Rebuild in-memory partitions from the claims + partitions artifacts.
  static std::vector<ClaimPartition> load_partitions(const std::filesystem::path& claims_path,
                                                     const std::filesystem::path& partitions_path) {
    std::map<std::string, AtomicClaim> claims;
    for (const auto& row : read_jsonl(claims_path)) {
      AtomicClaim c;
      c.claim_id = row.at("claim_id").get<std::string>();
      c.text = row.at("text").get<std::string>();
      c.verdict = verdict_from(row.at("verdict").get<std::string>());
      claims[c.claim_id] = std::move(c);
    }
    std::vector<ClaimPartition> out;
    for (const auto& row : read_jsonl(partitions_path)) {
      ClaimPartition part;
      part.query_id = row.at("query_id").get<std::string>();
      auto fill = [&](const char* bucket, std::vector<AtomicClaim>& dst) {
        for (const auto& id : row.at(bucket)) dst.push_back(claims.at(id.get<std::string>()));
      };
      fill("supported", part.supported);
      fill("refuted", part.refuted);
      fill("uncertain", part.uncertain);
      part.check_invariants();
      out.push_back(std::move(part));
    }
    return out;
  }

  void append_failures(const std::vector<nlohmann::json>& failures) {
    if (failures.empty()) return;
    std::filesystem::create_directories(cfg_.run_dir);
    std::ofstream out(stage_path("failures.jsonl"), std::ios::app);
    for (const auto& f : failures) out << f.dump() << '\n';
  }

  PipelineConfig cfg_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<MockBackend> mock_;
  std::shared_ptr<Gateway> gateway_;
  std::shared_ptr<RetrievalBackend> retrieval_;
  std::unique_ptr<FactPipeline> facts_;
  std::unique_ptr<Reviser> reviser_;
  std::unique_ptr<Assembler> assembler_;
  std::unique_ptr<Evaluator> evaluator_;
  size_t failed_pairs_ = 0;
};

}  // namespace logu

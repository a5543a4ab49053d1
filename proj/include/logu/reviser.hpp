#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "logu/core.hpp"
#include "logu/gateway.hpp"
#include "logu/prompts.hpp"

namespace logu {

struct RewriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UncertaintyTemplateSet {
  std::vector<std::string> patterns;

  static UncertaintyTemplateSet defaults() {
    return {prompts::default_uncertainty_templates()};
  }

  // One template per line; blank lines and #-comments skipped.
  static UncertaintyTemplateSet from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file: " + path.string());
    UncertaintyTemplateSet set;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      set.patterns.push_back(line);
    }
    if (set.patterns.empty())
      throw std::runtime_error("template file is empty: " + path.string());
    return set;
  }
};

inline constexpr int kMaxVariants = 5;  // per (query, operator)

// Deterministic per-plan seed from run seed, query, operator and variant.
inline std::uint64_t derive_plan_seed(std::uint64_t master_seed, const std::string& query_id,
                                      RevisionOp op, int variant_index) {
  std::uint64_t h = splitmix64(master_seed ^ fnv1a64(query_id));
  h = splitmix64(h ^ (op == RevisionOp::Pos ? 0x706f73ULL : 0x6e6567ULL));
  return splitmix64(h ^ static_cast<std::uint64_t>(variant_index));
}

class Reviser {
 public:
  Reviser(std::shared_ptr<Gateway> gateway, ModelEndpoint auxiliary,
          UncertaintyTemplateSet templates = UncertaintyTemplateSet::defaults())
      : gateway_(std::move(gateway)),
        auxiliary_(std::move(auxiliary)),
        templates_(std::move(templates)) {}

  // Draw the plan's claim subset uniformly without replacement from the
  // operator's eligible pool. Pure; identical inputs give identical plans.
  static RevisionPlan plan(const ClaimPartition& partition, RevisionOp op, double alpha,
                           int variant_index, std::uint64_t master_seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvariantError("alpha must lie in (0,1)");
    if (variant_index < 0 || variant_index >= kMaxVariants)
      throw InvariantError("variant_index out of [0,5)");
    RevisionPlan p;
    p.op = op;
    p.alpha = alpha;
    p.variant_index = variant_index;
    p.rng_seed = derive_plan_seed(master_seed, partition.query_id, op, variant_index);

    const auto& pool = (op == RevisionOp::Pos) ? partition.refuted : partition.supported;
    const size_t count =
        downsample_count(op, alpha, partition.supported.size(), partition.refuted.size());

    // Partial Fisher-Yates over pool indices.
    std::vector<size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    SplitMixRng rng(p.rng_seed);
    for (size_t i = 0; i < count; ++i) {
      const size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      p.selected_ids.insert(pool[idx[i]].claim_id);
    }
    return p;
  }

  // Rewrite one claim into an uncertainty expression about its topic.
  std::string rewrite(const AtomicClaim& claim) {
    return rewrite_all({claim.text}).front();
  }

  // Combine kept and rewritten claims per the plan's operator. The assembled
  // text stays empty; the assembler fills it.
  RevisedResponse apply(const ClaimPartition& partition, const RevisionPlan& plan) {
    validate(partition, plan);
    RevisedResponse out;
    out.parent_query_id = partition.query_id;
    out.op = plan.op;
    out.variant_index = plan.variant_index;

    const auto& revisable = (plan.op == RevisionOp::Pos) ? partition.refuted : partition.supported;
    const auto& untouched = (plan.op == RevisionOp::Pos) ? partition.supported : partition.refuted;

    out.kept_claims = untouched;
    std::vector<const AtomicClaim*> selected;
    for (const auto& c : revisable) {
      if (plan.selected_ids.count(c.claim_id))
        selected.push_back(&c);
      else
        out.kept_claims.push_back(c);
    }
    if (!selected.empty()) {
      std::vector<std::string> texts;
      texts.reserve(selected.size());
      for (const auto* c : selected) texts.push_back(c->text);
      auto rewritten = rewrite_all(texts);
      for (size_t i = 0; i < selected.size(); ++i)
        out.revised_claims.push_back({selected[i]->claim_id, rewritten[i]});
    }
    return out;
  }

  const UncertaintyTemplateSet& templates() const { return templates_; }

 private:
  static void validate(const ClaimPartition& partition, const RevisionPlan& plan) {
    const auto& pool = (plan.op == RevisionOp::Pos) ? partition.refuted : partition.supported;
    std::set<std::string> pool_ids;
    for (const auto& c : pool) pool_ids.insert(c.claim_id);
    for (const auto& id : plan.selected_ids)
      if (!pool_ids.count(id))
        throw InvariantError("plan selects claim " + id + " outside the eligible pool");
  }

  // One prompt carries all selected facts, labeled ##uncertain##; the model
  // picks its phrasing from the full template list.
  std::vector<std::string> rewrite_all(const std::vector<std::string>& texts) {
    std::vector<std::pair<std::string, bool>> labeled;
    labeled.reserve(texts.size());
    for (const auto& t : texts) labeled.emplace_back(t, true);
    const std::string prompt = prompts::revision_prompt(templates_.patterns, labeled);
    for (std::uint64_t nonce = 0; nonce < 2; ++nonce) {
      const std::string raw =
          gateway_->complete(auxiliary_, prompt, SamplingConfig::pipeline(), nonce);
      auto lines = parse_lines(raw);
      if (lines.size() != texts.size()) continue;
      bool all_marked = true;
      for (const auto& l : lines)
        if (!prompts::is_uncertainty_expression(l)) all_marked = false;
      if (all_marked) return lines;
    }
    throw RewriteError("rewrite produced output without uncertainty markers");
  }

  static std::vector<std::string> parse_lines(const std::string& raw) {
    std::vector<std::string> out;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.rfind("###", 0) == 0) out.push_back(trim(line.substr(3)));
    }
    return out;
  }

  std::shared_ptr<Gateway> gateway_;
  ModelEndpoint auxiliary_;
  UncertaintyTemplateSet templates_;
};

}  // namespace logu

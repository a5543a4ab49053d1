#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "logu/core.hpp"
#include "logu/gateway.hpp"
#include "logu/prompts.hpp"

namespace logu {

struct ProbeRecord {
  std::string claim_id;
  std::string question;
  std::string gold_fact;
  std::string model_answer;
  bool correct = false;
  bool vague = false;
  bool resolved = true;  // false when the answer judge could not be parsed
};

struct UncertaintyCategory {
  int label = 7;  // 0..7, 7 = Others

  std::string name() const { return std::string(prompts::kCategoryNames[label]); }
};

inline size_t whitespace_token_count(const std::string& text) {
  std::istringstream in(text);
  size_t n = 0;
  std::string tok;
  while (in >> tok) ++n;
  return n;
}

struct ResponseEval {
  QueryResponsePair pair;
  ClaimPartition partition;
  std::vector<ProbeRecord> probes;
};

class Evaluator {
 public:
  Evaluator(std::shared_ptr<Gateway> gateway, ModelEndpoint auxiliary, ModelEndpoint target)
      : gateway_(std::move(gateway)),
        auxiliary_(std::move(auxiliary)),
        target_(std::move(target)) {}

  // Turn an uncertainty expression into a pointed short-form question;
  // nullopt when the claim is too broad to target one fact slot.
  std::optional<std::string> to_question(const AtomicClaim& claim) {
    const std::string raw = gateway_->complete(
        auxiliary_, prompts::to_question_prompt(claim.text), SamplingConfig::pipeline());
    const std::string answer = trim(raw);
    if (answer.empty() || to_lower(answer).rfind("vague", 0) == 0) return std::nullopt;
    return answer;
  }

  // Ask the target model the question (greedy, so correctness judgments are
  // reproducible) and judge its answer against the gold fact semantically.
  ProbeRecord probe(const std::string& claim_id, const std::string& question,
                    const std::string& gold_fact) {
    ProbeRecord rec;
    rec.claim_id = claim_id;
    rec.question = question;
    rec.gold_fact = gold_fact;
    rec.model_answer = trim(gateway_->complete(target_, question, SamplingConfig::pipeline()));
    for (std::uint64_t nonce = 0; nonce < 2; ++nonce) {
      const std::string verdict = trim(gateway_->complete(
          auxiliary_, prompts::answer_judge_prompt(question, gold_fact, rec.model_answer),
          SamplingConfig::pipeline(), nonce));
      const std::string lower = to_lower(verdict);
      const bool cor = lower.find("incorrect") == std::string::npos &&
                       lower.find("correct") != std::string::npos;
      const bool incor = lower.find("incorrect") != std::string::npos;
      if (cor || incor) {
        rec.correct = cor;
        return rec;
      }
    }
    rec.resolved = false;
    return rec;
  }

  // Split uncertain claims into specific (names one concrete fact slot) and
  // vague (scopes a whole topic area).
  std::pair<std::vector<AtomicClaim>, std::vector<AtomicClaim>> filter_vague(
      const std::vector<AtomicClaim>& claims) {
    std::vector<AtomicClaim> specific, vague;
    for (const auto& c : claims) {
      const std::string raw = trim(gateway_->complete(
          auxiliary_, prompts::vague_prompt(c.text), SamplingConfig::pipeline()));
      if (to_lower(raw).rfind("vague", 0) == 0)
        vague.push_back(c);
      else
        specific.push_back(c);
    }
    return {std::move(specific), std::move(vague)};
  }

  UncertaintyCategory categorize(const AtomicClaim& claim) {
    for (std::uint64_t nonce = 0; nonce < 2; ++nonce) {
      const std::string raw = trim(gateway_->complete(
          auxiliary_, prompts::categorize_prompt(claim.text), SamplingConfig::pipeline(), nonce));
      if (!raw.empty() && raw[0] >= '0' && raw[0] <= '7') return {raw[0] - '0'};
    }
    return {7};
  }

 private:
  std::shared_ptr<Gateway> gateway_;
  ModelEndpoint auxiliary_;
  ModelEndpoint target_;
};

// Corpus-level metrics. FA and UA are micro-averages over pooled counts;
// count means are per-response averages. Vague and unresolved probes stay
// out of both sides of the UA ratio.
inline EvalReport make_report(const std::vector<ResponseEval>& corpus,
                              std::map<std::string, size_t> category_histogram = {},
                              const std::function<size_t(const std::string&)>& tokenizer =
                                  whitespace_token_count) {
  if (corpus.empty()) throw DegenerateInputError("empty corpus: nothing to report");
  EvalReport report;
  report.category_histogram = std::move(category_histogram);

  size_t pooled_supported = 0, pooled_refuted = 0;
  size_t ua_denom = 0, ua_num = 0;
  size_t total_tokens = 0, total_uncertain = 0;

  for (const auto& r : corpus) {
    ResponseCounts counts;
    counts.query_id = r.pair.query_id;
    counts.supported = r.partition.supported.size();
    counts.refuted = r.partition.refuted.size();
    counts.uncertain = r.partition.uncertain.size();
    counts.tokens = tokenizer(r.pair.response);
    pooled_supported += counts.supported;
    pooled_refuted += counts.refuted;
    total_uncertain += counts.uncertain;
    total_tokens += counts.tokens;
    for (const auto& p : r.probes) {
      if (p.vague) {
        ++report.vague_claims;
        continue;
      }
      if (!p.resolved) {
        ++report.unresolved_probes;
        continue;
      }
      ++ua_denom;
      if (!p.correct) ++ua_num;  // a failed short-form answer marks true uncertainty
    }
    report.per_response.push_back(counts);
  }

  const double n = static_cast<double>(corpus.size());
  if (pooled_supported + pooled_refuted > 0)
    report.fa = compute_fa(static_cast<double>(pooled_supported),
                           static_cast<double>(pooled_refuted));
  report.ua = compute_ua(ua_num, ua_denom);
  report.incor_mean = static_cast<double>(pooled_refuted) / n;
  report.cor_mean = static_cast<double>(pooled_supported) / n;
  report.unc_mean = static_cast<double>(total_uncertain) / n;
  report.token_mean = static_cast<double>(total_tokens) / n;
  return report;
}

}  // namespace logu

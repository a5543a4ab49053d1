#pragma once

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "logu/core.hpp"
#include "logu/gateway.hpp"
#include "logu/prompts.hpp"
#include "logu/retrieval.hpp"

namespace logu {

struct JudgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerdictJudgment {
  std::string claim_id;
  Verdict label = Verdict::Unverified;
  std::string rationale;
};

// Claims that could not be verified in this run, kept out of the partition
// and flagged for rerun.
struct FailedClaim {
  AtomicClaim claim;
  std::string reason;
};

struct PartitionOutcome {
  ClaimPartition partition;
  std::vector<FailedClaim> unverified;
};

class FactPipeline {
 public:
  FactPipeline(std::shared_ptr<Gateway> gateway, ModelEndpoint auxiliary,
               std::shared_ptr<RetrievalBackend> retrieval, int evidence_k = 5)
      : gateway_(std::move(gateway)),
        auxiliary_(std::move(auxiliary)),
        retrieval_(std::move(retrieval)),
        evidence_k_(evidence_k) {}

  // Split a response into ordered atomic claims, all Unverified.
  std::vector<AtomicClaim> decompose(const std::string& query_id, const std::string& response) {
    if (trim(response).empty())
      throw DegenerateInputError("empty response for query " + query_id);
    const std::string raw = gateway_->complete(auxiliary_, prompts::decompose_prompt(response),
                                               SamplingConfig::pipeline());
    std::vector<AtomicClaim> claims;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.rfind("- ", 0) == 0) line = trim(line.substr(2));
      if (line.empty()) continue;
      AtomicClaim c;
      c.claim_id = AtomicClaim::make_id(query_id, claims.size());
      c.text = line;
      claims.push_back(std::move(c));
    }
    if (claims.empty())
      throw DegenerateInputError("decomposition produced no claims for query " + query_id);
    return claims;
  }

  std::vector<EvidencePassage> retrieve(const AtomicClaim& claim, int k) {
    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        return retrieval_->retrieve(claim.text, k);
      } catch (const RetrievalError& e) {
        last_error = e.what();
      }
    }
    throw RetrievalError(last_error);
  }

  VerdictJudgment judge(const AtomicClaim& claim, const std::vector<EvidencePassage>& evidence) {
    if (claim.verdict != Verdict::Unverified)
      throw InvariantError("judge called on already-verdicted claim " + claim.claim_id);
    // Uncertainty expressions are routed lexically before any entailment call.
    if (prompts::is_uncertainty_expression(claim.text))
      return {claim.claim_id, Verdict::Uncertain, "lexical uncertainty marker"};
    std::vector<std::string> snippets;
    snippets.reserve(evidence.size());
    for (const auto& e : evidence) snippets.push_back(e.title + ": " + e.snippet);
    const std::string prompt = prompts::judge_prompt(claim.text, snippets);
    for (std::uint64_t nonce = 0; nonce < 2; ++nonce) {
      const std::string raw =
          gateway_->complete(auxiliary_, prompt, SamplingConfig::pipeline(), nonce);
      if (auto label = parse_label(raw)) return {claim.claim_id, *label, trim(raw)};
    }
    throw JudgeError("unparseable judge output for claim " + claim.claim_id);
  }

  // decompose -> retrieve -> judge for one query-response pair. Claims whose
  // retrieval keeps failing land in the unverified list; a judge hard error
  // aborts the pair.
  PartitionOutcome partition(const QueryResponsePair& pair) {
    PartitionOutcome out;
    out.partition.query_id = pair.query_id;
    auto claims = decompose(pair.query_id, pair.response);

    struct Pending {
      size_t index;
      std::vector<EvidencePassage> evidence;
    };
    std::vector<Pending> pending;
    for (size_t i = 0; i < claims.size(); ++i) {
      auto& c = claims[i];
      if (prompts::is_uncertainty_expression(c.text)) {
        c.verdict = Verdict::Uncertain;
        out.partition.uncertain.push_back(c);
        continue;
      }
      try {
        pending.push_back({i, retrieve(c, evidence_k_)});
      } catch (const RetrievalError& e) {
        out.unverified.push_back({c, std::string("retrieval failed: ") + e.what()});
      }
    }

    // Entailment judging fans out through the gateway's bounded batch.
    std::vector<Gateway::Request> requests;
    requests.reserve(pending.size());
    for (const auto& p : pending) {
      std::vector<std::string> snippets;
      for (const auto& e : p.evidence) snippets.push_back(e.title + ": " + e.snippet);
      requests.push_back(
          {auxiliary_, prompts::judge_prompt(claims[p.index].text, snippets),
           SamplingConfig::pipeline(), 0});
    }
    auto slots = gateway_->complete_batch(requests);

    for (size_t j = 0; j < pending.size(); ++j) {
      auto& c = claims[pending[j].index];
      for (const auto& e : pending[j].evidence)
        c.evidence.push_back({to_string(e.source), e.title, e.rank});
      std::optional<Verdict> label;
      if (slots[j].ok) label = parse_label(slots[j].text);
      if (!label) {
        // One re-ask under a fresh nonce, then hard error.
        const std::string raw = gateway_->complete(auxiliary_, requests[j].prompt,
                                                   SamplingConfig::pipeline(), 1);
        label = parse_label(raw);
        if (!label)
          throw JudgeError("unparseable judge output for claim " + c.claim_id);
      }
      c.verdict = *label;
      if (*label == Verdict::Supported)
        out.partition.supported.push_back(c);
      else if (*label == Verdict::Refuted)
        out.partition.refuted.push_back(c);
      else
        out.partition.uncertain.push_back(c);
    }
    out.partition.check_invariants();
    return out;
  }

 private:
  static std::optional<Verdict> parse_label(const std::string& raw) {
    const std::string lower = to_lower(raw);
    const bool sup = lower.find("supported") != std::string::npos;
    const bool ref = lower.find("refuted") != std::string::npos ||
                     lower.find("not supported") != std::string::npos;
    if (sup && !ref) return Verdict::Supported;
    if (ref) return Verdict::Refuted;
    return std::nullopt;
  }

  std::shared_ptr<Gateway> gateway_;
  ModelEndpoint auxiliary_;
  std::shared_ptr<RetrievalBackend> retrieval_;
  int evidence_k_;
};

}  // namespace logu

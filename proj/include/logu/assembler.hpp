#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "logu/core.hpp"
#include "logu/gateway.hpp"
#include "logu/prompts.hpp"

namespace logu {

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoverageVerdict {
  std::string claim_text;
  bool covered = false;
};

class Assembler {
 public:
  Assembler(std::shared_ptr<Gateway> gateway, ModelEndpoint auxiliary)
      : gateway_(std::move(gateway)), auxiliary_(std::move(auxiliary)) {}

  // Facts in original response order: kept claims verbatim, revised claims
  // as their uncertainty rewrites.
  static std::vector<std::string> fact_list(const RevisedResponse& revised) {
    std::map<size_t, std::string> by_ordinal;
    for (const auto& c : revised.kept_claims) by_ordinal[c.ordinal()] = c.text;
    for (const auto& r : revised.revised_claims) {
      AtomicClaim probe;
      probe.claim_id = r.claim_id;
      by_ordinal[probe.ordinal()] = r.text;
    }
    std::vector<std::string> facts;
    facts.reserve(by_ordinal.size());
    for (auto& [ord, text] : by_ordinal) facts.push_back(text);
    return facts;
  }

  // Merge the claims into one coherent paragraph and verify nothing was
  // dropped. A dropped claim would silently change the effective uncertainty
  // ratio of the record, so coverage is checked programmatically.
  RevisedResponse assemble(RevisedResponse revised) {
    const auto facts = fact_list(revised);
    if (facts.empty()) throw AssemblyError("nothing to assemble for " + revised.parent_query_id);
    std::vector<std::string> missing;
    for (std::uint64_t nonce = 0; nonce < 2; ++nonce) {
      const std::string text = gateway_->complete(
          auxiliary_, prompts::assemble_prompt(facts), SamplingConfig::pipeline(), nonce);
      auto verdicts = coverage_check(text, facts);
      missing.clear();
      for (const auto& v : verdicts)
        if (!v.covered) missing.push_back(v.claim_text);
      if (missing.empty()) {
        revised.assembled_text = trim(text);
        return revised;
      }
    }
    std::string detail;
    for (const auto& m : missing) detail += "\n  missing: " + m;
    throw AssemblyError("assembly dropped claims for " + revised.parent_query_id + detail);
  }

  // Per-claim entailment probe against the assembled text.
  std::vector<CoverageVerdict> coverage_check(const std::string& assembled_text,
                                              const std::vector<std::string>& claims) {
    std::vector<Gateway::Request> requests;
    requests.reserve(claims.size());
    for (const auto& c : claims)
      requests.push_back(
          {auxiliary_, prompts::coverage_prompt(assembled_text, c), SamplingConfig::pipeline(), 0});
    auto slots = gateway_->complete_batch(requests);
    std::vector<CoverageVerdict> out;
    out.reserve(claims.size());
    for (size_t i = 0; i < claims.size(); ++i) {
      const bool yes = slots[i].ok && to_lower(slots[i].text).find("yes") != std::string::npos;
      out.push_back({claims[i], yes});
    }
    return out;
  }

 private:
  std::shared_ptr<Gateway> gateway_;
  ModelEndpoint auxiliary_;
};

}  // namespace logu

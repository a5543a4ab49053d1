#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "logu/util.hpp"

namespace logu {

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetTag { Bios, LongFact, WildHallu, Other };

inline std::string to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::Bios: return "bios";
    case DatasetTag::LongFact: return "longfact";
    case DatasetTag::WildHallu: return "wildhallu";
    default: return "other";
  }
}

inline DatasetTag dataset_tag_from(const std::string& s) {
  if (s == "bios") return DatasetTag::Bios;
  if (s == "longfact") return DatasetTag::LongFact;
  if (s == "wildhallu") return DatasetTag::WildHallu;
  return DatasetTag::Other;
}

struct QueryResponsePair {
  std::string query_id;
  std::string query;
  std::string response;
  DatasetTag dataset_tag = DatasetTag::Other;
};

enum class Verdict { Supported, Refuted, Uncertain, Unverified };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "supported";
    case Verdict::Refuted: return "refuted";
    case Verdict::Uncertain: return "uncertain";
    default: return "unverified";
  }
}

inline Verdict verdict_from(const std::string& s) {
  if (s == "supported") return Verdict::Supported;
  if (s == "refuted") return Verdict::Refuted;
  if (s == "uncertain") return Verdict::Uncertain;
  return Verdict::Unverified;
}

struct PassageRef {
  std::string source;
  std::string title;
  int rank = 1;
};

struct SourceSpan {
  size_t begin = 0;
  size_t end = 0;
};

struct AtomicClaim {
  std::string claim_id;  // "<query_id>#<ordinal>"
  std::string text;
  Verdict verdict = Verdict::Unverified;
  std::vector<PassageRef> evidence;
  std::optional<SourceSpan> source_span;

  static std::string make_id(const std::string& query_id, size_t ordinal) {
    return query_id + "#" + std::to_string(ordinal);
  }

  // Ordinal component of claim_id; decomposition order.
  size_t ordinal() const {
    auto pos = claim_id.rfind('#');
    if (pos == std::string::npos) return 0;
    return static_cast<size_t>(std::stoull(claim_id.substr(pos + 1)));
  }
};

struct ClaimPartition {
  std::string query_id;
  std::vector<AtomicClaim> supported;   // C_s
  std::vector<AtomicClaim> refuted;     // C_ns
  std::vector<AtomicClaim> uncertain;   // C_unc

  size_t total() const { return supported.size() + refuted.size() + uncertain.size(); }

  std::vector<AtomicClaim> all_in_order() const {
    std::vector<AtomicClaim> all;
    all.reserve(total());
    all.insert(all.end(), supported.begin(), supported.end());
    all.insert(all.end(), refuted.begin(), refuted.end());
    all.insert(all.end(), uncertain.begin(), uncertain.end());
    std::sort(all.begin(), all.end(),
              [](const AtomicClaim& a, const AtomicClaim& b) { return a.ordinal() < b.ordinal(); });
    return all;
  }

  void check_invariants() const {
    std::set<std::string> ids;
    auto visit = [&](const std::vector<AtomicClaim>& claims, Verdict expect) {
      for (const auto& c : claims) {
        if (c.verdict != expect)
          throw InvariantError("claim " + c.claim_id + " has verdict " + logu::to_string(c.verdict) +
                               " but sits in the " + logu::to_string(expect) + " list");
        if (!ids.insert(c.claim_id).second)
          throw InvariantError("duplicate claim_id in partition: " + c.claim_id);
      }
    };
    visit(supported, Verdict::Supported);
    visit(refuted, Verdict::Refuted);
    visit(uncertain, Verdict::Uncertain);
  }
};

enum class RevisionOp { Pos, Neg };

inline std::string to_string(RevisionOp op) { return op == RevisionOp::Pos ? "pos" : "neg"; }

struct RevisionPlan {
  RevisionOp op = RevisionOp::Pos;
  double alpha = 0.2;
  std::set<std::string> selected_ids;
  int variant_index = 0;  // [0,5)
  std::uint64_t rng_seed = 0;
};

struct RevisedClaim {
  std::string claim_id;
  std::string text;  // uncertainty rewrite
};

struct RevisedResponse {
  std::string parent_query_id;
  RevisionOp op = RevisionOp::Pos;
  int variant_index = 0;
  std::vector<AtomicClaim> kept_claims;
  std::vector<RevisedClaim> revised_claims;
  std::string assembled_text;
};

enum class RecordKind { Sft, Dpo };

struct TrainingRecord {
  RecordKind kind = RecordKind::Sft;
  std::string instruction;
  std::string input;
  std::string output;    // Sft only
  std::string chosen;    // Dpo only
  std::string rejected;  // Dpo only

  void check_invariants() const {
    if (kind == RecordKind::Sft) {
      if (!chosen.empty() || !rejected.empty())
        throw InvariantError("SFT record carries chosen/rejected");
    } else {
      if (!output.empty()) throw InvariantError("DPO record carries output");
      if (chosen == rejected) throw InvariantError("DPO record has chosen == rejected");
    }
  }
};

struct ResponseCounts {
  std::string query_id;
  size_t supported = 0;
  size_t refuted = 0;
  size_t uncertain = 0;
  size_t tokens = 0;
};

struct EvalReport {
  std::optional<double> fa;  // absent when no deterministic claims at all
  std::optional<double> ua;  // absent when no uncertain claims
  double incor_mean = 0.0;
  double cor_mean = 0.0;
  double unc_mean = 0.0;
  double token_mean = 0.0;
  std::map<std::string, size_t> category_histogram;
  std::vector<ResponseCounts> per_response;
  size_t unresolved_probes = 0;
  size_t vague_claims = 0;
};

// FA = |C_s| / (|C_s| + |C_ns|). Counts may be fractional (corpus means).
inline double compute_fa(double supported_count, double refuted_count) {
  if (supported_count < 0 || refuted_count < 0)
    throw InvariantError("negative claim count");
  const double denom = supported_count + refuted_count;
  if (denom <= 0)
    throw DegenerateInputError("no deterministic claims: FA undefined");
  return supported_count / denom;
}

// UA = |C_unc^true| / |C_unc|; absent when the response set expresses no
// uncertainty at all.
inline std::optional<double> compute_ua(size_t true_uncertain_count, size_t uncertain_count) {
  if (true_uncertain_count > uncertain_count)
    throw InvariantError("true uncertain count exceeds uncertain count");
  if (uncertain_count == 0) return std::nullopt;
  return static_cast<double>(true_uncertain_count) / static_cast<double>(uncertain_count);
}

// Down-sampling rule: floor(min(alpha/(1-alpha) * |eligible-complement|, |pool|)).
// Pos selects from C_ns against |C_s|; Neg selects from C_s against |C_ns|.
// Flooring keeps the realized uncertainty ratio at or below alpha.
inline size_t downsample_count(RevisionOp op, double alpha, size_t n_supported, size_t n_refuted) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvariantError("alpha must lie in (0,1)");
  const double scale = alpha / (1.0 - alpha);
  const size_t anchor = (op == RevisionOp::Pos) ? n_supported : n_refuted;
  const size_t pool = (op == RevisionOp::Pos) ? n_refuted : n_supported;
  const double want = scale * static_cast<double>(anchor);
  const double capped = std::min(want, static_cast<double>(pool));
  return static_cast<size_t>(std::floor(capped));
}

}  // namespace logu

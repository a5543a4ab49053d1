#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "logu/core.hpp"
#include "logu/util.hpp"

namespace logu {

struct RetrievalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EvidenceSource { Wikipedia, WebSearch, Fixture };

inline std::string to_string(EvidenceSource s) {
  switch (s) {
    case EvidenceSource::Wikipedia: return "wikipedia";
    case EvidenceSource::WebSearch: return "web_search";
    default: return "fixture";
  }
}

struct EvidencePassage {
  EvidenceSource source = EvidenceSource::Fixture;
  std::string title;
  std::string snippet;
  int rank = 1;
};

class RetrievalBackend {
 public:
  virtual ~RetrievalBackend() = default;
  // Rank-ordered, at most k passages. An empty list is a valid result;
  // backend outages raise RetrievalError.
  virtual std::vector<EvidencePassage> retrieve(const std::string& claim_text, int k) = 0;
};

// Offline backend: a directory of JSON files, each {"claim": ..., "passages":
// [{"title":..., "snippet":...}, ...]}, keyed by normalized claim text.
// A single combined file named passages.json with a top-level map is also
// accepted.
class FixtureRetrieval : public RetrievalBackend {
 public:
  explicit FixtureRetrieval(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw RetrievalError("fixture dir missing: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      nlohmann::json j;
      in >> j;
      if (j.is_object() && j.contains("claim")) {
        add_entry(j.at("claim").get<std::string>(), j.at("passages"));
      } else if (j.is_object()) {
        for (auto& [claim, passages] : j.items()) add_entry(claim, passages);
      }
    }
  }

  explicit FixtureRetrieval(std::map<std::string, std::vector<EvidencePassage>> table)
      : table_(std::move(table)) {}

  std::vector<EvidencePassage> retrieve(const std::string& claim_text, int k) override {
    auto it = table_.find(normalize_text(claim_text));
    if (it == table_.end()) return {};
    std::vector<EvidencePassage> out(it->second.begin(),
                                     it->second.begin() + std::min<size_t>(k, it->second.size()));
    return out;
  }

 private:
  void add_entry(const std::string& claim, const nlohmann::json& passages) {
    std::vector<EvidencePassage> list;
    int rank = 1;
    for (const auto& p : passages) {
      EvidencePassage ev;
      ev.source = EvidenceSource::Fixture;
      ev.title = p.value("title", "");
      ev.snippet = p.value("snippet", "");
      ev.rank = rank++;
      list.push_back(std::move(ev));
    }
    table_[normalize_text(claim)] = std::move(list);
  }

  std::map<std::string, std::vector<EvidencePassage>> table_;
};

// Search-API client: GET <base>/search?q=<claim>&k=<k> with an optional
// bearer key, expecting {"results": [{"title":..., "snippet":...}]}.
class HttpSearchRetrieval : public RetrievalBackend {
 public:
  HttpSearchRetrieval(std::string base_url, std::string api_key_env = {},
                      EvidenceSource source = EvidenceSource::Wikipedia)
      : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)), source_(source) {}

  std::vector<EvidencePassage> retrieve(const std::string& claim_text, int k) override {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (!api_key_env_.empty()) {
      const char* key = std::getenv(api_key_env_.c_str());
      if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    httplib::Params params{{"q", claim_text}, {"k", std::to_string(k)}};
    auto res = client.Get("/search", params, headers);
    if (!res || res->status >= 500) throw RetrievalError("search backend unreachable");
    if (res->status != 200)
      throw RetrievalError("search backend HTTP " + std::to_string(res->status));
    std::vector<EvidencePassage> out;
    try {
      auto j = nlohmann::json::parse(res->body);
      int rank = 1;
      for (const auto& r : j.at("results")) {
        if (rank > k) break;
        out.push_back({source_, r.value("title", ""), r.value("snippet", ""), rank});
        ++rank;
      }
    } catch (const nlohmann::json::exception& e) {
      throw RetrievalError(std::string("cannot parse search response: ") + e.what());
    }
    return out;
  }

 private:
  std::string base_url_;
  std::string api_key_env_;
  EvidenceSource source_;
};

}  // namespace logu

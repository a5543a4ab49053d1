#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "logu/prompts.hpp"
#include "logu/util.hpp"

namespace logu {

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TransientError : GatewayError {
  using GatewayError::GatewayError;
};
struct AuthError : GatewayError {
  using GatewayError::GatewayError;
};
struct MalformedResponseError : GatewayError {
  using GatewayError::GatewayError;
};
struct NetworkExhaustedError : GatewayError {
  using GatewayError::GatewayError;
};

enum class ModelRole { Auxiliary, Target };

struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;  // env var holding the key; the key itself is never stored
  ModelRole role = ModelRole::Auxiliary;
};

struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.95;
  int max_tokens = 1024;

  // Fact-checking, revision and assembling run greedy.
  static SamplingConfig pipeline() { return {0.0, 0.95, 1024}; }
  static SamplingConfig generation() { return {0.7, 0.95, 1024}; }
};

inline std::string cache_key(const ModelEndpoint& ep, const std::string& prompt,
                             const SamplingConfig& cfg, std::uint64_t nonce) {
  std::ostringstream oss;
  oss << ep.model_name << '\x1f' << prompt << '\x1f' << cfg.temperature << '\x1f' << cfg.top_p
      << '\x1f' << cfg.max_tokens << '\x1f' << nonce;
  return to_hex(fnv1a64(oss.str()));
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ModelEndpoint& ep, const std::string& prompt,
                               const SamplingConfig& cfg, std::uint64_t nonce) = 0;
};

// ---------------------------------------------------------------------------
// Mock backend. Dispatches on the instruction prefix of each pipeline prompt
// and produces deterministic output; judge-style prompts consult a fixture
// table supplied by the harness.

struct MockFixtures {
  std::map<std::string, std::string> verdicts;       // normalized claim -> supported|refuted
  std::map<std::string, std::string> questions;      // normalized claim -> question or VAGUE
  std::map<std::string, std::string> probe_answers;  // normalized question -> target answer
  std::map<std::string, bool> probe_correct;         // normalized question -> judged correctness
  std::set<std::string> vague;                       // normalized claims judged vague
  std::map<std::string, int> categories;             // normalized claim -> 0..7
  std::map<std::string, std::string> generations;    // normalized query -> canned response

  static MockFixtures from_json(const nlohmann::json& j) {
    MockFixtures f;
    auto load_map = [&](const char* key, std::map<std::string, std::string>& dst) {
      if (!j.contains(key)) return;
      for (auto& [k, v] : j.at(key).items()) dst[normalize_text(k)] = v.get<std::string>();
    };
    load_map("verdicts", f.verdicts);
    load_map("questions", f.questions);
    load_map("probe_answers", f.probe_answers);
    load_map("generations", f.generations);
    if (j.contains("probe_correct"))
      for (auto& [k, v] : j.at("probe_correct").items())
        f.probe_correct[normalize_text(k)] = v.get<bool>();
    if (j.contains("vague"))
      for (const auto& v : j.at("vague")) f.vague.insert(normalize_text(v.get<std::string>()));
    if (j.contains("categories"))
      for (auto& [k, v] : j.at("categories").items()) f.categories[normalize_text(k)] = v.get<int>();
    return f;
  }

  static MockFixtures from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GatewayError("cannot open mock fixture file: " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

namespace detail {

inline std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  std::string t = trim(cur);
  if (!t.empty()) out.push_back(t + ".");
  return out;
}

inline std::string slice_between(const std::string& s, std::string_view after,
                                 std::string_view before) {
  size_t b = s.find(after);
  if (b == std::string::npos) return {};
  b += after.size();
  size_t e = s.find(before, b);
  if (e == std::string::npos) e = s.size();
  return s.substr(b, e - b);
}

}  // namespace detail

class MockBackend : public Backend {
 public:
  MockBackend() = default;
  explicit MockBackend(MockFixtures fixtures) : fixtures_(std::move(fixtures)) {}

  void set_fixtures(MockFixtures f) { fixtures_ = std::move(f); }
  MockFixtures& fixtures() { return fixtures_; }

  std::uint64_t call_count() const { return calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  void reset_counters() {
    calls_ = 0;
    peak_ = 0;
  }

  // Claims listed here make the backend throw, for failure-isolation tests.
  void poison(const std::string& prompt_substring) { poisoned_.push_back(prompt_substring); }

  std::string complete(const ModelEndpoint& ep, const std::string& prompt, const SamplingConfig&,
                       std::uint64_t) override {
    struct InFlight {
      MockBackend* self;
      explicit InFlight(MockBackend* s) : self(s) {
        int cur = ++self->in_flight_;
        int prev = self->peak_.load();
        while (cur > prev && !self->peak_.compare_exchange_weak(prev, cur)) {
        }
      }
      ~InFlight() { --self->in_flight_; }
    } guard(this);
    ++calls_;
    for (const auto& p : poisoned_)
      if (prompt.find(p) != std::string::npos) throw TransientError("mock poisoned request");
    return dispatch(ep, prompt);
  }

 private:
  std::string dispatch(const ModelEndpoint& ep, const std::string& prompt) {
    using namespace prompts;
    if (prompt.rfind(kDecomposeHeader, 0) == 0) return do_decompose(prompt);
    if (prompt.rfind(kJudgeHeader, 0) == 0) return do_judge(prompt);
    if (prompt.rfind(kRevisionHeader, 0) == 0) return do_revise(prompt);
    if (prompt.rfind(kAssembleHeader, 0) == 0) return do_assemble(prompt);
    if (prompt.rfind(kCoverageHeader, 0) == 0) return do_coverage(prompt);
    if (prompt.rfind(kToQuestionHeader, 0) == 0) return do_to_question(prompt);
    if (prompt.rfind(kAnswerJudgeHeader, 0) == 0) return do_answer_judge(prompt);
    if (prompt.rfind(kVagueHeader, 0) == 0) return do_vague(prompt);
    if (prompt.rfind(kCategorizeHeader, 0) == 0) return do_categorize(prompt);
    // Anything else is a generation or probe prompt for the target model.
    if (ep.role == ModelRole::Target) {
      const std::string key = normalize_text(last_payload_line(prompt));
      if (auto it = fixtures_.probe_answers.find(key); it != fixtures_.probe_answers.end())
        return it->second;
    }
    const std::string key = normalize_text(last_payload_line(prompt));
    if (auto it = fixtures_.generations.find(key); it != fixtures_.generations.end())
      return it->second;
    return "Mock response " + to_hex(fnv1a64(prompt)) + ".";
  }

  static std::string last_payload_line(const std::string& prompt) {
    // Last non-empty line; generation prompts put the query there.
    size_t end = prompt.find_last_not_of(" \t\r\n");
    if (end == std::string::npos) return {};
    size_t begin = prompt.find_last_of('\n', end);
    begin = (begin == std::string::npos) ? 0 : begin + 1;
    return prompt.substr(begin, end - begin + 1);
  }

  std::string do_decompose(const std::string& prompt) {
    const std::string body = detail::slice_between(prompt, "Passage:\n", "\n\nFacts:");
    std::string out;
    for (const auto& s : detail::split_sentences(body)) out += "- " + s + "\n";
    return out;
  }

  std::string do_judge(const std::string& prompt) {
    const std::string claim = trim(detail::slice_between(prompt, "\nClaim: ", "\nAnswer:"));
    auto it = fixtures_.verdicts.find(normalize_text(claim));
    if (it != fixtures_.verdicts.end())
      return it->second == "refuted" ? "Refuted" : "Supported";
    return "Supported";
  }

  std::string do_revise(const std::string& prompt) {
    const std::string body = detail::slice_between(prompt, "\nFacts:\n", "\nOutput:");
    std::istringstream in(body);
    std::string line, out;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      auto strip_label = [&](std::string_view label) -> std::optional<std::string> {
        size_t pos = line.rfind(label);
        if (pos == std::string::npos) return std::nullopt;
        return trim(line.substr(0, pos));
      };
      if (auto fact = strip_label("##uncertain##"))
        out += "### I am not sure whether " + *fact + "\n";
      else if (auto kept = strip_label("##certain##"))
        out += "### " + *kept + "\n";
    }
    return out;
  }

  std::string do_assemble(const std::string& prompt) {
    const std::string body =
        detail::slice_between(prompt, "Here is the atomic facts:\n\n", "\nOutput:");
    std::istringstream in(body);
    std::string line, out;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      if (!out.empty()) out += ' ';
      out += line;
    }
    return out;
  }

  std::string do_coverage(const std::string& prompt) {
    const std::string text = detail::slice_between(prompt, "Text:\n", "\n\nFact: ");
    const std::string fact = trim(detail::slice_between(prompt, "\n\nFact: ", "\nAnswer:"));
    return text.find(fact) != std::string::npos ? "Yes" : "No";
  }

  std::string do_to_question(const std::string& prompt) {
    const std::string claim =
        trim(detail::slice_between(prompt, "Expression: ", "\nQuestion:"));
    const std::string key = normalize_text(claim);
    if (auto it = fixtures_.questions.find(key); it != fixtures_.questions.end())
      return it->second;
    if (fixtures_.vague.count(key)) return "VAGUE";
    // Template rule: birth-date style claims map to a When question.
    const std::string lower = to_lower(claim);
    size_t born = lower.find(" was born");
    if (born != std::string::npos) {
      std::string subject = claim.substr(0, born);
      for (const char* prefix : {"I am not sure whether ", "I am not sure when ", "I do not know when "})
        if (subject.rfind(prefix, 0) == 0) subject = subject.substr(std::string(prefix).size());
      return "When was " + subject + " born?";
    }
    return "What is true about: " + claim + "?";
  }

  std::string do_answer_judge(const std::string& prompt) {
    const std::string question =
        trim(detail::slice_between(prompt, "Question: ", "\nGold fact:"));
    auto it = fixtures_.probe_correct.find(normalize_text(question));
    if (it != fixtures_.probe_correct.end()) return it->second ? "Correct" : "Incorrect";
    const std::string gold = trim(detail::slice_between(prompt, "Gold fact: ", "\nModel answer:"));
    const std::string answer =
        trim(detail::slice_between(prompt, "Model answer: ", "\nVerdict:"));
    const std::string ng = normalize_text(gold), na = normalize_text(answer);
    const bool match = !na.empty() && (ng.find(na) != std::string::npos ||
                                       na.find(ng) != std::string::npos);
    return match ? "Correct" : "Incorrect";
  }

  std::string do_vague(const std::string& prompt) {
    const std::string claim = trim(detail::slice_between(prompt, "Expression: ", "\nAnswer:"));
    return fixtures_.vague.count(normalize_text(claim)) ? "Vague" : "Specific";
  }

  std::string do_categorize(const std::string& prompt) {
    const std::string claim = trim(detail::slice_between(prompt, "Expression: ", "\nIndex:"));
    if (auto it = fixtures_.categories.find(normalize_text(claim)); it != fixtures_.categories.end())
      return std::to_string(it->second);
    const std::string lower = to_lower(claim);
    if (lower.find("when") != std::string::npos || lower.find("date") != std::string::npos ||
        lower.find("timing") != std::string::npos)
      return "0";
    if (lower.find("where") != std::string::npos || lower.find("place") != std::string::npos)
      return "2";
    if (lower.find("early life") != std::string::npos ||
        lower.find("personal life") != std::string::npos)
      return "5";
    return "7";
  }

  MockFixtures fixtures_;
  std::vector<std::string> poisoned_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

// ---------------------------------------------------------------------------
// Content-addressed disk cache: one file per key, a one-line JSON metadata
// header followed by the raw completion text.

class CompletionCache {
 public:
  CompletionCache() = default;
  explicit CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  bool enabled() const { return !dir_.empty(); }

  std::optional<std::string> get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
    if (!in) return std::nullopt;
    std::string header;
    std::getline(in, header);  // metadata, not needed for replay
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
  }

  void put(const std::string& key, const std::string& model, const std::string& text) const {
    if (!enabled()) return;
    const auto final_path = dir_ / (key + ".txt");
    const auto tmp_path = dir_ / (key + ".tmp." + std::to_string(std::uintptr_t(&text)));
    {
      std::ofstream out(tmp_path, std::ios::binary);
      nlohmann::json meta{{"model", model},
                          {"ts", std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count()}};
      out << meta.dump() << '\n' << text;
    }
    // Rename keeps concurrent writers of the same key from interleaving;
    // last write wins.
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) std::filesystem::remove(tmp_path, ec);
  }

 private:
  std::filesystem::path dir_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 200;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, CompletionCache cache = {}, RetryPolicy retry = {},
          int concurrency = 8)
      : backend_(std::move(backend)),
        cache_(std::move(cache)),
        retry_(retry),
        concurrency_(concurrency > 0 ? concurrency : 1) {}

  std::string complete(const ModelEndpoint& ep, const std::string& prompt,
                       const SamplingConfig& cfg, std::uint64_t nonce = 0) {
    const std::string key = cache_key(ep, prompt, cfg, nonce);
    if (auto hit = cache_.get(key)) return *hit;
    std::string text = complete_with_retry(ep, prompt, cfg, nonce);
    cache_.put(key, ep.model_name, text);
    return text;
  }

  struct Request {
    ModelEndpoint endpoint;
    std::string prompt;
    SamplingConfig config;
    std::uint64_t nonce = 0;
  };

  struct Slot {
    bool ok = false;
    std::string text;
    std::string error;
  };

  // Positionally aligned results; one failed request never aborts the batch.
  std::vector<Slot> complete_batch(const std::vector<Request>& requests) {
    std::vector<Slot> slots(requests.size());
    if (requests.empty()) return slots;
    std::atomic<size_t> next{0};
    const size_t workers = std::min<size_t>(concurrency_, requests.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= requests.size()) return;
          const auto& r = requests[i];
          try {
            slots[i].text = complete(r.endpoint, r.prompt, r.config, r.nonce);
            slots[i].ok = true;
          } catch (const std::exception& e) {
            slots[i].error = e.what();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    return slots;
  }

  int concurrency() const { return concurrency_; }
  Backend& backend() { return *backend_; }

 private:
  std::string complete_with_retry(const ModelEndpoint& ep, const std::string& prompt,
                                  const SamplingConfig& cfg, std::uint64_t nonce) {
    std::string last_error;
    for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
      try {
        return backend_->complete(ep, prompt, cfg, nonce);
      } catch (const AuthError&) {
        throw;  // non-retryable
      } catch (const TransientError& e) {
        last_error = e.what();
        if (attempt + 1 < retry_.max_attempts)
          std::this_thread::sleep_for(
              std::chrono::milliseconds(retry_.base_delay_ms << attempt));
      }
    }
    throw NetworkExhaustedError("backend exhausted after " +
                                std::to_string(retry_.max_attempts) + " attempts: " + last_error);
  }

  std::shared_ptr<Backend> backend_;
  CompletionCache cache_;
  RetryPolicy retry_;
  int concurrency_;
};

}  // namespace logu

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "logu/core.hpp"
#include "logu/gateway.hpp"
#include "logu/util.hpp"

namespace logu {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. '#' comments, ${VAR} environment
// interpolation for secrets; every key can be overridden by a CLI flag.
struct PipelineConfig {
  std::string aux_base_url = "https://api.openai.com";
  std::string aux_model = "gpt-4o";
  std::string aux_key_env = "LOGU_AUX_API_KEY";
  std::string target_base_url = "http://localhost:8000";
  std::string target_model = "target";
  std::string target_key_env;

  double alpha = 0.2;
  int variants_max = 5;  // hard cap 5
  std::uint64_t master_seed = 42;
  int concurrency = 8;
  int evidence_k = 5;
  std::string backend = "mock";          // mock | http
  std::string retrieval = "fixture";     // fixture | http
  std::string retrieval_dir;             // fixture passage directory
  std::string retrieval_url;             // search API base URL
  std::string retrieval_key_env;
  std::string mock_fixtures;             // JSON fixture table for the mock backend
  std::string cache_dir;
  std::string run_dir = "run";
  std::string templates_file;            // uncertainty templates, one per line
  DatasetTag dataset_tag = DatasetTag::Other;
  bool augment_instructions = true;
  bool strict = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (variants_max < 1 || variants_max > 5)
      throw ConfigError("variants must lie in [1,5]");
    if (backend != "mock" && backend != "http")
      throw ConfigError("backend must be mock or http");
  }

  ModelEndpoint auxiliary_endpoint() const {
    return {aux_base_url, aux_model, aux_key_env, ModelRole::Auxiliary};
  }
  ModelEndpoint target_endpoint() const {
    return {target_base_url, target_model, target_key_env, ModelRole::Target};
  }

  // Digest over everything that affects artifact content; a change
  // invalidates downstream stages.
  std::string digest() const {
    std::ostringstream oss;
    oss << aux_model << '|' << target_model << '|' << alpha << '|' << variants_max << '|'
        << master_seed << '|' << evidence_k << '|' << backend << '|' << retrieval << '|'
        << retrieval_dir << '|' << mock_fixtures << '|' << to_string(dataset_tag) << '|'
        << augment_instructions << '|' << templates_file;
    return to_hex(fnv1a64(oss.str()));
  }

  void apply(const std::string& key, const std::string& value) {
    if (key == "aux_base_url") aux_base_url = value;
    else if (key == "aux_model") aux_model = value;
    else if (key == "aux_key_env") aux_key_env = value;
    else if (key == "target_base_url") target_base_url = value;
    else if (key == "target_model") target_model = value;
    else if (key == "target_key_env") target_key_env = value;
    else if (key == "alpha") alpha = std::stod(value);
    else if (key == "variants") variants_max = std::stoi(value);
    else if (key == "seed") master_seed = std::stoull(value);
    else if (key == "concurrency") concurrency = std::stoi(value);
    else if (key == "evidence_k") evidence_k = std::stoi(value);
    else if (key == "backend") backend = value;
    else if (key == "retrieval") retrieval = value;
    else if (key == "retrieval_dir") retrieval_dir = value;
    else if (key == "retrieval_url") retrieval_url = value;
    else if (key == "retrieval_key_env") retrieval_key_env = value;
    else if (key == "mock_fixtures") mock_fixtures = value;
    else if (key == "cache_dir") cache_dir = value;
    else if (key == "run_dir") run_dir = value;
    else if (key == "templates_file") templates_file = value;
    else if (key == "dataset_tag") dataset_tag = dataset_tag_from(value);
    else if (key == "augment_instructions") augment_instructions = (value == "true" || value == "1");
    else if (key == "strict") strict = (value == "true" || value == "1");
    else throw ConfigError("unknown config key: " + key);
  }

  static std::string interpolate(const std::string& value) {
    std::string out;
    size_t i = 0;
    while (i < value.size()) {
      if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
        size_t close = value.find('}', i + 2);
        if (close == std::string::npos) throw ConfigError("unterminated ${ in config value");
        const std::string name = value.substr(i + 2, close - i - 2);
        if (const char* env = std::getenv(name.c_str())) out += env;
        i = close + 1;
      } else {
        out += value[i++];
      }
    }
    return out;
  }

  static PipelineConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    PipelineConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
      cfg.apply(trim(line.substr(0, eq)), interpolate(trim(line.substr(eq + 1))));
    }
    return cfg;
  }
};

}  // namespace logu

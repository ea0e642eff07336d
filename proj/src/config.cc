// Copyright 2026 The promptxfer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "promptxfer/config.h"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <utility>

#include "promptxfer/errors.h"

namespace promptxfer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void RequireObject(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
}

void CheckKeys(const json& j, const std::string& where,
               std::initializer_list<const char*> allowed) {
  RequireObject(j, where);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

// Reads j[key] into out if present, wrapping type errors.
template <typename T>
void Read(const json& j, const char* key, const std::string& where, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::chrono::milliseconds ReadMillis(const json& j, const char* key,
                                     const std::string& where,
                                     std::chrono::milliseconds fallback) {
  int64_t ms = fallback.count();
  Read(j, key, where, ms);
  return std::chrono::milliseconds(ms);
}

fs::path Resolve(const fs::path& base, const fs::path& p) {
  return (p.is_absolute() || base.empty() ? p : base / p).lexically_normal();
}

DatasetGroup ParseGroup(const json& j, const std::string& where,
                        const fs::path& base) {
  CheckKeys(j, where, {"paths", "description"});
  DatasetGroup g;
  std::vector<std::string> paths;
  Read(j, "paths", where, paths);
  for (const auto& p : paths) g.paths.push_back(Resolve(base, p));
  Read(j, "description", where, g.description);
  return g;
}

}  // namespace

GenParams ParseGenParams(const json& j, GenParams defaults) {
  CheckKeys(j, "gen_params", {"temperature", "max_tokens", "stop_sequences"});
  Read(j, "temperature", "gen_params", defaults.temperature);
  Read(j, "max_tokens", "gen_params", defaults.max_tokens);
  Read(j, "stop_sequences", "gen_params", defaults.stop_sequences);
  defaults.Validate();
  return defaults;
}

MockProfile ParseMockProfile(const json& j) {
  const std::string where = "mock_profile";
  CheckKeys(j, where,
            {"keyword_accuracy", "base_accuracy", "confidence_noise",
             "follow_rate", "mutation_vocabulary"});
  MockProfile p;
  Read(j, "keyword_accuracy", where, p.keyword_accuracy);
  Read(j, "base_accuracy", where, p.base_accuracy);
  Read(j, "confidence_noise", where, p.confidence_noise);
  Read(j, "follow_rate", where, p.follow_rate);
  Read(j, "mutation_vocabulary", where, p.mutation_vocabulary);
  p.Validate();
  return p;
}

BackendConfig ParseBackendConfig(const json& j) {
  const std::string where = "backend";
  CheckKeys(j, where,
            {"kind", "endpoint_url", "model_name", "api_key_env",
             "request_timeout_ms", "max_retries", "initial_backoff_ms",
             "max_backoff_ms", "max_concurrency", "supports_logprobs", "seed",
             "mock_profile"});
  BackendConfig c;
  std::string kind;
  Read(j, "kind", where, kind);
  if (kind.empty()) throw ConfigError("backend.kind is required");
  c.kind = ParseBackendKind(kind);
  Read(j, "endpoint_url", where, c.endpoint_url);
  Read(j, "model_name", where, c.model_name);
  Read(j, "api_key_env", where, c.api_key_env);
  c.request_timeout = ReadMillis(j, "request_timeout_ms", where,
                                 c.request_timeout);
  Read(j, "max_retries", where, c.max_retries);
  c.initial_backoff = ReadMillis(j, "initial_backoff_ms", where,
                                 c.initial_backoff);
  c.max_backoff = ReadMillis(j, "max_backoff_ms", where, c.max_backoff);
  Read(j, "max_concurrency", where, c.max_concurrency);
  Read(j, "supports_logprobs", where, c.supports_logprobs);
  if (j.contains("seed") && !j["seed"].is_null()) {
    uint64_t seed = 0;
    Read(j, "seed", where, seed);
    c.seed = seed;
  }
  if (j.contains("mock_profile"))
    c.mock_profile = ParseMockProfile(j["mock_profile"]);
  c.Validate();
  return c;
}

OptimizerConfig ParseOptimizerConfig(const json& j) {
  const std::string where = "optimizer";
  CheckKeys(j, where,
            {"candidates_per_step", "max_steps", "patience", "min_improvement",
             "top_k_history", "seed_pool_size", "origin_prompt",
             "exemplar_count", "scoring_shots", "rng_seed", "workers",
             "candidate_cap", "reference_params", "scorer_params"});
  OptimizerConfig c;
  Read(j, "candidates_per_step", where, c.candidates_per_step);
  Read(j, "max_steps", where, c.max_steps);
  Read(j, "patience", where, c.patience);
  Read(j, "min_improvement", where, c.min_improvement);
  Read(j, "top_k_history", where, c.top_k_history);
  Read(j, "seed_pool_size", where, c.seed_pool_size);
  Read(j, "origin_prompt", where, c.origin_prompt);
  Read(j, "exemplar_count", where, c.exemplar_count);
  Read(j, "scoring_shots", where, c.scoring_shots);
  Read(j, "rng_seed", where, c.rng_seed);
  Read(j, "workers", where, c.workers);
  Read(j, "candidate_cap", where, c.candidate_cap);
  if (j.contains("reference_params"))
    c.reference_params =
        ParseGenParams(j["reference_params"], c.reference_params);
  if (j.contains("scorer_params"))
    c.scorer_params = ParseGenParams(j["scorer_params"], c.scorer_params);
  c.Validate();
  return c;
}

RunConfigFile RunConfigFile::Parse(const json& doc, const fs::path& base_dir) {
  CheckKeys(doc, "config",
            {"backends", "datasets", "optimizer", "template_id",
             "template_path", "confidence_mode", "store_root",
             "request_budget"});
  RunConfigFile c;
  c.raw = doc;
  if (!doc.contains("backends"))
    throw ConfigError("config.backends is required");
  const json& backends = doc["backends"];
  CheckKeys(backends, "backends", {"reference", "scorer"});
  if (!backends.contains("reference") || !backends.contains("scorer"))
    throw ConfigError("backends needs exactly one reference and one scorer");
  c.reference = ParseBackendConfig(backends["reference"]);
  c.scorer = ParseBackendConfig(backends["scorer"]);
  if (c.reference.kind == BackendKind::kMockScorer)
    throw ConfigError("backends.reference cannot be a mock_scorer");
  if (c.scorer.kind == BackendKind::kMockReference)
    throw ConfigError("backends.scorer cannot be a mock_reference");

  if (doc.contains("datasets")) {
    const json& ds = doc["datasets"];
    CheckKeys(ds, "datasets", {"source", "target", "dev_fraction",
                               "split_seed"});
    if (ds.contains("source"))
      c.source = ParseGroup(ds["source"], "datasets.source", base_dir);
    if (ds.contains("target"))
      c.target = ParseGroup(ds["target"], "datasets.target", base_dir);
    Read(ds, "dev_fraction", "datasets", c.dev_fraction);
    Read(ds, "split_seed", "datasets", c.split_seed);
    if (!(c.dev_fraction > 0.0 && c.dev_fraction <= 1.0))
      throw ConfigError("datasets.dev_fraction must be in (0, 1]");
  }
  if (doc.contains("optimizer"))
    c.optimizer = ParseOptimizerConfig(doc["optimizer"]);
  std::string mode;
  Read(doc, "confidence_mode", "config", mode);
  if (!mode.empty()) c.optimizer.confidence_mode = ParseConfidenceMode(mode);
  Read(doc, "template_id", "config", c.template_id);
  std::string template_path;
  Read(doc, "template_path", "config", template_path);
  if (!template_path.empty())
    c.template_path = Resolve(base_dir, template_path);
  std::string store_root;
  Read(doc, "store_root", "config", store_root);
  if (!store_root.empty()) c.store_root = store_root;
  c.store_root = Resolve(base_dir, c.store_root);
  Read(doc, "request_budget", "config", c.request_budget);
  if (!c.template_path) {
    try {
      BuiltinTemplate(c.template_id);
    } catch (const TemplateError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return c;
}

RunConfigFile RunConfigFile::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return Parse(doc, path.parent_path());
}

void RunConfigFile::CheckPaths(TaskRole role) const {
  const DatasetGroup& g = group(role);
  if (g.paths.empty())
    throw ConfigError("datasets." + std::string(TaskRoleName(role)) +
                      " lists no dataset files");
  for (const auto& p : g.paths) {
    if (!fs::is_regular_file(p))
      throw ConfigError("dataset file not found: " + p.string());
  }
  if (template_path && !fs::is_regular_file(*template_path))
    throw ConfigError("template file not found: " + template_path->string());
}

MetaPromptTemplate RunConfigFile::LoadTemplate() const {
  if (template_path) return LoadTemplateFile(template_id, *template_path);
  return BuiltinTemplate(template_id);
}

TaskSet RunConfigFile::LoadTaskSet(TaskRole role) const {
  CheckPaths(role);
  std::vector<Dataset> datasets;
  for (const auto& p : group(role).paths) {
    Dataset ds = LoadDataset(p);
    if (dev_fraction < 1.0)
      ds = SplitDataset(ds, dev_fraction, split_seed).dev;
    datasets.push_back(std::move(ds));
  }
  return TaskSet(role, std::move(datasets), group(role).description);
}

}  // namespace promptxfer

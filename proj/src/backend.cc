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

#include "promptxfer/backend.h"

#include <cmath>
#include <limits>

#include "promptxfer/errors.h"
#include "promptxfer/http_chat.h"
#include "promptxfer/mock_backend.h"

namespace promptxfer {
namespace {

bool IsProbability(double p) { return p >= 0.0 && p <= 1.0; }

// Charges the shared budget before delegating each call.
class BudgetedBackend : public Backend {
 public:
  BudgetedBackend(std::unique_ptr<Backend> inner,
                  std::shared_ptr<RequestBudget> budget)
      : inner_(std::move(inner)), budget_(std::move(budget)) {}

  std::string Generate(std::string_view prompt,
                       const GenParams& params) override {
    budget_->Charge();
    return inner_->Generate(prompt, params);
  }

  ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                       const TaskItem& item) override {
    budget_->Charge();
    return inner_->ScoreChoiceLogits(prompt, item);
  }

  bool SupportsLogits() const override { return inner_->SupportsLogits(); }
  std::string_view model_name() const override {
    return inner_->model_name();
  }

 private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<RequestBudget> budget_;
};

}  // namespace

void GenParams::Validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must lie in [0, 2]");
  }
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

GenParams DefaultScorerParams() {
  GenParams p;
  p.temperature = 0.0;
  p.max_tokens = 32;
  return p;
}

GenParams DefaultReferenceParams() {
  GenParams p;
  p.temperature = 1.0;
  p.max_tokens = 256;
  return p;
}

void MockProfile::Validate() const {
  for (const auto& [keyword, level] : keyword_accuracy) {
    if (keyword.empty()) throw ConfigError("empty mock keyword");
    if (!IsProbability(level)) {
      throw ConfigError("mock keyword accuracy for \"" + keyword +
                        "\" must lie in [0, 1]");
    }
  }
  if (!IsProbability(base_accuracy)) {
    throw ConfigError("mock base_accuracy must lie in [0, 1]");
  }
  if (!IsProbability(confidence_noise)) {
    throw ConfigError("mock confidence_noise must lie in [0, 1]");
  }
  if (!IsProbability(follow_rate)) {
    throw ConfigError("mock follow_rate must lie in [0, 1]");
  }
}

std::string_view BackendKindName(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttpChat:
      return "http_chat";
    case BackendKind::kMockScorer:
      return "mock_scorer";
    case BackendKind::kMockReference:
      return "mock_reference";
  }
  return "mock_scorer";
}

BackendKind ParseBackendKind(std::string_view name) {
  for (BackendKind k : {BackendKind::kHttpChat, BackendKind::kMockScorer,
                        BackendKind::kMockReference}) {
    if (BackendKindName(k) == name) return k;
  }
  throw ConfigError("unknown backend kind \"" + std::string(name) + "\"");
}

void BackendConfig::Validate() const {
  if (kind == BackendKind::kHttpChat) {
    if (endpoint_url.empty()) {
      throw ConfigError("http_chat backend requires endpoint_url");
    }
    if (api_key_env.empty()) {
      throw ConfigError("http_chat backend requires api_key_env");
    }
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  } else {
    if (!seed.has_value()) {
      throw ConfigError(std::string(BackendKindName(kind)) +
                        " backend requires a seed");
    }
    mock_profile.Validate();
  }
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

char ChoiceDistribution::Argmax() const {
  char best = 0;
  double best_weight = -1.0;
  for (const auto& [letter, w] : weights) {
    if (w > best_weight) {
      best = letter;
      best_weight = w;
    }
  }
  return best;
}

double ChoiceDistribution::Max() const {
  double best = 0.0;
  for (const auto& entry : weights) best = std::max(best, entry.second);
  return best;
}

ChoiceDistribution SoftmaxOverOptions(const std::map<char, double>& scores) {
  if (scores.empty()) throw BackendError("no option scores to normalize");
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& entry : scores) {
    if (std::isnan(entry.second) ||
        entry.second == std::numeric_limits<double>::infinity()) {
      throw BackendError("non-finite option score");
    }
    peak = std::max(peak, entry.second);
  }
  if (!std::isfinite(peak)) throw BackendError("all option scores are -inf");
  ChoiceDistribution dist;
  double total = 0.0;
  for (const auto& [letter, s] : scores) {
    const double e = std::exp(s - peak);
    dist.weights[letter] = e;
    total += e;
  }
  for (auto& entry : dist.weights) entry.second /= total;
  return dist;
}

void RequestBudget::Charge() {
  if (max_calls_ == 0) {
    used_.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  const uint64_t previous = used_.fetch_add(1, std::memory_order_relaxed);
  if (previous >= max_calls_) {
    throw BudgetExceeded("request budget of " + std::to_string(max_calls_) +
                         " calls exhausted");
  }
}

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config,
                                     const BackendContext& context) {
  config.Validate();
  std::unique_ptr<Backend> backend;
  switch (config.kind) {
    case BackendKind::kHttpChat:
      backend = std::make_unique<HttpChatBackend>(config);
      break;
    case BackendKind::kMockScorer:
      backend = std::make_unique<MockScorer>(
          *config.seed, config.mock_profile, context.known_datasets,
          config.model_name.empty() ? "mock-scorer" : config.model_name);
      break;
    case BackendKind::kMockReference:
      backend = std::make_unique<MockReference>(
          *config.seed, config.mock_profile,
          config.model_name.empty() ? "mock-reference" : config.model_name);
      break;
  }
  if (context.budget) {
    return std::make_unique<BudgetedBackend>(std::move(backend),
                                             context.budget);
  }
  return backend;
}

}  // namespace promptxfer

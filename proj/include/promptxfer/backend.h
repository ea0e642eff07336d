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

#ifndef PROMPTXFER_BACKEND_H_
#define PROMPTXFER_BACKEND_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptxfer/dataset.h"

namespace promptxfer {

struct GenParams {
  double temperature = 0.0;
  int max_tokens = 256;
  std::vector<std::string> stop_sequences;
  // Per-call sampling seed. Mock backends are pure in (prompt, params, seed)
  // and use this to draw independent samples for identical prompts; the HTTP
  // client does not send it.
  uint64_t sample_seed = 0;

  // Throws ConfigError unless temperature is in [0, 2] and max_tokens >= 1.
  void Validate() const;
};

// Scorer calls are greedy; reference calls sample at temperature 1.
GenParams DefaultScorerParams();
GenParams DefaultReferenceParams();

// Shapes the offline landscape of the mock backends.
//
// keyword_accuracy keys are single tokens ("clinical") or '+'-joined token
// sets ("clinical+evidence") that only match when every token is present.
// A prompt's accuracy level is the highest matching entry, else
// base_accuracy.
struct MockProfile {
  std::map<std::string, double> keyword_accuracy;
  double base_accuracy = 0.5;
  double confidence_noise = 0.0;
  double follow_rate = 1.0;
  std::vector<std::string> mutation_vocabulary;

  void Validate() const;
};

enum class BackendKind { kHttpChat, kMockScorer, kMockReference };

std::string_view BackendKindName(BackendKind kind);
BackendKind ParseBackendKind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::kMockScorer;
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  std::chrono::milliseconds request_timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  int max_concurrency = 8;
  // Whether the endpoint returns token log-probabilities.
  bool supports_logprobs = false;
  std::optional<uint64_t> seed;
  MockProfile mock_profile;

  // Throws ConfigError; http_chat needs endpoint_url and api_key_env, mocks
  // need a seed.
  void Validate() const;
};

// Probability over an item's option letters.
struct ChoiceDistribution {
  std::map<char, double> weights;

  // Highest weight; ties resolve to the earliest letter.
  char Argmax() const;
  double Max() const;
};

// Softmax of raw per-option scores (logits or log-probabilities).
ChoiceDistribution SoftmaxOverOptions(const std::map<char, double>& scores);

// Caps the total number of backend calls in a run. A limit of 0 disables the
// cap.
class RequestBudget {
 public:
  explicit RequestBudget(uint64_t max_calls) : max_calls_(max_calls) {}

  // Throws BudgetExceeded once the limit is reached.
  void Charge();
  uint64_t used() const { return used_.load(std::memory_order_relaxed); }
  uint64_t limit() const { return max_calls_; }

 private:
  const uint64_t max_calls_;
  std::atomic<uint64_t> used_{0};
};

// A text-generating model. Implementations must be callable concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string Generate(std::string_view prompt,
                               const GenParams& params) = 0;

  // Forced-choice distribution over `item`'s options given `prompt`.
  virtual ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                               const TaskItem& item) = 0;

  virtual bool SupportsLogits() const = 0;
  virtual std::string_view model_name() const = 0;
};

struct BackendContext {
  // Shared across every backend of a run; may be null.
  std::shared_ptr<RequestBudget> budget;
  // Answer key for the mock scorer's free-text mode.
  std::vector<const Dataset*> known_datasets;
};

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config,
                                     const BackendContext& context);

}  // namespace promptxfer

#endif  // PROMPTXFER_BACKEND_H_

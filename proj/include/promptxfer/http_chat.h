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

#ifndef PROMPTXFER_HTTP_CHAT_H_
#define PROMPTXFER_HTTP_CHAT_H_

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <string_view>

#include "promptxfer/backend.h"

namespace promptxfer {

// 429 and 5xx are transient; every other non-2xx status is final.
bool IsRetriableStatus(int status);

// initial * 2^attempt, capped at `max`.
std::chrono::milliseconds BackoffDelay(int attempt,
                                       std::chrono::milliseconds initial,
                                       std::chrono::milliseconds max);

struct EndpointUrl {
  std::string scheme_host_port;  // "https://api.example.com:443"
  std::string path;              // "/v1/chat/completions"
};

// Throws ConfigError on URLs without an http(s) scheme or host.
EndpointUrl ParseEndpointUrl(std::string_view url);

// JSON body of a chat-completion request. `top_logprobs` is added when
// log-probabilities are requested; `stop` only when stop sequences exist.
std::string BuildChatRequestBody(std::string_view model,
                                 std::string_view prompt,
                                 const GenParams& params, bool logprobs);

// Blocks callers beyond `limit` concurrent holders.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit) : available_(limit) {}

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& limiter);
    ~Slot();
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter& limiter_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

// OpenAI-compatible chat-completion endpoint. The credential is read from
// the configured environment variable at construction and sent as a bearer
// token.
class HttpChatBackend : public Backend {
 public:
  // Throws ConfigError if the config is invalid or the credential variable
  // is unset; no network traffic happens here.
  explicit HttpChatBackend(BackendConfig config);

  std::string Generate(std::string_view prompt,
                       const GenParams& params) override;

  // One-token completion with log-probabilities, restricted to the item's
  // letters and renormalized.
  ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                       const TaskItem& item) override;

  bool SupportsLogits() const override { return config_.supports_logprobs; }
  std::string_view model_name() const override { return config_.model_name; }

 private:
  // Response body of a successful POST, after retries.
  std::string Post(const std::string& body);

  BackendConfig config_;
  EndpointUrl url_;
  std::string credential_;
  ConcurrencyLimiter limiter_;
};

}  // namespace promptxfer

#endif  // PROMPTXFER_HTTP_CHAT_H_

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

#include "promptxfer/http_chat.h"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "promptxfer/errors.h"

namespace promptxfer {
namespace {

using nlohmann::json;

constexpr size_t kExcerptChars = 200;
constexpr int kTopLogprobs = 20;

std::string Excerpt(std::string_view body) {
  return std::string(body.substr(0, kExcerptChars));
}

json ParseResponse(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception&) {
    throw BackendError("response is not valid JSON", 200, Excerpt(body));
  }
}

const json& FirstChoice(const json& response, const std::string& body) {
  if (!response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw BackendError("response has no choices", 200, Excerpt(body));
  }
  return response["choices"][0];
}

}  // namespace

bool IsRetriableStatus(int status) { return status == 429 || status >= 500; }

std::chrono::milliseconds BackoffDelay(int attempt,
                                       std::chrono::milliseconds initial,
                                       std::chrono::milliseconds max) {
  const int shift = std::min(attempt, 30);
  const auto scaled = initial.count() * (int64_t{1} << shift);
  return std::chrono::milliseconds(std::min<int64_t>(scaled, max.count()));
}

EndpointUrl ParseEndpointUrl(std::string_view url) {
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("endpoint_url lacks a scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("endpoint_url must use http or https: " +
                      std::string(url));
  }
  const size_t host_start = scheme_end + 3;
  size_t path_start = url.find('/', host_start);
  if (path_start == std::string_view::npos) path_start = url.size();
  if (path_start == host_start) {
    throw ConfigError("endpoint_url lacks a host: " + std::string(url));
  }
  EndpointUrl out;
  out.scheme_host_port = std::string(url.substr(0, path_start));
  out.path = path_start < url.size() ? std::string(url.substr(path_start)) : "/";
  return out;
}

std::string BuildChatRequestBody(std::string_view model,
                                 std::string_view prompt,
                                 const GenParams& params, bool logprobs) {
  json body = {
      {"model", model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
      {"logprobs", logprobs},
  };
  if (logprobs) body["top_logprobs"] = kTopLogprobs;
  if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;
  return body.dump();
}

ConcurrencyLimiter::Slot::Slot(ConcurrencyLimiter& limiter)
    : limiter_(limiter) {
  std::unique_lock lock(limiter_.mu_);
  limiter_.cv_.wait(lock, [this] { return limiter_.available_ > 0; });
  --limiter_.available_;
}

ConcurrencyLimiter::Slot::~Slot() {
  {
    std::lock_guard lock(limiter_.mu_);
    ++limiter_.available_;
  }
  limiter_.cv_.notify_one();
}

HttpChatBackend::HttpChatBackend(BackendConfig config)
    : config_(std::move(config)), limiter_(std::max(1, config_.max_concurrency)) {
  config_.Validate();
  url_ = ParseEndpointUrl(config_.endpoint_url);
  const char* value = std::getenv(config_.api_key_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("credential variable " + config_.api_key_env +
                      " is unset");
  }
  credential_ = value;
}

std::string HttpChatBackend::Post(const std::string& body) {
  const auto timeout = config_.request_timeout;
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  const httplib::Headers headers = {
      {"Authorization", "Bearer " + credential_}};

  for (int attempt = 0;; ++attempt) {
    BackendError failure("unreachable");
    {
      ConcurrencyLimiter::Slot slot(limiter_);
      httplib::Client client(url_.scheme_host_port);
      client.set_connection_timeout(seconds.count(), micros.count());
      client.set_read_timeout(seconds.count(), micros.count());
      client.set_write_timeout(seconds.count(), micros.count());
      auto res = client.Post(url_.path, headers, body, "application/json");
      if (!res) {
        failure = BackendError("request to " + config_.endpoint_url +
                               " failed: " + httplib::to_string(res.error()));
      } else if (res->status >= 200 && res->status < 300) {
        return res->body;
      } else {
        failure = BackendError("endpoint returned HTTP " +
                                   std::to_string(res->status) + ": " +
                                   Excerpt(res->body),
                               res->status, Excerpt(res->body));
        if (!IsRetriableStatus(res->status)) throw failure;
      }
    }
    if (attempt >= config_.max_retries) throw failure;
    std::this_thread::sleep_for(BackoffDelay(attempt, config_.initial_backoff,
                                             config_.max_backoff));
  }
}

std::string HttpChatBackend::Generate(std::string_view prompt,
                                      const GenParams& params) {
  if (prompt.empty()) throw BackendError("empty prompt");
  params.Validate();
  const std::string body =
      Post(BuildChatRequestBody(config_.model_name, prompt, params, false));
  const json response = ParseResponse(body);
  const json& choice = FirstChoice(response, body);
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    throw BackendError("response missing completion field", 200,
                       Excerpt(body));
  }
  return choice["message"]["content"].get<std::string>();
}

ChoiceDistribution HttpChatBackend::ScoreChoiceLogits(std::string_view prompt,
                                                      const TaskItem& item) {
  if (!config_.supports_logprobs) {
    throw BackendError("endpoint " + config_.endpoint_url +
                       " does not expose log-probabilities");
  }
  GenParams params;
  params.temperature = 0.0;
  params.max_tokens = 1;
  const std::string body =
      Post(BuildChatRequestBody(config_.model_name, prompt, params, true));
  const json response = ParseResponse(body);
  const json& choice = FirstChoice(response, body);
  const json* top = nullptr;
  if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
      choice["logprobs"].contains("content")) {
    const json& content = choice["logprobs"]["content"];
    if (content.is_array() && !content.empty() &&
        content[0].contains("top_logprobs")) {
      top = &content[0]["top_logprobs"];
    }
  }
  if (top == nullptr || !top->is_array()) {
    throw BackendError("endpoint returned no log-probabilities", 200,
                       Excerpt(body));
  }
  std::map<char, double> scores;
  for (const auto& entry : *top) {
    if (!entry.contains("token") || !entry.contains("logprob")) continue;
    std::string token = entry["token"].get<std::string>();
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                token.end());
    if (token.size() != 1 || !item.HasOption(token[0])) continue;
    const double lp = entry["logprob"].get<double>();
    auto [it, inserted] = scores.emplace(token[0], lp);
    if (!inserted) it->second = std::max(it->second, lp);
  }
  for (const auto& option : item.options) {
    if (!scores.count(option.first)) {
      throw BackendError(std::string("option letter ") + option.first +
                         " missing from returned vocabulary");
    }
  }
  return SoftmaxOverOptions(scores);
}

}  // namespace promptxfer

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

#ifndef PROMPTXFER_TESTS_SUPPORT_FIXTURES_H_
#define PROMPTXFER_TESTS_SUPPORT_FIXTURES_H_

#include <stdlib.h>

#include <atomic>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "promptxfer/backend.h"
#include "promptxfer/errors.h"
#include "promptxfer/metaprompt.h"
#include "promptxfer/mock_backend.h"
#include "promptxfer/store.h"

namespace promptxfer::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "pxf-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr)
      throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Instruction part of a scorer query.
inline std::string_view InstructionOf(std::string_view prompt) {
  size_t cut = prompt.find("\n\n");
  return cut == std::string_view::npos ? prompt : prompt.substr(0, cut);
}

inline size_t WordCount(std::string_view text) {
  size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = c == ' ' || c == '\n' || c == '\t';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// Answers every item correctly with a confidence that grows with the
// instruction's word count, so longer prompts always score higher.
class LengthRewardScorer : public Backend {
 public:
  std::string Generate(std::string_view, const GenParams&) override {
    throw BackendError("free-text scoring not supported");
  }
  ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                       const TaskItem& item) override {
    ++calls;
    double words = static_cast<double>(WordCount(InstructionOf(prompt)));
    double top = 0.5 + 0.45 * words / (words + 100.0);
    ChoiceDistribution d;
    double rest = (1.0 - top) / static_cast<double>(item.options.size() - 1);
    for (const auto& [letter, text] : item.options)
      d.weights[letter] = letter == item.gold ? top : rest;
    return d;
  }
  bool SupportsLogits() const override { return true; }
  std::string_view model_name() const override { return "length-reward"; }

  std::atomic<size_t> calls{0};
};

// Same distribution for every prompt.
class ConstantScorer : public Backend {
 public:
  std::string Generate(std::string_view, const GenParams&) override {
    ++calls;
    return "Answer: A, Confidence: 0.6";
  }
  ChoiceDistribution ScoreChoiceLogits(std::string_view,
                                       const TaskItem& item) override {
    ++calls;
    ChoiceDistribution d;
    for (const auto& [letter, text] : item.options)
      d.weights[letter] = letter == 'A' ? 0.6 : 0.4 / (item.options.size() - 1);
    return d;
  }
  bool SupportsLogits() const override { return true; }
  std::string_view model_name() const override { return "constant"; }

  std::atomic<size_t> calls{0};
};

// Appends one short token to the longest prompt in the rendered history.
class AppendingReference : public Backend {
 public:
  std::string Generate(std::string_view prompt,
                       const GenParams& params) override {
    ++calls;
    std::vector<HistoryEntry> history = ParseHistory(prompt);
    if (history.empty()) throw BackendError("no history in prompt");
    const HistoryEntry* longest = &history.front();
    for (const auto& h : history) {
      if (WordCount(h.text) > WordCount(longest->text)) longest = &h;
    }
    static constexpr std::string_view kTokens[] = {"a", "b", "c", "d",
                                                   "e", "f", "g", "h"};
    return "[" + longest->text + " " +
           std::string(kTokens[params.sample_seed % 8]) + "]";
  }
  ChoiceDistribution ScoreChoiceLogits(std::string_view,
                                       const TaskItem&) override {
    throw BackendError("reference backend has no forced choice");
  }
  bool SupportsLogits() const override { return false; }
  std::string_view model_name() const override { return "appending"; }

  std::atomic<size_t> calls{0};
};

// Replays fixed completions in call order (single-threaded use only).
class ScriptedReference : public Backend {
 public:
  explicit ScriptedReference(std::vector<std::string> script)
      : script_(std::move(script)) {}
  std::string Generate(std::string_view prompt, const GenParams&) override {
    last_prompt = std::string(prompt);
    if (next_ >= script_.size()) throw BackendError("script exhausted");
    return script_[next_++];
  }
  ChoiceDistribution ScoreChoiceLogits(std::string_view,
                                       const TaskItem&) override {
    throw BackendError("reference backend has no forced choice");
  }
  bool SupportsLogits() const override { return false; }
  std::string_view model_name() const override { return "scripted"; }

  std::string last_prompt;

 private:
  std::vector<std::string> script_;
  size_t next_ = 0;
};

// A step entry with the timing field cleared, for transcript comparison.
inline nlohmann::json Transcript(const std::vector<StepEntry>& log) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : log) {
    nlohmann::json j = StepEntryToJson(e);
    j.erase("wall_time_seconds");
    out.push_back(std::move(j));
  }
  return out;
}

// Collects every step in memory.
class RecordingSink : public StepSink {
 public:
  void OnStep(const StepEntry& entry, const OptimizerState&) override {
    log.push_back(entry);
  }
  std::vector<StepEntry> log;
};

inline std::filesystem::path DemoDir() { return PROMPTXFER_DEMO_DIR; }

}  // namespace promptxfer::testing

#endif  // PROMPTXFER_TESTS_SUPPORT_FIXTURES_H_

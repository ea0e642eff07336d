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

#ifndef PROMPTXFER_MOCK_BACKEND_H_
#define PROMPTXFER_MOCK_BACKEND_H_

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptxfer/backend.h"

namespace promptxfer {

// Offline scorer with a plantable landscape. Every outcome is a hash of
// (seed, set of profile keywords present in the instruction, item id), so
// prompts that share a keyword set score identically.
//
// A prompt's accuracy level L comes from the profile. Per item:
//   correct    iff draw < L
//   follows    iff draw < follow_rate
//   confidence L + noise * (2u - 1) when correct, L - noise * u when wrong,
//              clipped to [0, 1]
// so errors sit on the low side of the noise band.
class MockScorer : public Backend {
 public:
  struct Outcome {
    bool followed = false;
    bool correct = false;
    char letter = 'A';
    double confidence = 0.0;
  };

  MockScorer(uint64_t seed, MockProfile profile,
             const std::vector<const Dataset*>& known_datasets,
             std::string model_name = "mock-scorer");

  // Free-text answer for the item rendered at the end of `prompt`.
  std::string Generate(std::string_view prompt,
                       const GenParams& params) override;

  // Forced choice: the outcome letter gets weight 1/k + (1 - 1/k) * conf and
  // the other letters share the rest evenly.
  ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                       const TaskItem& item) override;

  bool SupportsLogits() const override { return true; }
  std::string_view model_name() const override { return model_name_; }

  // Profile keywords whose tokens all occur in the instruction part of
  // `prompt`, as a sorted token set.
  std::set<std::string> PresentKeywordTokens(std::string_view prompt) const;
  double AccuracyLevel(const std::set<std::string>& present) const;
  Outcome Decide(std::string_view prompt, const TaskItem& item) const;

 private:
  const TaskItem* FindItem(std::string_view prompt) const;

  uint64_t seed_;
  MockProfile profile_;
  std::string model_name_;
  std::set<std::string> keyword_tokens_;
  std::vector<std::pair<std::vector<std::string>, double>> keyword_sets_;
  std::unordered_map<std::string, TaskItem> items_by_block_;
};

// Offline proposer: copies the best-scored prompt of the rendered history and
// inserts or substitutes one token from the mutation vocabulary. The edit is
// a hash of (seed, params.sample_seed).
class MockReference : public Backend {
 public:
  MockReference(uint64_t seed, MockProfile profile,
                std::string model_name = "mock-reference");

  std::string Generate(std::string_view prompt,
                       const GenParams& params) override;
  ChoiceDistribution ScoreChoiceLogits(std::string_view prompt,
                                       const TaskItem& item) override;
  bool SupportsLogits() const override { return false; }
  std::string_view model_name() const override { return model_name_; }

 private:
  uint64_t seed_;
  MockProfile profile_;
  std::string model_name_;
};

// Lowercased alphanumeric runs of `text`.
std::vector<std::string> WordTokens(std::string_view text);

}  // namespace promptxfer

#endif  // PROMPTXFER_MOCK_BACKEND_H_

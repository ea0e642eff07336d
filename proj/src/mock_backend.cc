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

#include "promptxfer/mock_backend.h"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "promptxfer/errors.h"
#include "promptxfer/evaluator.h"
#include "promptxfer/hashing.h"
#include "promptxfer/metaprompt.h"

namespace promptxfer {
namespace {

std::vector<std::string> SplitKeyword(std::string_view key) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= key.size()) {
    size_t end = key.find('+', start);
    if (end == std::string_view::npos) end = key.size();
    auto tokens = WordTokens(key.substr(start, end - start));
    parts.insert(parts.end(), tokens.begin(), tokens.end());
    start = end + 1;
  }
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  return parts;
}

std::string_view InstructionPart(std::string_view prompt) {
  const size_t cut = prompt.find("\n\nQuestion: ");
  return cut == std::string_view::npos ? prompt : prompt.substr(0, cut);
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

MockScorer::MockScorer(uint64_t seed, MockProfile profile,
                       const std::vector<const Dataset*>& known_datasets,
                       std::string model_name)
    : seed_(seed),
      profile_(std::move(profile)),
      model_name_(std::move(model_name)) {
  profile_.Validate();
  for (const auto& [key, level] : profile_.keyword_accuracy) {
    auto tokens = SplitKeyword(key);
    if (tokens.empty()) {
      throw ConfigError("mock keyword \"" + key + "\" has no word tokens");
    }
    keyword_tokens_.insert(tokens.begin(), tokens.end());
    keyword_sets_.emplace_back(std::move(tokens), level);
  }
  for (const Dataset* dataset : known_datasets) {
    for (const auto& item : dataset->items()) {
      items_by_block_.emplace(RenderItemBlock(item), item);
    }
  }
}

std::set<std::string> MockScorer::PresentKeywordTokens(
    std::string_view prompt) const {
  std::set<std::string> present;
  for (auto& token : WordTokens(InstructionPart(prompt))) {
    if (keyword_tokens_.count(token)) present.insert(std::move(token));
  }
  return present;
}

double MockScorer::AccuracyLevel(const std::set<std::string>& present) const {
  bool matched = false;
  double level = 0.0;
  for (const auto& [tokens, accuracy] : keyword_sets_) {
    const bool all = std::all_of(tokens.begin(), tokens.end(),
                                 [&](const std::string& t) {
                                   return present.count(t) > 0;
                                 });
    if (all && (!matched || accuracy > level)) {
      level = accuracy;
      matched = true;
    }
  }
  return matched ? level : profile_.base_accuracy;
}

MockScorer::Outcome MockScorer::Decide(std::string_view prompt,
                                       const TaskItem& item) const {
  const auto present = PresentKeywordTokens(prompt);
  const double level = AccuracyLevel(present);
  std::string signature;
  for (const auto& t : present) signature += t + ",";
  const uint64_t key =
      HashCombine(HashCombine(seed_, signature), std::string_view(item.id));

  Outcome out;
  out.followed = UnitDraw(HashCombine(key, 1)) < profile_.follow_rate;
  out.correct = UnitDraw(HashCombine(key, 2)) < level;
  const double u = UnitDraw(HashCombine(key, 3));
  const double noise = profile_.confidence_noise;
  const double raw = out.correct ? level + noise * (2.0 * u - 1.0)
                                 : level - noise * u;
  out.confidence = std::clamp(raw, 0.0, 1.0);
  if (out.correct) {
    out.letter = item.gold;
  } else {
    std::string wrong;
    for (const auto& entry : item.options) {
      if (entry.first != item.gold) wrong.push_back(entry.first);
    }
    out.letter = wrong[HashCombine(key, 4) % wrong.size()];
  }
  return out;
}

const TaskItem* MockScorer::FindItem(std::string_view prompt) const {
  const size_t start = prompt.rfind("Question: ");
  if (start == std::string_view::npos) return nullptr;
  size_t end = prompt.size();
  for (ConfidenceMode mode :
       {ConfidenceMode::kVerbalized, ConfidenceMode::kLogits}) {
    const auto directive = DirectiveFor(mode);
    if (prompt.size() >= directive.size() &&
        prompt.substr(prompt.size() - directive.size()) == directive) {
      end = prompt.size() - directive.size();
      break;
    }
  }
  if (end < start) return nullptr;
  auto it = items_by_block_.find(std::string(prompt.substr(start, end - start)));
  return it == items_by_block_.end() ? nullptr : &it->second;
}

std::string MockScorer::Generate(std::string_view prompt,
                                 const GenParams& params) {
  params.Validate();
  const TaskItem* item = FindItem(prompt);
  if (item == nullptr) return "I could not find a question to answer.";
  const Outcome out = Decide(prompt, *item);
  if (!out.followed) {
    char other = out.letter == 'A' ? 'B' : 'A';
    return fmt::format("I think the answer is probably {} or {}.",
                       std::min(out.letter, other),
                       std::max(out.letter, other));
  }
  return fmt::format("Answer: {}, Confidence: {}", out.letter, out.confidence);
}

ChoiceDistribution MockScorer::ScoreChoiceLogits(std::string_view prompt,
                                                 const TaskItem& item) {
  const Outcome out = Decide(prompt, item);
  const double k = static_cast<double>(item.options.size());
  const double chosen = 1.0 / k + (1.0 - 1.0 / k) * out.confidence;
  const double rest = (1.0 - chosen) / (k - 1.0);
  ChoiceDistribution dist;
  double total = 0.0;
  for (const auto& entry : item.options) {
    const double w = entry.first == out.letter ? chosen : rest;
    dist.weights[entry.first] = w;
    total += w;
  }
  for (auto& entry : dist.weights) entry.second /= total;
  return dist;
}

MockReference::MockReference(uint64_t seed, MockProfile profile,
                             std::string model_name)
    : seed_(seed),
      profile_(std::move(profile)),
      model_name_(std::move(model_name)) {
  profile_.Validate();
}

std::string MockReference::Generate(std::string_view prompt,
                                    const GenParams& params) {
  params.Validate();
  const auto history = ParseHistory(prompt);
  if (history.empty()) {
    throw BackendError("mock reference: prompt carries no scored history");
  }
  // History is rendered best-last; the last maximal entry is the best.
  const HistoryEntry* best = &history.front();
  for (const auto& entry : history) {
    if (entry.score >= best->score) best = &entry;
  }
  auto words = SplitWhitespace(best->text);
  const auto& vocab = profile_.mutation_vocabulary;
  if (!vocab.empty()) {
    const uint64_t key = HashCombine(seed_, params.sample_seed);
    const std::string& token = vocab[HashCombine(key, 1) % vocab.size()];
    const bool insert = words.empty() || UnitDraw(HashCombine(key, 2)) < 0.5;
    if (insert) {
      const size_t pos = HashCombine(key, 3) % (words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), token);
    } else {
      words[HashCombine(key, 3) % words.size()] = token;
    }
  }
  return "Here is a new instruction: [" + Join(words) + "]";
}

ChoiceDistribution MockReference::ScoreChoiceLogits(std::string_view,
                                                    const TaskItem&) {
  throw BackendError("mock reference backend does not score options");
}

}  // namespace promptxfer

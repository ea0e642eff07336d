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

#ifndef PROMPTXFER_EVALUATOR_H_
#define PROMPTXFER_EVALUATOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptxfer/backend.h"
#include "promptxfer/dataset.h"
#include "promptxfer/metrics.h"

namespace promptxfer {

enum class ConfidenceMode { kLogits, kVerbalized };

std::string_view ConfidenceModeName(ConfidenceMode mode);
ConfidenceMode ParseConfidenceMode(std::string_view name);

inline constexpr std::string_view kInsMarker = "<INS>";

// Scorer query layout, versioned so stored runs can be tied to the exact
// text the scorer saw.
inline constexpr std::string_view kQueryTemplateVersion = "mcq-query-v1";
inline constexpr std::string_view kQueryTemplate =
    "<INS>\n\n{EXEMPLARS}{ITEM}{DIRECTIVE}";
inline constexpr std::string_view kVerbalizedDirective =
    "Respond in the format: Answer: <letter>, Confidence: <number between 0 "
    "and 1>";
inline constexpr std::string_view kLogitsDirective = "Answer:";

std::string_view DirectiveFor(ConfidenceMode mode);

// "Question: <q>\nA. <opt>\n...\n"
std::string RenderItemBlock(const TaskItem& item);

// Instruction, then solved exemplar blocks, then the item, then the
// answer-format directive. Throws TemplateError if `instruction` is empty or
// contains the <INS> marker.
std::string RenderQuery(std::string_view instruction, const TaskItem& item,
                        std::span<const TaskItem> exemplars,
                        ConfidenceMode mode);

struct ParsedResponse {
  std::optional<char> letter;
  std::optional<double> confidence;

  // Logits-style answers need only the letter; verbalized ones need both.
  bool Followed(ConfidenceMode mode) const {
    return letter.has_value() &&
           (mode == ConfidenceMode::kLogits || confidence.has_value());
  }
};

// Case-insensitive scan for "Answer: <letter>" and "Confidence: <number>".
// Never throws.
ParsedResponse ParseResponse(std::string_view text);

struct EvalOptions {
  ConfidenceMode mode = ConfidenceMode::kLogits;
  std::vector<TaskItem> exemplars;
  uint64_t eval_seed = 0;
  // OpenMP worker count; 0 uses the runtime default.
  int workers = 0;
  GenParams scorer_params = DefaultScorerParams();
  int n_bins = kDefaultEceBins;
  MetricWeights weights = DefaultWeights();
};

struct EvalResult {
  std::string prompt_text;
  std::string dataset_name;
  std::vector<ItemRecord> records;
  MetricVector metrics;
  CompositeScore composite;
  ConfidenceMode mode = ConfidenceMode::kLogits;
  size_t scorer_calls = 0;
};

// Scores one item: the per-item kernel shared by both evaluation paths.
ItemRecord ScoreItem(std::string_view instruction, const TaskItem& item,
                     size_t index, Backend& scorer,
                     const EvalOptions& options);

// Evaluates `instruction` on every item of `dataset`, scoring items in
// parallel. Records come back in dataset order, so the result is identical
// for any worker count. Backend errors propagate tagged with the item id
// and no partial result is returned.
EvalResult EvaluatePrompt(std::string_view instruction, const Dataset& dataset,
                          Backend& scorer, const EvalOptions& options);

// Single-threaded reference implementation of EvaluatePrompt.
EvalResult EvaluatePromptSerial(std::string_view instruction,
                                const Dataset& dataset, Backend& scorer,
                                const EvalOptions& options);

}  // namespace promptxfer

#endif  // PROMPTXFER_EVALUATOR_H_

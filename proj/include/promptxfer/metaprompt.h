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

#ifndef PROMPTXFER_METAPROMPT_H_
#define PROMPTXFER_METAPROMPT_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptxfer/dataset.h"
#include "promptxfer/metrics.h"

namespace promptxfer {

using Stage = TaskRole;

// Score of one prompt on one dataset.
struct DatasetScore {
  std::string dataset_name;
  MetricVector metrics;
  double composite = 0.0;
};

// A candidate instruction with its score and lineage. `composite` is the
// uniform mean of the per-dataset composites in `scores`.
struct PromptRecord {
  std::string id;
  std::string text;
  double composite = 0.0;
  std::vector<DatasetScore> scores;
  Stage stage = Stage::kSource;
  int step = 0;
  std::vector<std::string> parent_ids;

  // Fills `id` from `text`.
  static PromptRecord FromText(std::string text, double composite,
                               Stage stage = Stage::kSource, int step = 0);

  // Throws std::invalid_argument if the text is invalid, the id is stale, or
  // the composite does not match a recomputation from `scores`. Records
  // without scores (imported or fixture history) skip the recomputation.
  void Validate(const MetricWeights& weights = DefaultWeights()) const;
};

using PromptPool = std::vector<PromptRecord>;

// Stable 16-hex-digit id of a prompt text.
std::string PromptId(std::string_view text);

// Mean of the per-dataset composites, summed in order.
double MeanComposite(std::span<const DatasetScore> scores);

// Orders by composite descending, ties by id ascending.
void SortByCompositeDescending(PromptPool& pool);

// Throws CandidateRejected(kMalformed) when `text` contains <INS> or has
// unbalanced square brackets.
void ValidatePromptText(std::string_view text);
bool HasBalancedBrackets(std::string_view text);

// A reference-prompt template. The text holds {HISTORY} and {EXEMPLARS}
// exactly once each and may hold {TASK_DESCRIPTION}; the footer (text after
// the last slot) must ask for a bracketed instruction.
struct MetaPromptTemplate {
  std::string id;
  std::string text;

  // Throws TemplateError.
  static MetaPromptTemplate Parse(std::string id, std::string text);
  std::string_view footer() const;
};

inline constexpr std::string_view kPalmStyleTemplateId = "palm-style";
inline constexpr std::string_view kGptStyleTemplateId = "gpt-style";

// Shipped templates; throws TemplateError for an unknown id.
const MetaPromptTemplate& BuiltinTemplate(std::string_view id);
MetaPromptTemplate LoadTemplateFile(std::string id,
                                    const std::filesystem::path& path);

inline constexpr size_t kDefaultTopK = 20;
inline constexpr size_t kDefaultMetaExemplars = 3;
inline constexpr size_t kDefaultCandidateCap = 500;

// floor(100 * composite), guarded against products such as
// 100 * 0.57 = 56.999999999999993.
int ScorePercent(double composite);

// Keeps the top_k highest composites and renders them ascending (best last,
// ties by id) as "text: <instruction>\nscore: <percent>" blocks separated by
// blank lines.
std::string RenderHistory(std::span<const PromptRecord> history,
                          size_t top_k);

// Solved examples with <INS> at the instruction slot.
std::string RenderMetaExemplars(std::span<const TaskItem> exemplars);

// Throws TemplateError on empty history or top_k == 0.
std::string BuildReferencePrompt(std::span<const PromptRecord> history,
                                 std::span<const TaskItem> exemplars,
                                 const MetaPromptTemplate& tmpl, size_t top_k,
                                 std::string_view task_description = {});

struct HistoryEntry {
  std::string text;
  int score = 0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// Recovers the (text, score) pairs rendered by RenderHistory.
std::vector<HistoryEntry> ParseHistory(std::string_view prompt);

// Content of the first balanced [...] span that is non-empty after
// trimming, else the whole completion trimmed; one layer of surrounding
// quotes is removed. Throws CandidateRejected when the result is empty,
// longer than `max_chars`, or malformed.
std::string ExtractCandidate(std::string_view completion,
                             size_t max_chars = kDefaultCandidateCap);

// Case-folded with whitespace runs collapsed; the dedupe key.
std::string NormalizePromptText(std::string_view text);

// Drops records whose normalized text repeats an earlier one, keeping the
// higher-composite copy at the earlier position.
PromptPool Dedupe(PromptPool pool);

}  // namespace promptxfer

#endif  // PROMPTXFER_METAPROMPT_H_

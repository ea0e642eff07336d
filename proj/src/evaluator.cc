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

#include "promptxfer/evaluator.h"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <exception>

#include "promptxfer/errors.h"
#include "promptxfer/hashing.h"

namespace promptxfer {
namespace {

bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

size_t SkipSpaces(std::string_view s, size_t pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  return pos;
}

// Position just past "<keyword> :" with optional blanks, or npos.
size_t FieldValueStart(std::string_view lower, std::string_view keyword,
                       size_t from) {
  size_t pos = lower.find(keyword, from);
  if (pos == std::string_view::npos) return pos;
  if (pos > 0 && IsAlnum(lower[pos - 1])) return FieldValueStart(lower, keyword, pos + 1);
  size_t p = SkipSpaces(lower, pos + keyword.size());
  if (p >= lower.size() || lower[p] != ':') {
    return FieldValueStart(lower, keyword, pos + 1);
  }
  return SkipSpaces(lower, p + 1);
}

std::optional<char> ParseLetter(std::string_view lower) {
  size_t from = 0;
  while (true) {
    size_t p = FieldValueStart(lower, "answer", from);
    if (p == std::string_view::npos) return std::nullopt;
    from = p;
    bool paren = p < lower.size() && lower[p] == '(';
    if (paren) ++p;
    if (p < lower.size() && lower[p] >= 'a' && lower[p] <= 'e') {
      const size_t next = p + 1;
      const bool standalone = next >= lower.size() || !IsAlnum(lower[next]);
      if (standalone) return static_cast<char>(lower[p] - 'a' + 'A');
    }
  }
}

std::optional<double> ParseConfidence(std::string_view lower) {
  size_t from = 0;
  while (true) {
    size_t p = FieldValueStart(lower, "confidence", from);
    if (p == std::string_view::npos) return std::nullopt;
    from = p;
    size_t end = p;
    while (end < lower.size() &&
           (std::isdigit(static_cast<unsigned char>(lower[end])) ||
            lower[end] == '.')) {
      ++end;
    }
    if (end == p) continue;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(lower.data() + p, lower.data() + end,
                                     value, std::chars_format::fixed);
    if (ec != std::errc() || ptr != lower.data() + end) continue;
    const size_t after = SkipSpaces(lower, end);
    const bool percent = after < lower.size() && lower[after] == '%';
    if (percent) {
      if (value >= 0.0 && value <= 100.0) return value / 100.0;
      return std::nullopt;
    }
    if (value <= 1.0) return value;
    if (value <= 100.0) return value / 100.0;
    return std::nullopt;
  }
}

void CheckInstruction(std::string_view instruction) {
  if (instruction.empty()) throw TemplateError("empty instruction");
  if (instruction.find(kInsMarker) != std::string_view::npos) {
    throw TemplateError("instruction contains the reserved marker <INS>");
  }
}

[[noreturn]] void RethrowTagged(const std::string& item_id) {
  try {
    throw;
  } catch (const BudgetExceeded& e) {
    throw BudgetExceeded("item " + item_id + ": " + e.what(), e.status(),
                         e.body_excerpt());
  } catch (const BackendError& e) {
    throw BackendError("item " + item_id + ": " + e.what(), e.status(),
                       e.body_excerpt());
  }
}

}  // namespace

std::string_view ConfidenceModeName(ConfidenceMode mode) {
  return mode == ConfidenceMode::kLogits ? "logits" : "verbalized";
}

ConfidenceMode ParseConfidenceMode(std::string_view name) {
  if (name == "logits") return ConfidenceMode::kLogits;
  if (name == "verbalized") return ConfidenceMode::kVerbalized;
  throw ConfigError("unknown confidence mode \"" + std::string(name) + "\"");
}

std::string_view DirectiveFor(ConfidenceMode mode) {
  return mode == ConfidenceMode::kLogits ? kLogitsDirective
                                         : kVerbalizedDirective;
}

std::string RenderItemBlock(const TaskItem& item) {
  std::string out = "Question: " + item.question + "\n";
  for (const auto& [letter, text] : item.options) {
    out += letter;
    out += ". ";
    out += text;
    out += '\n';
  }
  return out;
}

std::string RenderQuery(std::string_view instruction, const TaskItem& item,
                        std::span<const TaskItem> exemplars,
                        ConfidenceMode mode) {
  CheckInstruction(instruction);
  std::string solved;
  for (const auto& ex : exemplars) {
    solved += RenderItemBlock(ex);
    solved += "Answer: ";
    solved += ex.gold;
    solved += "\n\n";
  }
  std::string out(kQueryTemplate);
  auto replace = [&out](std::string_view slot, std::string_view text) {
    out.replace(out.find(slot), slot.size(), text);
  };
  replace(kInsMarker, instruction);
  replace("{EXEMPLARS}", solved);
  replace("{ITEM}", RenderItemBlock(item));
  replace("{DIRECTIVE}", DirectiveFor(mode));
  return out;
}

ParsedResponse ParseResponse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return {ParseLetter(lower), ParseConfidence(lower)};
}

ItemRecord ScoreItem(std::string_view instruction, const TaskItem& item,
                     size_t index, Backend& scorer,
                     const EvalOptions& options) {
  const std::string query =
      RenderQuery(instruction, item, options.exemplars, options.mode);
  try {
    if (options.mode == ConfidenceMode::kLogits) {
      const ChoiceDistribution dist = scorer.ScoreChoiceLogits(query, item);
      for (const auto& entry : item.options) {
        if (!dist.weights.count(entry.first)) {
          throw BackendError(std::string("option letter ") + entry.first +
                             " missing from scorer distribution");
        }
      }
      const char letter = dist.Argmax();
      const double confidence = std::clamp(dist.weights.at(letter), 0.0, 1.0);
      return ItemRecord::Answered(item.id, letter, letter == item.gold,
                                  confidence);
    }
    GenParams params = options.scorer_params;
    params.sample_seed = HashCombine(options.eval_seed, index);
    const ParsedResponse parsed =
        ParseResponse(scorer.Generate(query, params));
    if (!parsed.Followed(options.mode) || !item.HasOption(*parsed.letter)) {
      return ItemRecord::Unfollowed(item.id);
    }
    return ItemRecord::Answered(item.id, *parsed.letter,
                                *parsed.letter == item.gold,
                                *parsed.confidence);
  } catch (const BackendError&) {
    RethrowTagged(item.id);
  }
}

namespace internal {

EvalResult FinishEvaluation(std::string_view instruction,
                            const Dataset& dataset,
                            std::vector<ItemRecord> records,
                            const EvalOptions& options) {
  EvalResult result;
  result.prompt_text = std::string(instruction);
  result.dataset_name = dataset.name();
  result.mode = options.mode;
  result.scorer_calls = records.size();
  result.metrics = ComputeMetrics(records, options.n_bins);
  result.composite = NormalizeAndCompose(result.metrics, options.weights);
  result.records = std::move(records);
  return result;
}

}  // namespace internal

EvalResult EvaluatePrompt(std::string_view instruction, const Dataset& dataset,
                          Backend& scorer, const EvalOptions& options) {
  CheckInstruction(instruction);
  const auto n = static_cast<std::ptrdiff_t>(dataset.size());
  std::vector<ItemRecord> records(dataset.size());
  std::vector<std::exception_ptr> errors(dataset.size());
  std::atomic<bool> failed{false};
  const int workers =
      options.workers > 0 ? options.workers : omp_get_max_threads();

#pragma omp parallel for num_threads(workers) schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      records[i] = ScoreItem(instruction, dataset[i], static_cast<size_t>(i),
                             scorer, options);
    } catch (...) {
      errors[i] = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return internal::FinishEvaluation(instruction, dataset, std::move(records),
                                    options);
}

}  // namespace promptxfer

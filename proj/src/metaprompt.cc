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

#include "promptxfer/metaprompt.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "promptxfer/errors.h"
#include "promptxfer/evaluator.h"
#include "promptxfer/hashing.h"

namespace promptxfer {
namespace {

constexpr std::string_view kHistorySlot = "{HISTORY}";
constexpr std::string_view kExemplarSlot = "{EXEMPLARS}";
constexpr std::string_view kTaskSlot = "{TASK_DESCRIPTION}";

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

size_t CountOccurrences(std::string_view text, std::string_view needle) {
  size_t n = 0;
  for (size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view StripQuotes(std::string_view s) {
  constexpr std::string_view kOpenCurly = "\xE2\x80\x9C";
  constexpr std::string_view kCloseCurly = "\xE2\x80\x9D";
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') &&
      s.back() == s.front()) {
    return Trim(s.substr(1, s.size() - 2));
  }
  if (s.size() >= 6 && s.substr(0, 3) == kOpenCurly &&
      s.substr(s.size() - 3) == kCloseCurly) {
    return Trim(s.substr(3, s.size() - 6));
  }
  return s;
}

bool IsScoreLine(std::string_view line, int* score) {
  constexpr std::string_view kPrefix = "score: ";
  if (line.substr(0, kPrefix.size()) != kPrefix) return false;
  auto digits = line.substr(kPrefix.size());
  if (digits.empty() || digits.size() > 9) return false;
  int value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    value = value * 10 + (c - '0');
  }
  *score = value;
  return true;
}

std::vector<const PromptRecord*> TopKAscending(
    std::span<const PromptRecord> history, size_t top_k) {
  std::vector<const PromptRecord*> sorted;
  sorted.reserve(history.size());
  for (const auto& r : history) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const PromptRecord* a, const PromptRecord* b) {
              if (a->composite != b->composite) {
                return a->composite > b->composite;
              }
              return a->id < b->id;
            });
  if (sorted.size() > top_k) sorted.resize(top_k);
  std::sort(sorted.begin(), sorted.end(),
            [](const PromptRecord* a, const PromptRecord* b) {
              if (a->composite != b->composite) {
                return a->composite < b->composite;
              }
              return a->id < b->id;
            });
  return sorted;
}

}  // namespace

std::string PromptId(std::string_view text) {
  return HexId(SplitMix64(Fnv1a64(text)));
}

PromptRecord PromptRecord::FromText(std::string text, double composite,
                                    Stage stage, int step) {
  PromptRecord r;
  r.id = PromptId(text);
  r.text = std::move(text);
  r.composite = composite;
  r.stage = stage;
  r.step = step;
  return r;
}

double MeanComposite(std::span<const DatasetScore> scores) {
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : scores) sum += s.composite;
  return sum / static_cast<double>(scores.size());
}

void PromptRecord::Validate(const MetricWeights& weights) const {
  if (Trim(text).empty()) throw std::invalid_argument("empty prompt text");
  try {
    ValidatePromptText(text);
  } catch (const CandidateRejected& e) {
    throw std::invalid_argument(e.what());
  }
  if (id != PromptId(text)) {
    throw std::invalid_argument("prompt id does not match its text");
  }
  if (scores.empty()) return;
  for (const auto& s : scores) {
    if (NormalizeAndCompose(s.metrics, weights).value != s.composite) {
      throw std::invalid_argument("composite for dataset " + s.dataset_name +
                                  " does not match its metrics");
    }
  }
  if (MeanComposite(scores) != composite) {
    throw std::invalid_argument("prompt composite is not the dataset mean");
  }
}

void SortByCompositeDescending(PromptPool& pool) {
  std::sort(pool.begin(), pool.end(),
            [](const PromptRecord& a, const PromptRecord& b) {
              if (a.composite != b.composite) return a.composite > b.composite;
              return a.id < b.id;
            });
}

bool HasBalancedBrackets(std::string_view text) {
  int depth = 0;
  for (char c : text) {
    if (c == '[') ++depth;
    if (c == ']' && --depth < 0) return false;
  }
  return depth == 0;
}

void ValidatePromptText(std::string_view text) {
  if (text.find(kInsMarker) != std::string_view::npos) {
    throw CandidateRejected(CandidateRejected::Reason::kMalformed,
                            "prompt contains the reserved marker <INS>");
  }
  if (!HasBalancedBrackets(text)) {
    throw CandidateRejected(CandidateRejected::Reason::kMalformed,
                            "prompt has unbalanced square brackets");
  }
}

MetaPromptTemplate MetaPromptTemplate::Parse(std::string id,
                                             std::string text) {
  if (CountOccurrences(text, kHistorySlot) != 1) {
    throw TemplateError("template " + id + ": {HISTORY} must occur once");
  }
  if (CountOccurrences(text, kExemplarSlot) != 1) {
    throw TemplateError("template " + id + ": {EXEMPLARS} must occur once");
  }
  MetaPromptTemplate t{std::move(id), std::move(text)};
  std::string footer(t.footer());
  std::transform(footer.begin(), footer.end(), footer.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (footer.find("bracket") == std::string::npos) {
    throw TemplateError("template " + t.id +
                        ": footer must ask for a bracketed instruction");
  }
  return t;
}

std::string_view MetaPromptTemplate::footer() const {
  const size_t end = std::max(text.find(kHistorySlot) + kHistorySlot.size(),
                              text.find(kExemplarSlot) + kExemplarSlot.size());
  return Trim(std::string_view(text).substr(end));
}

MetaPromptTemplate LoadTemplateFile(std::string id,
                                    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read template file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return MetaPromptTemplate::Parse(std::move(id), buffer.str());
}

int ScorePercent(double composite) {
  return static_cast<int>(std::floor(100.0 * composite + 1e-9));
}

std::string RenderHistory(std::span<const PromptRecord> history,
                          size_t top_k) {
  std::string out;
  for (const PromptRecord* r : TopKAscending(history, top_k)) {
    if (!out.empty()) out += "\n\n";
    out += "text: ";
    out += r->text;
    out += "\nscore: ";
    out += std::to_string(ScorePercent(r->composite));
  }
  return out;
}

std::string RenderMetaExemplars(std::span<const TaskItem> exemplars) {
  std::string out;
  for (const auto& item : exemplars) {
    if (!out.empty()) out += "\n\n";
    out += "input:\n";
    out += kInsMarker;
    out += '\n';
    out += RenderItemBlock(item);
    out += "output:\n";
    out += item.gold;
  }
  return out;
}

std::string BuildReferencePrompt(std::span<const PromptRecord> history,
                                 std::span<const TaskItem> exemplars,
                                 const MetaPromptTemplate& tmpl, size_t top_k,
                                 std::string_view task_description) {
  if (history.empty()) throw TemplateError("reference prompt needs history");
  if (top_k == 0) throw TemplateError("top_k must be >= 1");
  const std::string history_text = RenderHistory(history, top_k);
  const std::string exemplar_text = RenderMetaExemplars(exemplars);

  // Single left-to-right pass so substituted text is never rescanned.
  std::string out;
  std::string_view rest = tmpl.text;
  while (!rest.empty()) {
    const size_t brace = rest.find('{');
    if (brace == std::string_view::npos) {
      out += rest;
      break;
    }
    out += rest.substr(0, brace);
    rest.remove_prefix(brace);
    if (rest.starts_with(kHistorySlot)) {
      out += history_text;
      rest.remove_prefix(kHistorySlot.size());
    } else if (rest.starts_with(kExemplarSlot)) {
      out += exemplar_text;
      rest.remove_prefix(kExemplarSlot.size());
    } else if (rest.starts_with(kTaskSlot)) {
      out += task_description;
      rest.remove_prefix(kTaskSlot.size());
    } else {
      out += '{';
      rest.remove_prefix(1);
    }
  }
  return out;
}

std::vector<HistoryEntry> ParseHistory(std::string_view prompt) {
  std::vector<HistoryEntry> entries;
  bool open = false;
  std::string text;
  size_t pos = 0;
  while (pos <= prompt.size()) {
    size_t eol = prompt.find('\n', pos);
    if (eol == std::string_view::npos) eol = prompt.size();
    const std::string_view line = prompt.substr(pos, eol - pos);
    int score = 0;
    if (!open && line.starts_with("text: ")) {
      open = true;
      text = std::string(line.substr(6));
    } else if (open && IsScoreLine(line, &score)) {
      entries.push_back({std::move(text), score});
      text.clear();
      open = false;
    } else if (open) {
      text += '\n';
      text += line;
    }
    pos = eol + 1;
  }
  return entries;
}

std::string ExtractCandidate(std::string_view completion, size_t max_chars) {
  using Reason = CandidateRejected::Reason;
  const std::string_view trimmed = Trim(completion);
  if (trimmed.empty()) throw CandidateRejected(Reason::kEmpty, "empty completion");

  std::string_view candidate;
  bool found_span = false;
  std::vector<size_t> open;
  for (size_t i = 0; i < trimmed.size() && candidate.empty(); ++i) {
    if (trimmed[i] == '[') {
      open.push_back(i);
    } else if (trimmed[i] == ']' && !open.empty()) {
      const size_t start = open.back();
      open.pop_back();
      if (!open.empty()) continue;
      found_span = true;
      candidate = Trim(trimmed.substr(start + 1, i - start - 1));
    }
  }
  if (candidate.empty()) {
    if (found_span) {
      throw CandidateRejected(Reason::kEmpty, "only empty bracketed spans");
    }
    candidate = trimmed;
  }
  candidate = StripQuotes(candidate);
  if (candidate.empty()) {
    throw CandidateRejected(Reason::kEmpty, "empty candidate");
  }
  if (candidate.size() > max_chars) {
    throw CandidateRejected(Reason::kOverCap,
                            "candidate of " + std::to_string(candidate.size()) +
                                " characters exceeds the cap of " +
                                std::to_string(max_chars));
  }
  ValidatePromptText(candidate);
  return std::string(candidate);
}

std::string NormalizePromptText(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : Trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

PromptPool Dedupe(PromptPool pool) {
  PromptPool out;
  out.reserve(pool.size());
  std::unordered_map<std::string, size_t> index;
  for (auto& record : pool) {
    auto [it, inserted] =
        index.emplace(NormalizePromptText(record.text), out.size());
    if (inserted) {
      out.push_back(std::move(record));
    } else if (record.composite > out[it->second].composite) {
      out[it->second] = std::move(record);
    }
  }
  return out;
}

}  // namespace promptxfer

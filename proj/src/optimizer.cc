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

#include "promptxfer/optimizer.h"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "promptxfer/errors.h"
#include "promptxfer/hashing.h"

namespace promptxfer {

void OptimizerConfig::Validate() const {
  if (candidates_per_step < 1)
    throw ConfigError("candidates_per_step must be at least 1");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(min_improvement >= 0.0))
    throw ConfigError("min_improvement must be non-negative");
  if (top_k_history == 0) throw ConfigError("top_k_history must be positive");
  if (seed_pool_size == 0)
    throw ConfigError("seed_pool_size must be positive");
  if (candidate_cap == 0) throw ConfigError("candidate_cap must be positive");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (origin_prompt.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ConfigError("origin_prompt is empty");
  try {
    ValidatePromptText(origin_prompt);
  } catch (const Error& e) {
    throw ConfigError(std::string("origin_prompt: ") + e.what());
  }
  reference_params.Validate();
  scorer_params.Validate();
}

std::string_view TerminationName(Termination t) {
  switch (t) {
    case Termination::kContinue:
      return "continue";
    case Termination::kStagnated:
      return "stagnated";
    case Termination::kMaxStepsReached:
      return "max_steps_reached";
  }
  return "continue";
}

Termination ParseTermination(std::string_view name) {
  for (Termination t : {Termination::kContinue, Termination::kStagnated,
                        Termination::kMaxStepsReached}) {
    if (TerminationName(t) == name) return t;
  }
  throw std::invalid_argument("unknown termination: " + std::string(name));
}

EvalOptions ScoringOptions(const OptimizerConfig& config,
                           const Dataset& dataset, size_t index) {
  EvalOptions options;
  options.mode = config.confidence_mode;
  size_t shots = std::min(config.scoring_shots, dataset.size());
  if (shots > 0) {
    options.exemplars = SampleExemplars(
        dataset, shots,
        HashCombine(HashCombine(config.rng_seed, "shots"), index));
  }
  options.eval_seed = HashCombine(config.rng_seed, "eval");
  options.workers = config.workers;
  options.scorer_params = config.scorer_params;
  return options;
}

Termination CheckTermination(const OptimizerState& state,
                             const OptimizerConfig& config) {
  if (state.step >= config.max_steps) return Termination::kMaxStepsReached;
  if (state.steps_since_improvement >= config.patience)
    return Termination::kStagnated;
  return Termination::kContinue;
}

std::vector<PromptRecord> SelectSeeds(const PromptPool& source_pool,
                                      size_t count) {
  if (source_pool.empty())
    throw std::invalid_argument("source pool is empty");
  PromptPool sorted = source_pool;
  SortByCompositeDescending(sorted);
  sorted.resize(std::min(count, sorted.size()));
  return sorted;
}

Optimizer::Optimizer(OptimizerConfig config, const TaskSet& task_set,
                     Backend& reference, Backend& scorer,
                     const MetaPromptTemplate& meta_template)
    : config_(std::move(config)),
      task_set_(task_set),
      reference_(reference),
      scorer_(scorer),
      template_(meta_template) {
  config_.Validate();
  const auto& datasets = task_set_.datasets();
  for (size_t d = 0; d < datasets.size(); ++d)
    scoring_options_.push_back(ScoringOptions(config_, datasets[d], d));
}

PromptRecord Optimizer::Evaluate(const std::string& text, int step,
                                 std::vector<std::string> parent_ids,
                                 size_t* scorer_calls) {
  PromptRecord record;
  record.text = text;
  record.id = PromptId(text);
  record.stage = task_set_.role();
  record.step = step;
  record.parent_ids = std::move(parent_ids);
  const auto& datasets = task_set_.datasets();
  for (size_t d = 0; d < datasets.size(); ++d) {
    EvalResult result =
        EvaluatePrompt(text, datasets[d], scorer_, scoring_options_[d]);
    if (scorer_calls != nullptr) *scorer_calls += result.scorer_calls;
    record.scores.push_back(
        {datasets[d].name(), result.metrics, result.composite.value});
  }
  record.composite = MeanComposite(record.scores);
  return record;
}

namespace {

double SecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Adds fresh records, re-sorts, and updates the best and the stagnation
// counter.
void Merge(OptimizerState& state, std::vector<PromptRecord> fresh,
           double min_improvement) {
  double previous = state.pool.empty() ? -1.0 : state.best.composite;
  bool had_best = !state.pool.empty();
  for (auto& r : fresh) state.pool.push_back(std::move(r));
  SortByCompositeDescending(state.pool);
  const PromptRecord& top = state.pool.front();
  if (!had_best || top.composite > previous) state.best = top;
  if (had_best && !(top.composite > previous + min_improvement))
    ++state.steps_since_improvement;
  else
    state.steps_since_improvement = 0;
}

}  // namespace

OptimizerState Optimizer::Initialize(
    std::span<const std::string> initial_prompts, StepEntry* entry) {
  if (initial_prompts.empty())
    throw std::invalid_argument("no initial prompts");
  auto start = std::chrono::steady_clock::now();
  OptimizerState state;
  state.stage = task_set_.role();
  state.step = 1;

  StepEntry local;
  local.step = 1;
  std::unordered_set<std::string> seen;
  std::vector<std::string> texts;
  for (const auto& t : initial_prompts) {
    ValidatePromptText(t);
    if (seen.insert(NormalizePromptText(t)).second)
      texts.push_back(t);
    else
      ++local.duplicates;
  }
  std::sort(texts.begin(), texts.end(),
            [](const std::string& a, const std::string& b) {
              return PromptId(a) < PromptId(b);
            });
  for (const auto& t : texts)
    local.candidates.push_back(Evaluate(t, 1, {}, &local.scorer_calls));

  Merge(state, local.candidates, config_.min_improvement);
  state.steps_since_improvement = 0;
  local.best_so_far = state.best.composite;
  local.best_id = state.best.id;
  local.wall_time_seconds = SecondsSince(start);
  if (entry != nullptr) *entry = std::move(local);
  return state;
}

StepEntry Optimizer::Step(OptimizerState& state) {
  if (state.pool.empty())
    throw std::logic_error("Step called before Initialize");
  auto start = std::chrono::steady_clock::now();
  const int step = ++state.step;
  const uint64_t step_seed = HashCombine(config_.rng_seed, step);
  const auto& datasets = task_set_.datasets();
  const Dataset& source = datasets[(step - 1) % datasets.size()];
  std::vector<TaskItem> exemplars = SampleExemplars(
      source, std::min(config_.exemplar_count, source.size()), step_seed);
  std::string prompt =
      BuildReferencePrompt(state.pool, exemplars, template_,
                           config_.top_k_history, task_set_.description());

  const int k = config_.candidates_per_step;
  std::vector<std::string> completions(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<bool> abort{false};
  int workers = config_.workers > 0 ? config_.workers : omp_get_max_threads();
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (int c = 0; c < k; ++c) {
    if (abort.load(std::memory_order_relaxed)) continue;
    try {
      GenParams params = config_.reference_params;
      params.sample_seed = HashCombine(step_seed, static_cast<uint64_t>(c));
      completions[c] = reference_.Generate(prompt, params);
    } catch (...) {
      errors[c] = std::current_exception();
      abort.store(true, std::memory_order_relaxed);
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  StepEntry entry;
  entry.step = step;
  std::unordered_set<std::string> known;
  for (const auto& r : state.pool) known.insert(NormalizePromptText(r.text));
  std::vector<std::string> survivors;
  for (const auto& completion : completions) {
    std::string text;
    try {
      text = ExtractCandidate(completion, config_.candidate_cap);
    } catch (const CandidateRejected&) {
      ++entry.discarded;
      continue;
    }
    if (!known.insert(NormalizePromptText(text)).second) {
      ++entry.duplicates;
      continue;
    }
    survivors.push_back(std::move(text));
  }
  std::sort(survivors.begin(), survivors.end(),
            [](const std::string& a, const std::string& b) {
              return PromptId(a) < PromptId(b);
            });
  const std::string parent = state.best.id;
  for (const auto& t : survivors)
    entry.candidates.push_back(
        Evaluate(t, step, {parent}, &entry.scorer_calls));

  Merge(state, entry.candidates, config_.min_improvement);
  entry.best_so_far = state.best.composite;
  entry.best_id = state.best.id;
  entry.wall_time_seconds = SecondsSince(start);
  return entry;
}

StageResult Optimizer::Run(std::span<const std::string> initial_prompts,
                           StepSink* sink) {
  StepEntry entry;
  OptimizerState state = Initialize(initial_prompts, &entry);
  if (sink != nullptr) sink->OnStep(entry, state);
  Termination t;
  while ((t = CheckTermination(state, config_)) == Termination::kContinue) {
    entry = Step(state);
    if (sink != nullptr) sink->OnStep(entry, state);
  }
  return StageResult{state.pool, state.best, t, state.step};
}

StageResult RunStage(const OptimizerConfig& config, const TaskSet& task_set,
                     Backend& reference, Backend& scorer,
                     const MetaPromptTemplate& meta_template, StepSink* sink,
                     const PromptPool* source_pool) {
  std::vector<std::string> initial;
  if (task_set.role() == Stage::kSource) {
    initial.push_back(config.origin_prompt);
  } else {
    if (source_pool == nullptr)
      throw std::invalid_argument("target stage needs a source pool");
    for (const auto& r : SelectSeeds(*source_pool, config.seed_pool_size))
      initial.push_back(r.text);
  }
  Optimizer optimizer(config, task_set, reference, scorer, meta_template);
  return optimizer.Run(initial, sink);
}

}  // namespace promptxfer

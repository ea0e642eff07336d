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

#ifndef PROMPTXFER_OPTIMIZER_H_
#define PROMPTXFER_OPTIMIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptxfer/backend.h"
#include "promptxfer/dataset.h"
#include "promptxfer/evaluator.h"
#include "promptxfer/metaprompt.h"

namespace promptxfer {

// Starting instruction of the source stage when none is configured.
inline constexpr std::string_view kDefaultOriginPrompt =
    "Answer the following multiple-choice questions by selecting the most "
    "accurate option from 'A', 'B', 'C', or 'D'. Use your general knowledge "
    "across various domains to provide the best answer.";

struct OptimizerConfig {
  int candidates_per_step = 8;
  int max_steps = 200;
  // Stop after this many consecutive steps without the best composite
  // improving by more than min_improvement.
  int patience = 20;
  double min_improvement = 1e-6;
  size_t top_k_history = kDefaultTopK;
  size_t seed_pool_size = 4;
  std::string origin_prompt = std::string(kDefaultOriginPrompt);
  ConfidenceMode confidence_mode = ConfidenceMode::kLogits;
  // Solved examples shown to the reference model each step.
  size_t exemplar_count = kDefaultMetaExemplars;
  // Solved examples prepended to every scorer query (0 = zero-shot).
  size_t scoring_shots = 0;
  uint64_t rng_seed = 0;
  // OpenMP workers for reference calls and item scoring; 0 = runtime default.
  int workers = 0;
  size_t candidate_cap = kDefaultCandidateCap;
  GenParams reference_params = DefaultReferenceParams();
  GenParams scorer_params = DefaultScorerParams();

  // Throws ConfigError.
  void Validate() const;
};

// Evaluator options the optimizer uses for dataset `index` of a task set.
// Shared with one-off evaluation so both score identically.
EvalOptions ScoringOptions(const OptimizerConfig& config,
                           const Dataset& dataset, size_t index);

enum class Termination { kContinue, kStagnated, kMaxStepsReached };

std::string_view TerminationName(Termination t);
Termination ParseTermination(std::string_view name);

// What one optimization step produced. Step 1 is the evaluation of the
// initial prompts.
struct StepEntry {
  int step = 0;
  std::vector<PromptRecord> candidates;
  double best_so_far = 0.0;
  std::string best_id;
  double wall_time_seconds = 0.0;
  size_t scorer_calls = 0;
  // Completions rejected by extraction, and candidates already in the pool.
  size_t discarded = 0;
  size_t duplicates = 0;
};

struct OptimizerState {
  Stage stage = Stage::kSource;
  int step = 0;
  // Deduplicated, sorted by composite descending.
  PromptPool pool;
  PromptRecord best;
  int steps_since_improvement = 0;
};

// Receives every step once it is complete; RunWriter persists them.
class StepSink {
 public:
  virtual ~StepSink() = default;
  virtual void OnStep(const StepEntry& entry, const OptimizerState& state) = 0;
};

// max_steps_reached when step >= max_steps, else stagnated when
// steps_since_improvement >= patience, else continue.
Termination CheckTermination(const OptimizerState& state,
                             const OptimizerConfig& config);

// Top `count` by composite, ties by id. Throws std::invalid_argument on an
// empty pool.
std::vector<PromptRecord> SelectSeeds(const PromptPool& source_pool,
                                      size_t count);

struct StageResult {
  PromptPool pool;
  PromptRecord best;
  Termination termination = Termination::kContinue;
  int steps = 0;
};

class Optimizer {
 public:
  // The task set's role is the stage being optimized. The referenced
  // objects must outlive the optimizer.
  Optimizer(OptimizerConfig config, const TaskSet& task_set,
            Backend& reference, Backend& scorer,
            const MetaPromptTemplate& meta_template);

  // Evaluates the initial prompts as step 1.
  OptimizerState Initialize(std::span<const std::string> initial_prompts,
                            StepEntry* entry);

  // One round: build the reference prompt, draw candidates, extract, drop
  // duplicates, evaluate survivors in id order, merge.
  StepEntry Step(OptimizerState& state);

  // Initialize, then Step until CheckTermination says stop. Each entry is
  // handed to `sink` before the next step starts.
  StageResult Run(std::span<const std::string> initial_prompts,
                  StepSink* sink);

  // Scores one instruction on every dataset of the task set.
  PromptRecord Evaluate(const std::string& text, int step,
                        std::vector<std::string> parent_ids,
                        size_t* scorer_calls);

  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  const TaskSet& task_set_;
  Backend& reference_;
  Backend& scorer_;
  const MetaPromptTemplate& template_;
  std::vector<EvalOptions> scoring_options_;
};

// Source stage: starts from config.origin_prompt. Target stage: starts from
// SelectSeeds(*source_pool, config.seed_pool_size) and throws
// std::invalid_argument when the source pool is missing or empty.
StageResult RunStage(const OptimizerConfig& config, const TaskSet& task_set,
                     Backend& reference, Backend& scorer,
                     const MetaPromptTemplate& meta_template, StepSink* sink,
                     const PromptPool* source_pool = nullptr);

}  // namespace promptxfer

#endif  // PROMPTXFER_OPTIMIZER_H_

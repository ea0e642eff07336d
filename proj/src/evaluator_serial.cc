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

namespace promptxfer {
namespace internal {
EvalResult FinishEvaluation(std::string_view instruction,
                            const Dataset& dataset,
                            std::vector<ItemRecord> records,
                            const EvalOptions& options);
}  // namespace internal

// Kept alongside the parallel path so tests and the benchmark can compare
// against a plain loop.
EvalResult EvaluatePromptSerial(std::string_view instruction,
                                const Dataset& dataset, Backend& scorer,
                                const EvalOptions& options) {
  std::vector<ItemRecord> records;
  records.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    records.push_back(ScoreItem(instruction, dataset[i], i, scorer, options));
  }
  return internal::FinishEvaluation(instruction, dataset, std::move(records),
                                    options);
}

}  // namespace promptxfer

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

#ifndef PROMPTXFER_DATASET_H_
#define PROMPTXFER_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptxfer {

enum class Domain { kCommonsense, kMedical, kLegal, kFinancial, kSynthetic };

std::string_view DomainName(Domain domain);
// Throws DatasetError on an unknown name.
Domain ParseDomain(std::string_view name);

// One multiple-choice question. Options are keyed by a contiguous letter
// range starting at 'A' (2 to 5 entries).
struct TaskItem {
  std::string id;
  std::string question;
  std::map<char, std::string> options;
  char gold = 'A';

  bool HasOption(char letter) const { return options.count(letter) > 0; }
  // "ABCD" for a four-option item.
  std::string OptionLetters() const;

  friend bool operator==(const TaskItem&, const TaskItem&) = default;
};

// Throws DatasetError describing the first violated invariant.
void ValidateItem(const TaskItem& item);

class Dataset {
 public:
  // Validates every item and id uniqueness; throws DatasetError.
  Dataset(std::string name, Domain domain, std::vector<TaskItem> items);

  const std::string& name() const { return name_; }
  Domain domain() const { return domain_; }
  const std::vector<TaskItem>& items() const { return items_; }
  size_t size() const { return items_.size(); }
  const TaskItem& operator[](size_t i) const { return items_[i]; }

 private:
  std::string name_;
  Domain domain_;
  std::vector<TaskItem> items_;
};

enum class TaskRole { kSource, kTarget };

std::string_view TaskRoleName(TaskRole role);
// Throws ConfigError.
TaskRole ParseTaskRole(std::string_view name);

// A group of same-domain datasets optimized jointly. The description is
// injected into the reference prompt.
class TaskSet {
 public:
  TaskSet(TaskRole role, std::vector<Dataset> datasets,
          std::string description);

  TaskRole role() const { return role_; }
  const std::vector<Dataset>& datasets() const { return datasets_; }
  const std::string& description() const { return description_; }
  size_t total_items() const;

 private:
  TaskRole role_;
  std::vector<Dataset> datasets_;
  std::string description_;
};

enum class DatasetFormat { kJsonl };

// Loads `<path>` as JSONL. An optional sidecar `<stem>.meta.json` next to it
// supplies {"name", "domain"}; otherwise name = file stem, domain = synthetic.
// Errors carry "<path>:<line>:" prefixes.
Dataset LoadDataset(const std::filesystem::path& path,
                    DatasetFormat format = DatasetFormat::kJsonl);

// Parses JSONL records from `in`; `label` prefixes error messages.
Dataset ParseDatasetJsonl(std::istream& in, std::string name, Domain domain,
                          std::string_view label);

// One record per line, newline-terminated, in item order.
std::string ToJsonl(const Dataset& dataset);

// Writes `<path>` and its `.meta.json` sidecar.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);

struct DatasetSplit {
  Dataset dev;
  Dataset test;
};

// Seeded shuffle, then the first round(dev_fraction * N) items form `dev`.
// Both sides keep the original relative order of their items.
DatasetSplit SplitDataset(const Dataset& dataset, double dev_fraction,
                          uint64_t seed);

// `n` distinct items chosen under `seed`, returned in dataset order.
std::vector<TaskItem> SampleExemplars(const Dataset& dataset, size_t n,
                                      uint64_t seed);

// Deterministic synthetic questions for offline runs and tests. Ids are
// prefixed with `name` so they stay unique across datasets.
Dataset MakeSyntheticDataset(std::string name, size_t n_items,
                             int n_options, uint64_t seed);

}  // namespace promptxfer

#endif  // PROMPTXFER_DATASET_H_

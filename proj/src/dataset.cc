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

#include "promptxfer/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "promptxfer/errors.h"
#include "promptxfer/hashing.h"

namespace promptxfer {
namespace {

using nlohmann::json;

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

TaskItem ItemFromJson(const json& record) {
  if (!record.is_object()) throw DatasetError("record is not a JSON object");
  for (const char* key : {"id", "question", "options", "answer"}) {
    if (!record.contains(key)) {
      throw DatasetError(std::string("missing field \"") + key + "\"");
    }
  }
  if (!record["id"].is_string()) throw DatasetError("\"id\" must be a string");
  if (!record["question"].is_string()) {
    throw DatasetError("\"question\" must be a string");
  }
  if (!record["answer"].is_string()) {
    throw DatasetError("\"answer\" must be a string");
  }
  const json& options = record["options"];
  if (!options.is_object()) throw DatasetError("\"options\" must be an object");

  TaskItem item;
  item.id = record["id"].get<std::string>();
  item.question = record["question"].get<std::string>();
  for (const auto& [key, value] : options.items()) {
    if (key.size() != 1 || key[0] < 'A' || key[0] > 'E') {
      throw DatasetError("option key \"" + key +
                         "\" is not a single letter A-E");
    }
    if (!value.is_string()) {
      throw DatasetError("option \"" + key + "\" must be a string");
    }
    item.options[key[0]] = value.get<std::string>();
  }
  const auto answer = record["answer"].get<std::string>();
  if (answer.size() != 1) {
    throw DatasetError("answer \"" + answer + "\" is not a single letter");
  }
  item.gold = answer[0];
  ValidateItem(item);
  return item;
}

json ItemToJson(const TaskItem& item) {
  json options = json::object();
  for (const auto& [letter, text] : item.options) {
    options[std::string(1, letter)] = text;
  }
  return json{{"id", item.id},
              {"question", item.question},
              {"options", std::move(options)},
              {"answer", std::string(1, item.gold)}};
}

void CheckUniqueIds(const std::vector<TaskItem>& items) {
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < items.size(); ++i) {
    if (!seen.insert(items[i].id).second) {
      throw DatasetError("duplicate id \"" + items[i].id + "\" at item " +
                         std::to_string(i + 1));
    }
  }
}

}  // namespace

std::string_view DomainName(Domain domain) {
  switch (domain) {
    case Domain::kCommonsense:
      return "commonsense";
    case Domain::kMedical:
      return "medical";
    case Domain::kLegal:
      return "legal";
    case Domain::kFinancial:
      return "financial";
    case Domain::kSynthetic:
      return "synthetic";
  }
  return "synthetic";
}

Domain ParseDomain(std::string_view name) {
  for (Domain d : {Domain::kCommonsense, Domain::kMedical, Domain::kLegal,
                   Domain::kFinancial, Domain::kSynthetic}) {
    if (DomainName(d) == name) return d;
  }
  throw DatasetError("unknown domain \"" + std::string(name) + "\"");
}

std::string_view TaskRoleName(TaskRole role) {
  return role == TaskRole::kSource ? "source" : "target";
}

TaskRole ParseTaskRole(std::string_view name) {
  if (name == "source") return TaskRole::kSource;
  if (name == "target") return TaskRole::kTarget;
  throw ConfigError("unknown stage '" + std::string(name) +
                    "' (expected source or target)");
}

std::string TaskItem::OptionLetters() const {
  std::string letters;
  for (const auto& entry : options) letters.push_back(entry.first);
  return letters;
}

void ValidateItem(const TaskItem& item) {
  if (item.id.empty()) throw DatasetError("empty id");
  if (IsBlank(item.question)) {
    throw DatasetError("item \"" + item.id + "\": empty question");
  }
  if (item.options.size() < 2 || item.options.size() > 5) {
    throw DatasetError("item \"" + item.id + "\": expected 2-5 options, got " +
                       std::to_string(item.options.size()));
  }
  char expected = 'A';
  for (const auto& [letter, text] : item.options) {
    if (letter != expected) {
      throw DatasetError("item \"" + item.id +
                         "\": option letters must be contiguous from A");
    }
    if (IsBlank(text)) {
      throw DatasetError("item \"" + item.id + "\": option " +
                         std::string(1, letter) + " is empty");
    }
    ++expected;
  }
  if (!item.HasOption(item.gold)) {
    throw DatasetError("item \"" + item.id + "\": answer " +
                       std::string(1, item.gold) + " is not among the options");
  }
}

Dataset::Dataset(std::string name, Domain domain, std::vector<TaskItem> items)
    : name_(std::move(name)), domain_(domain), items_(std::move(items)) {
  if (items_.empty()) throw DatasetError("dataset \"" + name_ + "\" is empty");
  for (const auto& item : items_) ValidateItem(item);
  CheckUniqueIds(items_);
}

TaskSet::TaskSet(TaskRole role, std::vector<Dataset> datasets,
                 std::string description)
    : role_(role),
      datasets_(std::move(datasets)),
      description_(std::move(description)) {
  if (datasets_.empty()) {
    throw DatasetError(std::string(TaskRoleName(role_)) +
                       " task set has no datasets");
  }
}

size_t TaskSet::total_items() const {
  size_t n = 0;
  for (const auto& d : datasets_) n += d.size();
  return n;
}

Dataset ParseDatasetJsonl(std::istream& in, std::string name, Domain domain,
                          std::string_view label) {
  std::vector<TaskItem> items;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  const std::string prefix(label);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (IsBlank(line)) continue;
    TaskItem item;
    try {
      item = ItemFromJson(json::parse(line));
    } catch (const json::exception& e) {
      throw DatasetError(prefix + ":" + std::to_string(line_no) +
                         ": malformed record: " + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError(prefix + ":" + std::to_string(line_no) + ": " +
                         e.what());
    }
    if (!seen.insert(item.id).second) {
      throw DatasetError(prefix + ":" + std::to_string(line_no) +
                         ": duplicate id \"" + item.id + "\"");
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw DatasetError(prefix + ": no records");
  return Dataset(std::move(name), domain, std::move(items));
}

Dataset LoadDataset(const std::filesystem::path& path, DatasetFormat format) {
  (void)format;  // JSONL is the only ingest format.
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read dataset file " + path.string());

  std::string name = path.stem().string();
  Domain domain = Domain::kSynthetic;
  auto meta_path = path;
  meta_path.replace_extension(".meta.json");
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta_in(meta_path);
    try {
      const json meta = json::parse(meta_in);
      if (meta.contains("name")) name = meta.at("name").get<std::string>();
      if (meta.contains("domain")) {
        domain = ParseDomain(meta.at("domain").get<std::string>());
      }
    } catch (const json::exception& e) {
      throw DatasetError(meta_path.string() + ": " + e.what());
    }
  }
  return ParseDatasetJsonl(in, std::move(name), domain, path.string());
}

std::string ToJsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& item : dataset.items()) {
    out += ItemToJson(item).dump();
    out += '\n';
  }
  return out;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + path.string());
    out << ToJsonl(dataset);
  }
  auto meta_path = path;
  meta_path.replace_extension(".meta.json");
  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw DatasetError("cannot write " + meta_path.string());
  meta << json{{"name", dataset.name()},
               {"domain", std::string(DomainName(dataset.domain()))}}
              .dump()
       << '\n';
}

DatasetSplit SplitDataset(const Dataset& dataset, double dev_fraction,
                          uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw DatasetError("dev_fraction must lie in (0, 1)");
  }
  const size_t n = dataset.size();
  const auto n_dev = static_cast<size_t>(std::llround(dev_fraction * n));
  if (n_dev == 0 || n_dev >= n) {
    throw DatasetError("dev_fraction " + std::to_string(dev_fraction) +
                       " leaves an empty side for " + std::to_string(n) +
                       " items");
  }
  const auto order = SeededPermutation(n, seed);
  std::vector<bool> in_dev(n, false);
  for (size_t i = 0; i < n_dev; ++i) in_dev[order[i]] = true;

  std::vector<TaskItem> dev, test;
  for (size_t i = 0; i < n; ++i) {
    (in_dev[i] ? dev : test).push_back(dataset[i]);
  }
  return {Dataset(dataset.name() + ".dev", dataset.domain(), std::move(dev)),
          Dataset(dataset.name() + ".test", dataset.domain(), std::move(test))};
}

std::vector<TaskItem> SampleExemplars(const Dataset& dataset, size_t n,
                                      uint64_t seed) {
  if (n > dataset.size()) {
    throw DatasetError("cannot sample " + std::to_string(n) +
                       " exemplars from " + std::to_string(dataset.size()) +
                       " items");
  }
  auto order = SeededPermutation(dataset.size(), seed);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<TaskItem> out;
  out.reserve(n);
  for (size_t i : order) out.push_back(dataset[i]);
  return out;
}

Dataset MakeSyntheticDataset(std::string name, size_t n_items, int n_options,
                             uint64_t seed) {
  if (n_options < 2 || n_options > 5) {
    throw DatasetError("synthetic datasets need 2-5 options");
  }
  std::vector<TaskItem> items;
  items.reserve(n_items);
  for (size_t i = 0; i < n_items; ++i) {
    const uint64_t key = HashCombine(HashCombine(seed, name), i);
    const uint64_t a = key % 97 + 2;
    const uint64_t b = (key >> 16) % 89 + 3;
    TaskItem item;
    item.id = name + "-" + std::to_string(i);
    item.question = "Item " + std::to_string(i) + " of " + name + ": what is " +
                    std::to_string(a) + " + " + std::to_string(b) + "?";
    const auto gold_index = static_cast<int>((key >> 32) % n_options);
    for (int k = 0; k < n_options; ++k) {
      const auto value = static_cast<int64_t>(a + b) + (k - gold_index);
      item.options[static_cast<char>('A' + k)] = std::to_string(value);
    }
    item.gold = static_cast<char>('A' + gold_index);
    items.push_back(std::move(item));
  }
  return Dataset(std::move(name), Domain::kSynthetic, std::move(items));
}

}  // namespace promptxfer

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

#ifndef PROMPTXFER_CONFIG_H_
#define PROMPTXFER_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "promptxfer/backend.h"
#include "promptxfer/dataset.h"
#include "promptxfer/metaprompt.h"
#include "promptxfer/optimizer.h"

namespace promptxfer {

struct DatasetGroup {
  std::vector<std::filesystem::path> paths;
  // Free-text task description offered to the reference model.
  std::string description;
};

// The JSON run configuration shared by every command. Relative paths are
// resolved against the directory holding the file. Unknown keys are
// rejected so typos surface as errors.
struct RunConfigFile {
  BackendConfig reference;
  BackendConfig scorer;
  DatasetGroup source;
  DatasetGroup target;
  // Fraction of each dataset used during optimization; the rest is held
  // out. 1.0 optimizes on everything.
  double dev_fraction = 1.0;
  uint64_t split_seed = 0;
  OptimizerConfig optimizer;
  std::string template_id = std::string(kPalmStyleTemplateId);
  std::optional<std::filesystem::path> template_path;
  std::filesystem::path store_root = "runs";
  // Total backend calls allowed per command; 0 means unlimited.
  uint64_t request_budget = 0;
  // The document as read, for run snapshots.
  nlohmann::json raw;

  // Throws ConfigError.
  static RunConfigFile Parse(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir);
  static RunConfigFile Load(const std::filesystem::path& path);

  const DatasetGroup& group(TaskRole role) const {
    return role == TaskRole::kSource ? source : target;
  }

  // Throws ConfigError naming the first referenced path that is missing.
  void CheckPaths(TaskRole role) const;

  MetaPromptTemplate LoadTemplate() const;

  // Loads the role's datasets, applying dev_fraction. Throws DatasetError.
  TaskSet LoadTaskSet(TaskRole role) const;
};

// Parsers for the nested objects, exposed for tests.
BackendConfig ParseBackendConfig(const nlohmann::json& j);
MockProfile ParseMockProfile(const nlohmann::json& j);
OptimizerConfig ParseOptimizerConfig(const nlohmann::json& j);
GenParams ParseGenParams(const nlohmann::json& j, GenParams defaults);

}  // namespace promptxfer

#endif  // PROMPTXFER_CONFIG_H_

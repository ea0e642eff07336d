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

#include "promptxfer/config.h"

#include <gtest/gtest.h>

#include <fstream>
#include <string>

#include "json.hpp"
#include "promptxfer/errors.h"
#include "promptxfer/evaluator.h"
#include "support/fixtures.h"

namespace promptxfer {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::DemoDir;
using testing::TempDir;

json Minimal() {
  return json::parse(R"({
    "backends": {
      "reference": {"kind": "mock_reference", "seed": 1},
      "scorer": {"kind": "mock_scorer", "seed": 2}
    }
  })");
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

TEST(ConfigTest, DemoSourceLoads) {
  RunConfigFile c = RunConfigFile::Load(DemoDir() / "source.json");
  EXPECT_EQ(c.reference.kind, BackendKind::kMockReference);
  EXPECT_EQ(c.scorer.kind, BackendKind::kMockScorer);
  EXPECT_EQ(c.reference.mock_profile.mutation_vocabulary.size(), 16u);
  EXPECT_DOUBLE_EQ(c.scorer.mock_profile.keyword_accuracy.at("carefully"),
                   0.95);
  ASSERT_EQ(c.source.paths.size(), 2u);
  EXPECT_EQ(c.source.paths[0], (DemoDir() / "arith_add.jsonl").lexically_normal());
  EXPECT_EQ(c.optimizer.max_steps, 200);
  EXPECT_EQ(c.optimizer.patience, 20);
  EXPECT_EQ(c.optimizer.rng_seed, 42u);
  EXPECT_EQ(c.optimizer.confidence_mode, ConfidenceMode::kLogits);
  EXPECT_EQ(c.template_id, "palm-style");
  EXPECT_EQ(c.store_root, (DemoDir() / "../../runs").lexically_normal());
  EXPECT_NO_THROW(c.CheckPaths(TaskRole::kSource));
  EXPECT_NO_THROW(c.CheckPaths(TaskRole::kTarget));
  TaskSet tasks = c.LoadTaskSet(TaskRole::kSource);
  EXPECT_EQ(tasks.datasets().size(), 2u);
  EXPECT_EQ(tasks.total_items(), 600u);
}

TEST(ConfigTest, Defaults) {
  RunConfigFile c = RunConfigFile::Parse(Minimal(), "/base");
  EXPECT_EQ(c.dev_fraction, 1.0);
  EXPECT_EQ(c.template_id, "palm-style");
  EXPECT_FALSE(c.template_path);
  EXPECT_EQ(c.store_root, fs::path("/base/runs"));
  EXPECT_EQ(c.request_budget, 0u);
  EXPECT_EQ(c.optimizer.candidates_per_step, 8);
  EXPECT_EQ(c.optimizer.max_steps, 200);
  EXPECT_EQ(c.optimizer.top_k_history, 20);
  EXPECT_TRUE(c.source.paths.empty());
  EXPECT_THROW(c.CheckPaths(TaskRole::kSource), ConfigError);
}

TEST(ConfigTest, UnknownKeysRejected) {
  for (const char* pointer :
       {"/bogus", "/backends/extra", "/backends/scorer/temperture",
        "/backends/scorer/mock_profile/keyword_acc", "/optimizer/max_step",
        "/optimizer/scorer_params/top_p"}) {
    json doc = Minimal();
    doc["optimizer"] = json::object();
    doc["backends"]["scorer"]["mock_profile"] = json::object();
    doc["optimizer"]["scorer_params"] = json::object();
    doc[json::json_pointer(pointer)] = 1;
    try {
      RunConfigFile::Parse(doc, "");
      ADD_FAILURE() << pointer;
    } catch (const ConfigError& e) {
      std::string key = std::string(pointer).substr(
          std::string(pointer).rfind('/') + 1);
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos)
          << e.what();
    }
  }
}

TEST(ConfigTest, BadValuesRejected) {
  auto expect_bad = [](const char* pointer, json value) {
    json doc = Minimal();
    doc[json::json_pointer(pointer)] = value;
    EXPECT_THROW(RunConfigFile::Parse(doc, ""), ConfigError) << pointer;
  };
  expect_bad("/backends/reference/kind", "mock_scorer");
  expect_bad("/backends/scorer/kind", "mock_reference");
  expect_bad("/backends/scorer/kind", "telepathy");
  expect_bad("/backends/scorer/max_retries", "three");
  expect_bad("/optimizer/max_steps", 0);
  expect_bad("/optimizer/candidates_per_step", 0);
  expect_bad("/optimizer/origin_prompt", "");
  expect_bad("/optimizer/origin_prompt", "Use <INS> here");
  expect_bad("/datasets/dev_fraction", 0.0);
  expect_bad("/datasets/dev_fraction", 1.5);
  expect_bad("/confidence_mode", "vibes");
  expect_bad("/template_id", "no-such-template");
  json doc = Minimal();
  doc["backends"].erase("scorer");
  EXPECT_THROW(RunConfigFile::Parse(doc, ""), ConfigError);
  EXPECT_THROW(RunConfigFile::Parse(json::array(), ""), ConfigError);
}

TEST(ConfigTest, HttpBackendNeedsEndpoint) {
  json doc = Minimal();
  doc["backends"]["scorer"] = {{"kind", "http_chat"}, {"model_name", "m"}};
  EXPECT_THROW(RunConfigFile::Parse(doc, ""), ConfigError);
  doc["backends"]["scorer"]["endpoint_url"] = "https://api.example.com/v1/chat";
  doc["backends"]["scorer"]["api_key_env"] = "SOME_KEY";
  doc["backends"]["scorer"]["request_timeout_ms"] = 1500;
  doc["backends"]["scorer"]["supports_logprobs"] = true;
  RunConfigFile c = RunConfigFile::Parse(doc, "");
  EXPECT_EQ(c.scorer.kind, BackendKind::kHttpChat);
  EXPECT_EQ(c.scorer.request_timeout, std::chrono::milliseconds(1500));
  EXPECT_TRUE(c.scorer.supports_logprobs);
}

TEST(ConfigTest, PathsResolveAgainstConfigDir) {
  TempDir dir;
  fs::create_directories(dir.path() / "cfg");
  json doc = Minimal();
  doc["datasets"] = {{"source", {{"paths", {"data/a.jsonl", "/abs/b.jsonl"}}}}};
  doc["store_root"] = "../out";
  WriteFile(dir.path() / "cfg" / "run.json", doc.dump());
  RunConfigFile c = RunConfigFile::Load(dir.path() / "cfg" / "run.json");
  EXPECT_EQ(c.source.paths[0], dir.path() / "cfg" / "data" / "a.jsonl");
  EXPECT_EQ(c.source.paths[1], fs::path("/abs/b.jsonl"));
  EXPECT_EQ(c.store_root, dir.path() / "out");
  try {
    c.CheckPaths(TaskRole::kSource);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a.jsonl"), std::string::npos);
  }
}

TEST(ConfigTest, UnreadableOrMalformedFile) {
  TempDir dir;
  EXPECT_THROW(RunConfigFile::Load(dir.path() / "missing.json"), ConfigError);
  WriteFile(dir.path() / "bad.json", "{ not json");
  EXPECT_THROW(RunConfigFile::Load(dir.path() / "bad.json"), ConfigError);
}

TEST(ConfigTest, DevFractionSplitsEachDataset) {
  json doc = Minimal();
  doc["datasets"] = {{"target", {{"paths", {"arith_mul.jsonl"}}}},
                     {"dev_fraction", 0.5},
                     {"split_seed", 9}};
  RunConfigFile c = RunConfigFile::Parse(doc, DemoDir());
  TaskSet half = c.LoadTaskSet(TaskRole::kTarget);
  EXPECT_EQ(half.total_items(), 150u);
  TaskSet again = c.LoadTaskSet(TaskRole::kTarget);
  ASSERT_EQ(again.total_items(), 150u);
  for (size_t i = 0; i < 150; ++i) {
    EXPECT_EQ(half.datasets()[0].items()[i].id, again.datasets()[0].items()[i].id);
  }
}

TEST(ConfigTest, TemplateFileOverride) {
  TempDir dir;
  WriteFile(dir.path() / "t.txt",
            "Past attempts:\n{HISTORY}\n\nExamples:\n{EXEMPLARS}\n\n"
            "Reply with one new instruction in square brackets.");
  json doc = Minimal();
  doc["template_id"] = "custom";
  doc["template_path"] = "t.txt";
  RunConfigFile c = RunConfigFile::Parse(doc, dir.path());
  ASSERT_TRUE(c.template_path);
  MetaPromptTemplate t = c.LoadTemplate();
  EXPECT_EQ(t.id, "custom");
  EXPECT_EQ(t.footer(), "Reply with one new instruction in square brackets.");

  WriteFile(dir.path() / "t.txt", "{HISTORY} only");
  EXPECT_THROW(c.LoadTemplate(), TemplateError);
}

TEST(ConfigTest, GenParamsOverlayDefaults) {
  GenParams base;
  base.temperature = 1.0;
  base.max_tokens = 100;
  GenParams p = ParseGenParams(json{{"max_tokens", 7}}, base);
  EXPECT_EQ(p.temperature, 1.0);
  EXPECT_EQ(p.max_tokens, 7);
  EXPECT_THROW(ParseGenParams(json{{"temperature", -1.0}}, base), ConfigError);
}

}  // namespace
}  // namespace promptxfer

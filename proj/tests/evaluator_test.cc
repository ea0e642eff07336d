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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <string>

#include "promptxfer/errors.h"
#include "promptxfer/metaprompt.h"
#include "promptxfer/mock_backend.h"
#include "promptxfer/optimizer.h"

namespace promptxfer {
namespace {

bool EndsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

size_t Count(const std::string& s, std::string_view needle) {
  size_t n = 0;
  for (size_t pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + 1))
    ++n;
  return n;
}

TEST(RenderQueryTest, VerbalizedDirectiveEndsQuery) {
  Dataset ds = MakeSyntheticDataset("r", 3, 4, 1);
  std::string q =
      RenderQuery("Be careful.", ds[0], {}, ConfidenceMode::kVerbalized);
  EXPECT_TRUE(EndsWith(q, "Respond in the format: Answer: <letter>, "
                          "Confidence: <number between 0 and 1>"))
      << q;
  EXPECT_EQ(q.rfind("Be careful.\n\n", 0), 0u);
  EXPECT_NE(q.find(RenderItemBlock(ds[0])), std::string::npos);
}

TEST(RenderQueryTest, FiveShotBlocks) {
  Dataset ds = MakeSyntheticDataset("r", 10, 4, 1);
  std::vector<TaskItem> shots(ds.items().begin(), ds.items().begin() + 5);
  std::string q = RenderQuery("Solve.", ds[9], shots, ConfidenceMode::kLogits);
  EXPECT_EQ(Count(q, "Question: "), 6u);
  size_t item_pos = q.find(RenderItemBlock(ds[9]));
  ASSERT_NE(item_pos, std::string::npos);
  for (const auto& shot : shots) {
    std::string solved =
        RenderItemBlock(shot) + "Answer: " + std::string(1, shot.gold) + "\n";
    size_t pos = q.find(solved);
    ASSERT_NE(pos, std::string::npos) << solved;
    EXPECT_LT(pos, item_pos);
  }
  EXPECT_TRUE(EndsWith(q, "Answer:"));
}

TEST(RenderQueryTest, InstructionVerbatim) {
  const std::string instruction =
      "Answer the following multiple-choice questions by selecting the most "
      "accurate option from 'A', 'B', 'C', or 'D'.";
  Dataset ds = MakeSyntheticDataset("r", 2, 4, 1);
  std::string q = RenderQuery(instruction, ds[0], {}, ConfidenceMode::kLogits);
  EXPECT_EQ(q.substr(0, instruction.size()), instruction);
  EXPECT_EQ(q.substr(instruction.size(), 2), "\n\n");
}

TEST(RenderQueryTest, RejectsBadInstruction) {
  Dataset ds = MakeSyntheticDataset("r", 2, 4, 1);
  EXPECT_THROW(RenderQuery("", ds[0], {}, ConfidenceMode::kLogits),
               TemplateError);
  EXPECT_THROW(RenderQuery("x <INS> y", ds[0], {}, ConfidenceMode::kLogits),
               TemplateError);
}

TEST(ParseResponseTest, Examples) {
  ParsedResponse a = ParseResponse("Answer: B, Confidence: 0.8");
  EXPECT_EQ(a.letter, 'B');
  EXPECT_EQ(a.confidence, 0.8);
  ParsedResponse b = ParseResponse("I think the answer is probably B or C.");
  EXPECT_FALSE(b.letter.has_value());
  EXPECT_FALSE(b.confidence.has_value());
  EXPECT_FALSE(b.Followed(ConfidenceMode::kVerbalized));
  ParsedResponse c = ParseResponse("Answer: C, Confidence: 85%");
  EXPECT_EQ(c.letter, 'C');
  EXPECT_EQ(c.confidence, 0.85);
}

TEST(ParseResponseTest, Variants) {
  EXPECT_EQ(ParseResponse("answer: (d) confidence: 1").letter, 'D');
  EXPECT_EQ(ParseResponse("ANSWER: a\nCONFIDENCE: 0").confidence, 0.0);
  EXPECT_EQ(ParseResponse("Answer: E, Confidence: 70").confidence, 0.7);
  EXPECT_FALSE(ParseResponse("Answer: B, Confidence: 170").confidence);
  EXPECT_FALSE(ParseResponse("Answer: Both, Confidence: 0.5").letter);
  EXPECT_FALSE(ParseResponse("Answer: F, Confidence: 0.5").letter);
  ParsedResponse only_letter = ParseResponse("Answer: A");
  EXPECT_TRUE(only_letter.Followed(ConfidenceMode::kLogits));
  EXPECT_FALSE(only_letter.Followed(ConfidenceMode::kVerbalized));
}

// Replies from a fixed table keyed by item id.
class TableScorer : public Backend {
 public:
  explicit TableScorer(std::map<std::string, std::string> replies,
                       const Dataset& ds)
      : replies_(std::move(replies)), ds_(ds) {}
  std::string Generate(std::string_view prompt, const GenParams&) override {
    for (const auto& item : ds_.items()) {
      if (prompt.find(RenderItemBlock(item)) != std::string_view::npos)
        return replies_.at(item.id);
    }
    return "?";
  }
  ChoiceDistribution ScoreChoiceLogits(std::string_view,
                                       const TaskItem& item) override {
    if (item.id == "fail") throw BackendError("boom", 500);
    ChoiceDistribution d;
    for (const auto& [letter, text] : item.options) d.weights[letter] = 0.25;
    return d;
  }
  bool SupportsLogits() const override { return true; }
  std::string_view model_name() const override { return "table"; }

 private:
  std::map<std::string, std::string> replies_;
  const Dataset& ds_;
};

TEST(EvaluatePromptTest, WorkedEceExample) {
  Dataset ds = MakeSyntheticDataset("w", 3, 4, 1);
  auto wrong = [](const TaskItem& item) {
    return item.gold == 'A' ? 'B' : 'A';
  };
  TableScorer scorer(
      {{ds[0].id, std::string("Answer: ") + ds[0].gold + ", Confidence: 0.9"},
       {ds[1].id, std::string("Answer: ") + wrong(ds[1]) + ", Confidence: 0.8"},
       {ds[2].id, std::string("Answer: ") + wrong(ds[2]) + ", Confidence: 0.3"}},
      ds);
  EvalOptions options;
  options.mode = ConfidenceMode::kVerbalized;
  EvalResult r = EvaluatePrompt("Go.", ds, scorer, options);
  EXPECT_EQ(r.metrics.ece.value, 0.4);
  EXPECT_EQ(r.metrics.auroc.value, 1.0);
  EXPECT_EQ(r.scorer_calls, 3u);
  EXPECT_EQ(r.records[0].item_id, ds[0].id);
}

TEST(EvaluatePromptTest, PerfectScorer) {
  Dataset ds = MakeSyntheticDataset("p", 60, 4, 1);
  MockProfile profile;
  profile.base_accuracy = 1.0;
  MockScorer scorer(1, profile, {&ds});
  for (ConfidenceMode mode :
       {ConfidenceMode::kLogits, ConfidenceMode::kVerbalized}) {
    EvalOptions options;
    options.mode = mode;
    EvalResult r = EvaluatePrompt("Go.", ds, scorer, options);
    EXPECT_EQ(r.metrics.acc.value, 1.0);
    EXPECT_EQ(r.metrics.ece.value, 0.0);
    EXPECT_EQ(r.metrics.ifr, 1.0);
  }
}

TEST(EvaluatePromptTest, LogitsModeAlwaysFollows) {
  Dataset ds = MakeSyntheticDataset("l", 200, 5, 1);
  MockProfile profile;
  profile.base_accuracy = 0.4;
  profile.follow_rate = 0.1;  // ignored in forced-choice mode
  profile.confidence_noise = 0.2;
  MockScorer scorer(1, profile, {&ds});
  EvalResult r = EvaluatePrompt("Go.", ds, scorer, EvalOptions{});
  EXPECT_EQ(r.metrics.ifr, 1.0);
  EXPECT_EQ(r.metrics.n_scored, 200u);
}

TEST(EvaluatePromptTest, FollowRateWithinBinomialBand) {
  Dataset ds = MakeSyntheticDataset("f", 100, 4, 8);
  MockProfile profile;
  profile.base_accuracy = 0.6;
  profile.follow_rate = 0.82;
  MockScorer scorer(8, profile, {&ds});
  EvalOptions options;
  options.mode = ConfidenceMode::kVerbalized;
  EvalResult r = EvaluatePrompt("Go.", ds, scorer, options);
  const double sigma = std::sqrt(0.82 * 0.18 / 100);
  EXPECT_NEAR(r.metrics.ifr, 0.82, 3 * sigma);
  EXPECT_EQ(r.metrics.n_scored,
            static_cast<size_t>(std::lround(r.metrics.ifr * 100)));
}

TEST(EvaluatePromptTest, ParallelMatchesSerial) {
  Dataset ds = MakeSyntheticDataset("s", 400, 4, 3);
  MockProfile profile;
  profile.keyword_accuracy = {{"careful", 0.9}};
  profile.base_accuracy = 0.5;
  profile.confidence_noise = 0.1;
  profile.follow_rate = 0.8;
  MockScorer scorer(3, profile, {&ds});
  for (ConfidenceMode mode :
       {ConfidenceMode::kLogits, ConfidenceMode::kVerbalized}) {
    EvalOptions options;
    options.mode = mode;
    options.eval_seed = 77;
    options.exemplars = SampleExemplars(ds, 3, 1);
    options.workers = 1;
    EvalResult serial = EvaluatePromptSerial("Be careful.", ds, scorer, options);
    for (int workers : {1, 2, 4, 8}) {
      options.workers = workers;
      EvalResult par = EvaluatePrompt("Be careful.", ds, scorer, options);
      EXPECT_EQ(par.records, serial.records) << workers;
      EXPECT_EQ(par.metrics, serial.metrics);
      EXPECT_EQ(par.composite.value, serial.composite.value);
    }
  }
}

TEST(EvaluatePromptTest, BackendErrorTaggedWithItem) {
  std::vector<TaskItem> items = MakeSyntheticDataset("e", 5, 4, 1).items();
  items[3].id = "fail";
  Dataset ds("e", Domain::kSynthetic, items);
  TableScorer scorer({}, ds);
  EvalOptions options;
  options.workers = 4;
  try {
    EvaluatePrompt("Go.", ds, scorer, options);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("item fail"), std::string::npos)
        << e.what();
    EXPECT_EQ(e.status(), 500);
  }
}

TEST(EvaluatePromptTest, BudgetExhaustionPropagates) {
  Dataset ds = MakeSyntheticDataset("b", 50, 4, 1);
  BackendConfig cfg;
  cfg.kind = BackendKind::kMockScorer;
  cfg.seed = 1;
  BackendContext ctx;
  ctx.budget = std::make_shared<RequestBudget>(20);
  ctx.known_datasets = {&ds};
  auto scorer = MakeBackend(cfg, ctx);
  EXPECT_THROW(EvaluatePrompt("Go.", ds, *scorer, EvalOptions{}),
               BudgetExceeded);
}

TEST(EvaluatePromptTest, CompositeRecomputesFromRecords) {
  Dataset ds = MakeSyntheticDataset("c", 120, 4, 1);
  MockProfile profile;
  profile.base_accuracy = 0.7;
  profile.confidence_noise = 0.2;
  MockScorer scorer(1, profile, {&ds});
  EvalResult r = EvaluatePrompt("Go.", ds, scorer, EvalOptions{});
  EXPECT_EQ(r.metrics, ComputeMetrics(r.records));
  EXPECT_EQ(r.composite.value, NormalizeAndCompose(r.metrics).value);
}

TEST(ScoringOptionsTest, SharedWithOptimizer) {
  Dataset ds = MakeSyntheticDataset("o", 20, 4, 1);
  OptimizerConfig config;
  config.scoring_shots = 5;
  config.rng_seed = 4;
  EvalOptions a = ScoringOptions(config, ds, 0);
  EvalOptions b = ScoringOptions(config, ds, 0);
  EXPECT_EQ(a.exemplars.size(), 5u);
  EXPECT_EQ(a.exemplars, b.exemplars);
  EXPECT_EQ(a.eval_seed, b.eval_seed);
}

}  // namespace
}  // namespace promptxfer

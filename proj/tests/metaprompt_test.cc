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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "promptxfer/errors.h"
#include "support/fixtures.h"

namespace promptxfer {
namespace {

const char kOriginInstruction[] =
    "Answer the following multiple-choice questions by selecting the most "
    "accurate option from 'A', 'B', 'C', or 'D'. Use your general knowledge "
    "across various domains to provide the best answer.";

TEST(RenderHistoryTest, OriginInstructionPair) {
  PromptPool pool = {PromptRecord::FromText(kOriginInstruction, 0.45)};
  EXPECT_EQ(RenderHistory(pool, 20),
            std::string("text: ") + kOriginInstruction + "\nscore: 45");
}

TEST(RenderHistoryTest, AscendingOrder) {
  PromptPool pool = {PromptRecord::FromText("Higher.", 0.60),
                     PromptRecord::FromText("Lower.", 0.45)};
  EXPECT_EQ(RenderHistory(pool, 20),
            "text: Lower.\nscore: 45\n\ntext: Higher.\nscore: 60");
}

TEST(RenderHistoryTest, TruncatesToTopK) {
  PromptPool pool;
  for (int i = 0; i < 25; ++i)
    pool.push_back(PromptRecord::FromText("Prompt " + std::to_string(i) + ".",
                                          0.30 + i * 0.01));
  std::string rendered = RenderHistory(pool, 20);
  auto entries = ParseHistory(rendered);
  ASSERT_EQ(entries.size(), 20u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(rendered.find("text: Prompt " + std::to_string(i) + ".\n"),
              std::string::npos);
  }
  EXPECT_EQ(entries.front().text, "Prompt 5.");
  EXPECT_EQ(entries.back().text, "Prompt 24.");
}

TEST(RenderHistoryTest, ScorePercentFloors) {
  EXPECT_EQ(ScorePercent(0.45), 45);
  EXPECT_EQ(ScorePercent(0.999), 99);
  EXPECT_EQ(ScorePercent(1.0), 100);
  EXPECT_EQ(ScorePercent(0.0), 0);
  EXPECT_EQ(ScorePercent(0.29), 29);
  EXPECT_EQ(ScorePercent(0.57), 57);
}

std::string RandomText(std::mt19937_64& rng) {
  static const char* kWords[] = {"Answer", "the", "question", "carefully",
                                 "[note]", "'A'", "or", "B.", "choose",
                                 "wisely", "100%", "score", "text"};
  size_t n = 1 + rng() % 12;
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    if (i > 0) out += (rng() % 10 == 0) ? "\n" : " ";
    out += kWords[rng() % std::size(kWords)];
  }
  return out;
}

TEST(RenderHistoryTest, RoundTripRandomHistories) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    PromptPool pool;
    size_t n = 1 + rng() % 30;
    for (size_t i = 0; i < n; ++i) {
      pool.push_back(PromptRecord::FromText(RandomText(rng) + " #" +
                                                std::to_string(i),
                                            (rng() % 1001) / 1000.0));
    }
    size_t top_k = 1 + rng() % 25;
    auto parsed = ParseHistory(RenderHistory(pool, top_k));

    // Oracle: top_k by composite (ties by id), then ascending, ties by id.
    PromptPool expect = pool;
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
      return a.composite != b.composite ? a.composite > b.composite
                                        : a.id < b.id;
    });
    expect.resize(std::min(top_k, expect.size()));
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
      return a.composite != b.composite ? a.composite < b.composite
                                        : a.id < b.id;
    });
    ASSERT_EQ(parsed.size(), expect.size());
    for (size_t i = 0; i < parsed.size(); ++i) {
      EXPECT_EQ(parsed[i].text, expect[i].text);
      EXPECT_EQ(parsed[i].score, ScorePercent(expect[i].composite));
      if (i > 0) {
        EXPECT_GE(parsed[i].score, parsed[i - 1].score);
      }
    }
  }
}

TEST(BuildReferencePromptTest, FillsEverySlot) {
  Dataset ds = MakeSyntheticDataset("m", 6, 4, 1);
  PromptPool pool = {PromptRecord::FromText(kOriginInstruction, 0.45),
                     PromptRecord::FromText("Be precise.", 0.52)};
  auto shots = SampleExemplars(ds, 3, 2);
  for (auto id : {kPalmStyleTemplateId, kGptStyleTemplateId}) {
    const MetaPromptTemplate& tmpl = BuiltinTemplate(id);
    std::string p =
        BuildReferencePrompt(pool, shots, tmpl, 20, "Arithmetic drills.");
    EXPECT_EQ(p.find("{HISTORY}"), std::string::npos);
    EXPECT_EQ(p.find("{EXEMPLARS}"), std::string::npos);
    EXPECT_EQ(p.find("{TASK_DESCRIPTION}"), std::string::npos);
    EXPECT_NE(p.find("Arithmetic drills."), std::string::npos);
    EXPECT_NE(p.find(RenderHistory(pool, 20)), std::string::npos);
    EXPECT_NE(p.find(RenderMetaExemplars(shots)), std::string::npos);
    for (const auto& shot : shots) {
      EXPECT_NE(p.find(std::string("output:\n") + shot.gold),
                std::string::npos);
    }
    EXPECT_NE(p.find("<INS>"), std::string::npos);
    EXPECT_NE(p.find("bracket"), std::string::npos);
    EXPECT_EQ(ParseHistory(p).size(), 2u);
  }
  EXPECT_THROW(BuildReferencePrompt({}, shots, BuiltinTemplate("palm-style"),
                                    20),
               TemplateError);
}

TEST(MetaPromptTemplateTest, ParseRules) {
  EXPECT_THROW(MetaPromptTemplate::Parse("x", "{EXEMPLARS} in brackets"),
               TemplateError);
  EXPECT_THROW(
      MetaPromptTemplate::Parse("x", "{HISTORY}{HISTORY}{EXEMPLARS} bracket"),
      TemplateError);
  EXPECT_THROW(MetaPromptTemplate::Parse("x", "{HISTORY}\n{EXEMPLARS}\nWrite."),
               TemplateError);
  EXPECT_NO_THROW(MetaPromptTemplate::Parse(
      "x", "{HISTORY}\n{EXEMPLARS}\nPut it in square brackets."));
  EXPECT_THROW(BuiltinTemplate("nope"), TemplateError);
}

TEST(MetaPromptTemplateTest, LoadFromFile) {
  testing::TempDir dir;
  auto path = dir.path() / "t.txt";
  std::ofstream(path) << "Past:\n{HISTORY}\nExamples:\n{EXEMPLARS}\n"
                         "Reply with one instruction in square brackets.";
  MetaPromptTemplate t = LoadTemplateFile("custom", path);
  EXPECT_EQ(t.id, "custom");
  EXPECT_EQ(t.footer(), "Reply with one instruction in square brackets.");
  EXPECT_THROW(LoadTemplateFile("c", dir.path() / "missing.txt"),
               TemplateError);
}

TEST(ExtractCandidateTest, Examples) {
  EXPECT_EQ(ExtractCandidate(
                "Here you go: [As a medical expert, answer by selecting "
                "'A'–'D'.]"),
            "As a medical expert, answer by selecting 'A'–'D'.");
  EXPECT_EQ(ExtractCandidate("Select carefully."), "Select carefully.");
  EXPECT_EQ(ExtractCandidate("[] then [Use clinical reasoning.]"),
            "Use clinical reasoning.");
}

TEST(ExtractCandidateTest, EdgeCases) {
  EXPECT_EQ(ExtractCandidate("  [\"Quoted text.\"]  "), "Quoted text.");
  EXPECT_EQ(ExtractCandidate("[Pick [one] option.]"), "Pick [one] option.");
  EXPECT_THROW(ExtractCandidate("   "), CandidateRejected);
  EXPECT_THROW(ExtractCandidate("[ ] and []"), CandidateRejected);
  EXPECT_THROW(ExtractCandidate("[" + std::string(501, 'x') + "]"),
               CandidateRejected);
  EXPECT_EQ(ExtractCandidate("[" + std::string(500, 'x') + "]").size(), 500u);
  EXPECT_THROW(ExtractCandidate("[Use <INS> here.]"), CandidateRejected);
  try {
    ExtractCandidate("[" + std::string(20, 'y') + "]", 10);
    FAIL();
  } catch (const CandidateRejected& e) {
    EXPECT_EQ(e.reason(), CandidateRejected::Reason::kOverCap);
  }
}

TEST(DedupeTest, KeepsHigherComposite) {
  PromptPool pool = {PromptRecord::FromText("Be exact.", 0.5),
                     PromptRecord::FromText("Be exact.", 0.6)};
  PromptPool out = Dedupe(pool);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].composite, 0.6);
}

TEST(DedupeTest, CaseAndSpacingVariantsCollapse) {
  PromptPool pool = {PromptRecord::FromText("Be exact.", 0.5),
                     PromptRecord::FromText("  BE   exact. ", 0.4),
                     PromptRecord::FromText("be\nexact.", 0.3)};
  EXPECT_EQ(Dedupe(pool).size(), 1u);
  EXPECT_EQ(Dedupe(pool)[0].text, "Be exact.");
}

TEST(DedupeTest, DistinctUnchanged) {
  PromptPool pool;
  for (int i = 0; i < 8; ++i)
    pool.push_back(PromptRecord::FromText("Prompt " + std::to_string(i), 0.5));
  PromptPool out = Dedupe(pool);
  ASSERT_EQ(out.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(out[i].id, pool[i].id);
}

TEST(PromptRecordTest, IdIsContentHash) {
  EXPECT_EQ(PromptId("abc"), PromptId("abc"));
  EXPECT_NE(PromptId("abc"), PromptId("abd"));
  EXPECT_EQ(PromptId("abc").size(), 16u);
  PromptRecord r = PromptRecord::FromText("Hello.", 0.3);
  EXPECT_NO_THROW(r.Validate());
  r.text = "Changed.";
  EXPECT_THROW(r.Validate(), std::invalid_argument);
}

TEST(PromptRecordTest, ValidateRecomputesComposite) {
  MetricVector m;
  m.acc.value = 0.5;
  m.ece.value = 0.2;
  m.auroc.value = 0.7;
  m.pr_p.value = 0.6;
  m.pr_n.value = 0.4;
  PromptRecord r = PromptRecord::FromText("Hello.", 0.64);
  r.scores = {{"d1", m, 0.64}};
  EXPECT_NO_THROW(r.Validate());
  r.scores[0].composite = 0.65;
  EXPECT_THROW(r.Validate(), std::invalid_argument);
}

TEST(PromptTextTest, Validation) {
  EXPECT_TRUE(HasBalancedBrackets("a [b [c]] d"));
  EXPECT_FALSE(HasBalancedBrackets("a ]b["));
  EXPECT_FALSE(HasBalancedBrackets("[a"));
  EXPECT_THROW(ValidatePromptText("x <INS>"), CandidateRejected);
}

}  // namespace
}  // namespace promptxfer

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

#include <string>
#include <string_view>

#include "promptxfer/errors.h"
#include "promptxfer/metaprompt.h"

namespace promptxfer {
namespace {

// Shipped reference-prompt texts. Stored runs record the template id, so
// edits here change what those ids mean.
constexpr std::string_view kPalmStyleText =
    R"(Your task is to write an instruction for the following multiple-choice task: {TASK_DESCRIPTION}

I have some instructions along with their corresponding scores. The instructions are arranged in ascending order based on their scores, where higher scores indicate better quality.

{HISTORY}

The following exemplars show how to apply your instruction: you replace <INS> in each input with your instruction, then read the input and give an output. The output is scored as correct when it matches the given answer; the score also rewards responses that follow the answer format and state well calibrated confidence.

{EXEMPLARS}

Write your new instruction that is different from the old ones and has a score as high as possible. Write the instruction in square brackets.)";

constexpr std::string_view kGptStyleText =
    R"(You are optimizing the instruction given to a language model that answers multiple-choice questions.
Task: {TASK_DESCRIPTION}

Below are previous instructions and their scores (0 to 100), sorted from lowest to highest score:

{HISTORY}

Each instruction is placed where <INS> appears in inputs like these, followed by the expected output:

{EXEMPLARS}

Propose one new instruction that differs from every instruction above and is likely to score higher. A high score needs correct answers, strict adherence to the answer format and confidence that matches accuracy. Output only the new instruction enclosed in square brackets, for example [your instruction].)";

}  // namespace

const MetaPromptTemplate& BuiltinTemplate(std::string_view id) {
  static const MetaPromptTemplate palm = MetaPromptTemplate::Parse(
      std::string(kPalmStyleTemplateId), std::string(kPalmStyleText));
  static const MetaPromptTemplate gpt = MetaPromptTemplate::Parse(
      std::string(kGptStyleTemplateId), std::string(kGptStyleText));
  if (id == kPalmStyleTemplateId) return palm;
  if (id == kGptStyleTemplateId) return gpt;
  throw TemplateError("unknown template id \"" + std::string(id) + "\"");
}

}  // namespace promptxfer

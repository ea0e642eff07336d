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

// promptxfer: run optimization stages, evaluate a fixed prompt, export
// score curves.
//
// Exit status: 0 success; 1 configuration, data, or store error; 2 backend
// or request-budget failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "promptxfer/backend.h"
#include "promptxfer/config.h"
#include "promptxfer/dataset.h"
#include "promptxfer/errors.h"
#include "promptxfer/evaluator.h"
#include "promptxfer/metaprompt.h"
#include "promptxfer/optimizer.h"
#include "promptxfer/store.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace promptxfer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBackend = 2;

struct GlobalFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  bool json = false;
};

RunConfigFile LoadConfig(const GlobalFlags& flags) {
  if (flags.config_path.empty()) throw ConfigError("--config is required");
  RunConfigFile config = RunConfigFile::Load(flags.config_path);
  if (flags.seed) {
    config.optimizer.rng_seed = *flags.seed;
    config.raw["optimizer"]["rng_seed"] = *flags.seed;
  }
  return config;
}

std::vector<const Dataset*> Pointers(const std::vector<Dataset>& datasets) {
  std::vector<const Dataset*> out;
  for (const auto& d : datasets) out.push_back(&d);
  return out;
}

// Prints progress to stderr as steps land on disk.
class ProgressSink : public StepSink {
 public:
  explicit ProgressSink(RunWriter& writer) : writer_(writer) {}
  void OnStep(const StepEntry& entry, const OptimizerState& state) override {
    writer_.OnStep(entry, state);
    std::cerr << fmt::format("step {:>3}  candidates {}  best {:.4f}\n",
                             entry.step, entry.candidates.size(),
                             entry.best_so_far);
  }

 private:
  RunWriter& writer_;
};

struct OptimizeArgs {
  std::string stage;
  std::string seed_run;
  std::string run_id;
};

int CmdOptimize(const GlobalFlags& flags, const OptimizeArgs& args) {
  Stage stage = ParseTaskRole(args.stage);
  if (stage == Stage::kTarget && args.seed_run.empty()) {
    std::cerr << "usage: promptxfer optimize target --config <path> "
                 "--seed-run <source-run-id>\n";
    return kExitConfig;
  }
  RunConfigFile config = LoadConfig(flags);
  TaskSet tasks = config.LoadTaskSet(stage);
  MetaPromptTemplate tmpl = config.LoadTemplate();
  RunStore store(config.store_root);
  std::optional<PromptPool> source_pool;
  if (stage == Stage::kTarget) source_pool = store.LoadSourcePool(args.seed_run);

  BackendContext context;
  if (config.request_budget > 0)
    context.budget = std::make_shared<RequestBudget>(config.request_budget);
  context.known_datasets = Pointers(tasks.datasets());
  std::unique_ptr<Backend> reference = MakeBackend(config.reference, context);
  std::unique_ptr<Backend> scorer = MakeBackend(config.scorer, context);

  RunMeta meta;
  meta.run_id = args.run_id.empty() ? NewRunId() : args.run_id;
  meta.created_at = UtcTimestamp();
  meta.stage = stage;
  meta.template_id = tmpl.id;
  if (!args.seed_run.empty()) meta.seed_run = args.seed_run;
  RunWriter writer = store.CreateRun(meta, config.raw);
  std::cout << "run_id: " << meta.run_id << std::endl;

  ProgressSink sink(writer);
  StageResult result;
  try {
    result = RunStage(config.optimizer, tasks, *reference, *scorer, tmpl, &sink,
                      source_pool ? &*source_pool : nullptr);
  } catch (const BackendError&) {
    std::cerr << "partial run preserved in " << writer.dir().string() << "\n";
    throw;
  }
  writer.Finish(result);

  if (flags.json) {
    json out = {{"run_id", meta.run_id},
                {"best_prompt", result.best.text},
                {"best_id", result.best.id},
                {"best_composite", result.best.composite},
                {"termination", TerminationName(result.termination)},
                {"steps", result.steps}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "best_prompt: " << result.best.text << "\n"
              << fmt::format("best_composite: {:.4f}\n", result.best.composite)
              << "termination: " << TerminationName(result.termination) << "\n"
              << "steps: " << result.steps << "\n";
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string prompt;
  std::string prompt_file;
  std::string dataset;
};

std::string ReadPromptFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompt file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
    text.pop_back();
  return text;
}

// Two decimals, as printed in the table.
double Round2(double v) { return std::stod(fmt::format("{:.2f}", v)); }

int CmdEvaluate(const GlobalFlags& flags, const EvaluateArgs& args) {
  RunConfigFile config = LoadConfig(flags);
  std::string prompt =
      args.prompt_file.empty() ? args.prompt : ReadPromptFile(args.prompt_file);
  if (!fs::is_regular_file(args.dataset))
    throw DatasetError("dataset file not found: " + args.dataset);
  Dataset dataset = LoadDataset(args.dataset);

  BackendContext context;
  if (config.request_budget > 0)
    context.budget = std::make_shared<RequestBudget>(config.request_budget);
  context.known_datasets = {&dataset};
  std::unique_ptr<Backend> scorer = MakeBackend(config.scorer, context);
  EvalResult result = EvaluatePrompt(prompt, dataset, *scorer,
                                     ScoringOptions(config.optimizer, dataset, 0));
  const MetricVector& m = result.metrics;
  const double values[] = {m.ifr,         m.acc.value,  m.ece.value,
                           m.auroc.value, m.pr_p.value, m.pr_n.value,
                           result.composite.value};
  if (flags.json) {
    json out = {{"prompt_id", PromptId(prompt)},
                {"dataset", dataset.name()},
                {"mode", ConfidenceModeName(result.mode)},
                {"ifr", Round2(values[0])},
                {"acc", Round2(values[1])},
                {"ece", Round2(values[2])},
                {"roc", Round2(values[3])},
                {"pr_p", Round2(values[4])},
                {"pr_n", Round2(values[5])},
                {"composite", Round2(values[6])},
                {"n_scored", m.n_scored},
                {"n_total", m.n_total},
                {"scorer_calls", result.scorer_calls}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << fmt::format("{:<6}{:<6}{:<6}{:<6}{:<6}{:<6}{}\n", "IFR", "ACC",
                           "ECE", "ROC", "PR-P", "PR-N", "COMPOSITE");
  for (size_t i = 0; i + 1 < std::size(values); ++i)
    std::cout << fmt::format("{:<6.2f}", values[i]);
  std::cout << fmt::format("{:.2f}\n", values[std::size(values) - 1]);
  return kExitOk;
}

struct ReportArgs {
  std::string run_id;
  std::string format = "csv";
  std::string output;
};

int CmdReport(const GlobalFlags& flags, const ReportArgs& args) {
  RunConfigFile config = LoadConfig(flags);
  CurveFormat format = ParseCurveFormat(args.format);
  RunStore store(config.store_root);
  std::optional<fs::path> output;
  if (!args.output.empty()) output = args.output;
  std::cout << store.ExportCurve(args.run_id, format, output).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt optimization with source-to-target transfer"};
  app.require_subcommand(1);
  GlobalFlags flags;
  uint64_t seed = 0;
  app.add_option("--config", flags.config_path, "Run configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override optimizer.rng_seed");
  app.add_flag("--json", flags.json, "Machine-readable output");

  OptimizeArgs optimize_args;
  auto* optimize = app.add_subcommand("optimize", "Run one optimization stage");
  optimize->fallthrough();
  optimize->add_option("stage", optimize_args.stage, "source or target")
      ->required()
      ->check(CLI::IsMember({"source", "target"}));
  optimize->add_option("--seed-run", optimize_args.seed_run,
                       "Completed source run to seed the target stage");
  optimize->add_option("--run-id", optimize_args.run_id,
                       "Explicit run id (default: timestamped)");

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score one prompt");
  evaluate->fallthrough();
  auto* prompt_opt =
      evaluate->add_option("--prompt", evaluate_args.prompt, "Prompt text");
  auto* file_opt = evaluate->add_option("--prompt-file",
                                        evaluate_args.prompt_file,
                                        "File holding the prompt text");
  prompt_opt->excludes(file_opt);
  evaluate->add_option("--dataset", evaluate_args.dataset, "Dataset JSONL")
      ->required();

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Export a run's score curve");
  report->fallthrough();
  report->add_option("--run", report_args.run_id, "Run id")->required();
  report->add_option("--format", report_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--output", report_args.output, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (seed_opt->count() > 0) flags.seed = seed;

  try {
    if (*optimize) return CmdOptimize(flags, optimize_args);
    if (*evaluate) {
      if (evaluate_args.prompt.empty() && evaluate_args.prompt_file.empty()) {
        std::cerr << "evaluate: one of --prompt or --prompt-file is required\n";
        return kExitConfig;
      }
      return CmdEvaluate(flags, evaluate_args);
    }
    if (*report) return CmdReport(flags, report_args);
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

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

#ifndef PROMPTXFER_STORE_H_
#define PROMPTXFER_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "promptxfer/metaprompt.h"
#include "promptxfer/optimizer.h"

namespace promptxfer {

// Layout of one run directory:
//   config.json  identity, stage, template id, config snapshot, seed run
//   steps.jsonl  one line per step, appended and fsync'd
//   best.json    current best record, replaced atomically every step
//   pool.json    final pool and termination reason; present iff complete
//   .lock        flock'd by the single writer

inline constexpr char kConfigFile[] = "config.json";
inline constexpr char kStepsFile[] = "steps.jsonl";
inline constexpr char kBestFile[] = "best.json";
inline constexpr char kPoolFile[] = "pool.json";
inline constexpr char kLockFile[] = ".lock";

struct RunMeta {
  std::string run_id;
  std::string created_at;  // UTC, ISO 8601
  Stage stage = Stage::kSource;
  std::string template_id;
  std::optional<std::string> seed_run;
};

struct RunRecord {
  RunMeta meta;
  nlohmann::json config_snapshot;
  std::vector<StepEntry> step_log;
  std::optional<PromptRecord> best;
  // Both set iff pool.json exists.
  std::optional<PromptPool> final_pool;
  std::optional<Termination> termination;

  bool complete() const { return final_pool.has_value(); }
};

// Current time as 2026-10-16T10:15:00Z.
std::string UtcTimestamp();

// Timestamp plus a random suffix, e.g. 20261016T101500Z-3f9c2a1b.
std::string NewRunId();

// Run ids double as directory names.
void ValidateRunId(std::string_view run_id);

nlohmann::json MetricVectorToJson(const MetricVector& m);
MetricVector MetricVectorFromJson(const nlohmann::json& j);
nlohmann::json PromptRecordToJson(const PromptRecord& r);
PromptRecord PromptRecordFromJson(const nlohmann::json& j);
nlohmann::json StepEntryToJson(const StepEntry& e);
StepEntry StepEntryFromJson(const nlohmann::json& j);

// Sole writer of one run directory. Move-only; releases the lock on
// destruction.
class RunWriter : public StepSink {
 public:
  RunWriter(RunWriter&& other) noexcept;
  RunWriter& operator=(RunWriter&&) = delete;
  RunWriter(const RunWriter&) = delete;
  ~RunWriter() override;

  // Appends durably. Re-recording an already stored step with an identical
  // payload is a no-op; a different payload for a stored or older step, or
  // any write to a closed run, throws StoreError.
  void RecordStep(const StepEntry& entry);
  void WriteBest(const PromptRecord& best);
  // Writes pool.json and closes the run.
  void Finish(const StageResult& result);

  void OnStep(const StepEntry& entry, const OptimizerState& state) override;

  const std::string& run_id() const { return run_id_; }
  const std::filesystem::path& dir() const { return dir_; }
  bool closed() const { return closed_; }

 private:
  friend class RunStore;
  RunWriter(std::filesystem::path dir, std::string run_id, int lock_fd);

  std::filesystem::path dir_;
  std::string run_id_;
  int lock_fd_ = -1;
  int last_step_ = 0;
  // Payload digest per recorded step.
  std::map<int, uint64_t> digests_;
  bool closed_ = false;
};

enum class CurveFormat { kCsv, kJson };

CurveFormat ParseCurveFormat(std::string_view name);

struct CurveRow {
  int step = 0;
  double best_so_far = 0.0;
  // Absent when the step produced no candidates.
  std::optional<double> mean_candidate;
  size_t scorer_calls = 0;
};

// Throws IntegrityError if best_so_far ever decreases.
std::vector<CurveRow> CurveRows(const std::vector<StepEntry>& step_log);
std::string RenderCurve(const std::vector<CurveRow>& rows, CurveFormat format);

class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  // Creates the directory and config.json and takes the writer lock.
  // Throws StoreError if the run already exists.
  RunWriter CreateRun(RunMeta meta, const nlohmann::json& config_snapshot);

  // Reads a run and checks its invariants. A torn final line in
  // steps.jsonl (no trailing newline) is dropped. Throws StoreError for an
  // unknown run, IntegrityError for inconsistent contents.
  RunRecord Load(std::string_view run_id) const;

  // Final pool of a complete source run, sorted by composite descending.
  PromptPool LoadSourcePool(std::string_view run_id) const;

  // Writes the curve to `output`, or to curve.<ext> in the run directory.
  // Returns the path written.
  std::filesystem::path ExportCurve(
      std::string_view run_id, CurveFormat format,
      const std::optional<std::filesystem::path>& output = std::nullopt) const;

  std::filesystem::path RunDir(std::string_view run_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace promptxfer

#endif  // PROMPTXFER_STORE_H_

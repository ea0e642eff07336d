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

#include "promptxfer/store.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "promptxfer/errors.h"
#include "promptxfer/hashing.h"

namespace promptxfer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void ThrowErrno(const std::string& what, const fs::path& path) {
  throw StoreError(what + " " + path.string() + ": " + std::strerror(errno));
}

void WriteAll(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("write", path);
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
}

void SyncDir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Write to a sibling temp file, fsync, rename over the target.
void WriteFileAtomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) ThrowErrno("open", tmp);
  try {
    WriteAll(fd, content, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    ThrowErrno("fsync", tmp);
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) ThrowErrno("rename", path);
  SyncDir(path.parent_path());
}

void AppendLineDurably(const fs::path& path, std::string_view line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                  0644);
  if (fd < 0) ThrowErrno("open", path);
  std::string buf(line);
  buf.push_back('\n');
  try {
    WriteAll(fd, buf, path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    ThrowErrno("fsync", path);
  }
  ::close(fd);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ParseJsonFile(const fs::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw IntegrityError(path.filename().string() + ": " + e.what());
  }
}

json MetricValueToJson(const MetricValue& v) {
  return {{"value", v.value}, {"degenerate", v.degenerate}};
}

MetricValue MetricValueFromJson(const json& j) {
  return {j.at("value").get<double>(), j.at("degenerate").get<bool>()};
}

json RunMetaToJson(const RunMeta& meta, const json& snapshot) {
  json j = {{"run_id", meta.run_id},
            {"created_at", meta.created_at},
            {"stage", TaskRoleName(meta.stage)},
            {"template_id", meta.template_id},
            {"seed_run", nullptr},
            {"config", snapshot}};
  if (meta.seed_run) j["seed_run"] = *meta.seed_run;
  return j;
}

std::string FormatNumber(double v) { return fmt::format("{}", v); }

}  // namespace

std::string UtcTimestamp() {
  std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return stamp;
}

std::string NewRunId() {
  std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
  std::random_device rd;
  return fmt::format("{}-{:08x}", stamp, rd());
}

void ValidateRunId(std::string_view run_id) {
  if (run_id.empty()) throw StoreError("empty run id");
  if (run_id.front() == '.')
    throw StoreError("run id may not start with '.': " + std::string(run_id));
  for (char c : run_id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok)
      throw StoreError("run id has invalid characters: " + std::string(run_id));
  }
}

json MetricVectorToJson(const MetricVector& m) {
  return {{"acc", MetricValueToJson(m.acc)},
          {"ece", MetricValueToJson(m.ece)},
          {"auroc", MetricValueToJson(m.auroc)},
          {"pr_p", MetricValueToJson(m.pr_p)},
          {"pr_n", MetricValueToJson(m.pr_n)},
          {"ifr", m.ifr},
          {"n_scored", m.n_scored},
          {"n_total", m.n_total}};
}

MetricVector MetricVectorFromJson(const json& j) {
  MetricVector m;
  m.acc = MetricValueFromJson(j.at("acc"));
  m.ece = MetricValueFromJson(j.at("ece"));
  m.auroc = MetricValueFromJson(j.at("auroc"));
  m.pr_p = MetricValueFromJson(j.at("pr_p"));
  m.pr_n = MetricValueFromJson(j.at("pr_n"));
  m.ifr = j.at("ifr").get<double>();
  m.n_scored = j.at("n_scored").get<size_t>();
  m.n_total = j.at("n_total").get<size_t>();
  return m;
}

json PromptRecordToJson(const PromptRecord& r) {
  json scores = json::array();
  for (const auto& s : r.scores) {
    scores.push_back({{"dataset", s.dataset_name},
                      {"composite", s.composite},
                      {"metrics", MetricVectorToJson(s.metrics)}});
  }
  return {{"id", r.id},
          {"text", r.text},
          {"composite", r.composite},
          {"stage", TaskRoleName(r.stage)},
          {"step", r.step},
          {"parent_ids", r.parent_ids},
          {"scores", scores}};
}

PromptRecord PromptRecordFromJson(const json& j) {
  PromptRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.composite = j.at("composite").get<double>();
  r.stage = ParseTaskRole(j.at("stage").get<std::string>());
  r.step = j.at("step").get<int>();
  r.parent_ids = j.at("parent_ids").get<std::vector<std::string>>();
  for (const auto& s : j.at("scores")) {
    r.scores.push_back({s.at("dataset").get<std::string>(),
                        MetricVectorFromJson(s.at("metrics")),
                        s.at("composite").get<double>()});
  }
  return r;
}

json StepEntryToJson(const StepEntry& e) {
  json candidates = json::array();
  for (const auto& c : e.candidates) candidates.push_back(PromptRecordToJson(c));
  return {{"step", e.step},
          {"best_so_far", e.best_so_far},
          {"best_id", e.best_id},
          {"scorer_calls", e.scorer_calls},
          {"discarded", e.discarded},
          {"duplicates", e.duplicates},
          {"wall_time_seconds", e.wall_time_seconds},
          {"candidates", candidates}};
}

StepEntry StepEntryFromJson(const json& j) {
  StepEntry e;
  e.step = j.at("step").get<int>();
  e.best_so_far = j.at("best_so_far").get<double>();
  e.best_id = j.at("best_id").get<std::string>();
  e.scorer_calls = j.at("scorer_calls").get<size_t>();
  e.discarded = j.at("discarded").get<size_t>();
  e.duplicates = j.at("duplicates").get<size_t>();
  e.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  for (const auto& c : j.at("candidates"))
    e.candidates.push_back(PromptRecordFromJson(c));
  return e;
}

RunWriter::RunWriter(fs::path dir, std::string run_id, int lock_fd)
    : dir_(std::move(dir)), run_id_(std::move(run_id)), lock_fd_(lock_fd) {}

RunWriter::RunWriter(RunWriter&& other) noexcept
    : dir_(std::move(other.dir_)),
      run_id_(std::move(other.run_id_)),
      lock_fd_(std::exchange(other.lock_fd_, -1)),
      last_step_(other.last_step_),
      digests_(std::move(other.digests_)),
      closed_(other.closed_) {}

RunWriter::~RunWriter() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void RunWriter::RecordStep(const StepEntry& entry) {
  if (closed_) throw StoreError("run " + run_id_ + " is closed");
  std::string payload = StepEntryToJson(entry).dump();
  const uint64_t digest = Fnv1a64(payload);
  if (entry.step <= last_step_) {
    auto it = digests_.find(entry.step);
    if (it != digests_.end() && it->second == digest) return;
    if (entry.step == last_step_)
      throw StoreError(fmt::format(
          "run {}: step {} already recorded with a different payload",
          run_id_, entry.step));
    throw StoreError(fmt::format("run {}: step regression ({} after {})",
                                 run_id_, entry.step, last_step_));
  }
  if (entry.step < 1)
    throw StoreError(fmt::format("run {}: invalid step {}", run_id_,
                                 entry.step));
  AppendLineDurably(dir_ / kStepsFile, payload);
  last_step_ = entry.step;
  digests_[entry.step] = digest;
}

void RunWriter::WriteBest(const PromptRecord& best) {
  if (closed_) throw StoreError("run " + run_id_ + " is closed");
  WriteFileAtomic(dir_ / kBestFile, PromptRecordToJson(best).dump(2));
}

void RunWriter::OnStep(const StepEntry& entry, const OptimizerState& state) {
  RecordStep(entry);
  WriteBest(state.best);
}

void RunWriter::Finish(const StageResult& result) {
  if (closed_) throw StoreError("run " + run_id_ + " is closed");
  WriteBest(result.best);
  json pool = json::array();
  for (const auto& r : result.pool) pool.push_back(PromptRecordToJson(r));
  json j = {{"termination", TerminationName(result.termination)},
            {"final_step", result.steps},
            {"pool", pool}};
  WriteFileAtomic(dir_ / kPoolFile, j.dump(2));
  closed_ = true;
}

CurveFormat ParseCurveFormat(std::string_view name) {
  if (name == "csv") return CurveFormat::kCsv;
  if (name == "json") return CurveFormat::kJson;
  throw ConfigError("unknown curve format '" + std::string(name) +
                    "' (expected csv or json)");
}

std::vector<CurveRow> CurveRows(const std::vector<StepEntry>& step_log) {
  std::vector<CurveRow> rows;
  for (const auto& e : step_log) {
    if (!rows.empty() && e.best_so_far < rows.back().best_so_far) {
      throw IntegrityError(fmt::format("best_so_far decreases at step {}",
                                       e.step));
    }
    CurveRow row{e.step, e.best_so_far, std::nullopt, e.scorer_calls};
    if (!e.candidates.empty()) {
      // Extended precision so identical scores average to themselves.
      long double sum = 0.0L;
      for (const auto& c : e.candidates) sum += c.composite;
      row.mean_candidate = static_cast<double>(
          sum / static_cast<long double>(e.candidates.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string RenderCurve(const std::vector<CurveRow>& rows,
                        CurveFormat format) {
  if (format == CurveFormat::kJson) {
    json out = json::array();
    for (const auto& r : rows) {
      json mean = nullptr;
      if (r.mean_candidate) mean = *r.mean_candidate;
      out.push_back({{"step", r.step},
                     {"best_so_far", r.best_so_far},
                     {"mean_candidate", mean},
                     {"scorer_calls", r.scorer_calls}});
    }
    return out.dump(2) + "\n";
  }
  std::string out = "step,best_so_far,mean_candidate,scorer_calls\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.step, FormatNumber(r.best_so_far),
                       r.mean_candidate ? FormatNumber(*r.mean_candidate) : "",
                       r.scorer_calls);
  }
  return out;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::RunDir(std::string_view run_id) const {
  ValidateRunId(run_id);
  return root_ / std::string(run_id);
}

RunWriter RunStore::CreateRun(RunMeta meta, const json& config_snapshot) {
  fs::path dir = RunDir(meta.run_id);
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw StoreError("cannot create " + root_.string() + ": " +
                           ec.message());
  if (!fs::create_directory(dir, ec)) {
    if (ec) throw StoreError("cannot create " + dir.string() + ": " +
                             ec.message());
    throw StoreError("run " + meta.run_id + " already exists");
  }
  fs::path lock = dir / kLockFile;
  int fd = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) ThrowErrno("open", lock);
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw StoreError("run " + meta.run_id + " is locked by another writer");
  }
  RunWriter writer(dir, meta.run_id, fd);
  WriteFileAtomic(dir / kConfigFile,
                  RunMetaToJson(meta, config_snapshot).dump(2));
  return writer;
}

RunRecord RunStore::Load(std::string_view run_id) const {
  fs::path dir = RunDir(run_id);
  if (!fs::is_directory(dir))
    throw StoreError("unknown run " + std::string(run_id) + " under " +
                     root_.string());
  RunRecord run;
  fs::path config_path = dir / kConfigFile;
  if (!fs::exists(config_path))
    throw IntegrityError("run " + std::string(run_id) + ": missing " +
                         kConfigFile);
  json config = ParseJsonFile(config_path);
  try {
    run.meta.run_id = config.at("run_id").get<std::string>();
    run.meta.created_at = config.at("created_at").get<std::string>();
    run.meta.stage = ParseTaskRole(config.at("stage").get<std::string>());
    run.meta.template_id = config.at("template_id").get<std::string>();
    if (!config.at("seed_run").is_null())
      run.meta.seed_run = config.at("seed_run").get<std::string>();
    run.config_snapshot = config.at("config");
  } catch (const std::exception& e) {
    throw IntegrityError(std::string(kConfigFile) + ": " + e.what());
  }
  if (run.meta.run_id != run_id)
    throw IntegrityError(std::string(kConfigFile) + ": run id mismatch");

  // Step log. A final line without its newline is a torn append.
  fs::path steps_path = dir / kStepsFile;
  std::string content = fs::exists(steps_path) ? ReadFile(steps_path) : "";
  size_t pos = 0;
  int line_no = 0;
  double running_best = -1.0;
  std::set<std::string> seen_ids;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto where = [&] {
      return fmt::format("{}:{}: ", kStepsFile, line_no);
    };
    StepEntry e;
    try {
      e = StepEntryFromJson(json::parse(line));
      for (const auto& c : e.candidates) c.Validate();
    } catch (const std::exception& ex) {
      throw IntegrityError(where() + ex.what());
    }
    if (!run.step_log.empty() && e.step <= run.step_log.back().step)
      throw IntegrityError(where() + "step numbers not strictly increasing");
    for (const auto& c : e.candidates) {
      if (!seen_ids.insert(c.id).second)
        throw IntegrityError(where() + "candidate " + c.id + " repeated");
      if (c.composite > running_best) running_best = c.composite;
    }
    if (e.best_so_far != running_best)
      throw IntegrityError(where() +
                           "best_so_far does not match the candidates seen");
    run.step_log.push_back(std::move(e));
  }
  double last_best = run.step_log.empty() ? -1.0
                                          : run.step_log.back().best_so_far;

  fs::path best_path = dir / kBestFile;
  if (fs::exists(best_path)) {
    try {
      run.best = PromptRecordFromJson(ParseJsonFile(best_path));
      run.best->Validate();
    } catch (const IntegrityError&) {
      throw;
    } catch (const std::exception& e) {
      throw IntegrityError(std::string(kBestFile) + ": " + e.what());
    }
    // May trail the log by one step if the process died in between.
    if (!seen_ids.count(run.best->id) || run.best->composite > last_best)
      throw IntegrityError(std::string(kBestFile) +
                           ": best record not found in the step log");
  }

  fs::path pool_path = dir / kPoolFile;
  if (fs::exists(pool_path)) {
    json pool = ParseJsonFile(pool_path);
    PromptPool records;
    try {
      run.termination = ParseTermination(pool.at("termination").get<std::string>());
      for (const auto& r : pool.at("pool")) {
        records.push_back(PromptRecordFromJson(r));
        records.back().Validate();
      }
      if (run.step_log.empty() ||
          pool.at("final_step").get<int>() != run.step_log.back().step)
        throw IntegrityError("final_step does not match the step log");
    } catch (const IntegrityError& e) {
      throw IntegrityError(std::string(kPoolFile) + ": " + e.what());
    } catch (const std::exception& e) {
      throw IntegrityError(std::string(kPoolFile) + ": " + e.what());
    }
    if (records.empty() || records.size() != seen_ids.size())
      throw IntegrityError(std::string(kPoolFile) +
                           ": pool does not match the step log");
    double top = records.front().composite;
    for (const auto& r : records) {
      if (!seen_ids.count(r.id))
        throw IntegrityError(std::string(kPoolFile) + ": record " + r.id +
                             " missing from the step log");
      top = std::max(top, r.composite);
    }
    if (top != last_best || !run.best || run.best->composite != last_best)
      throw IntegrityError(std::string(kPoolFile) +
                           ": best does not match the step log");
    SortByCompositeDescending(records);
    run.final_pool = std::move(records);
  }
  return run;
}

PromptPool RunStore::LoadSourcePool(std::string_view run_id) const {
  RunRecord run = Load(run_id);
  if (run.meta.stage != Stage::kSource)
    throw StoreError("run " + std::string(run_id) + " is a " +
                     std::string(TaskRoleName(run.meta.stage)) +
                     " run; a source run is required");
  if (!run.complete())
    throw IntegrityError("run " + std::string(run_id) + " is incomplete: " +
                         (RunDir(run_id) / kPoolFile).string() + " is missing");
  return *run.final_pool;
}

fs::path RunStore::ExportCurve(std::string_view run_id, CurveFormat format,
                               const std::optional<fs::path>& output) const {
  RunRecord run = Load(run_id);
  std::string body = RenderCurve(CurveRows(run.step_log), format);
  fs::path path = output ? *output
                         : RunDir(run_id) / (format == CurveFormat::kCsv
                                                 ? "curve.csv"
                                                 : "curve.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  out << body;
  if (!out) throw StoreError("cannot write " + path.string());
  return path;
}

}  // namespace promptxfer

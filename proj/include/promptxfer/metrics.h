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

#ifndef PROMPTXFER_METRICS_H_
#define PROMPTXFER_METRICS_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptxfer {

// Scorer outcome for one item. Unfollowed responses carry neither a letter
// nor a confidence and never count as correct.
struct ItemRecord {
  std::string item_id;
  bool followed = false;
  std::optional<char> predicted;
  bool correct = false;
  std::optional<double> confidence;

  static ItemRecord Unfollowed(std::string id);
  static ItemRecord Answered(std::string id, char letter, bool correct,
                             double confidence);

  // Throws std::invalid_argument when the followed/absent invariants break.
  void Validate() const;

  friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

enum class Metric { kAccuracy, kEce, kAuroc, kPrPositive, kPrNegative };

inline constexpr std::array<Metric, 5> kObjectiveMetrics = {
    Metric::kAccuracy, Metric::kEce, Metric::kAuroc, Metric::kPrPositive,
    Metric::kPrNegative};

// "acc", "ece", "auroc", "pr_p", "pr_n".
std::string_view MetricName(Metric metric);
Metric ParseMetric(std::string_view name);

// A metric value; `degenerate` marks a fallback used because the records do
// not define the metric (e.g. AUROC with a single class).
struct MetricValue {
  double value = 0.0;
  bool degenerate = false;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct MetricVector {
  MetricValue acc;
  MetricValue ece;
  MetricValue auroc;
  MetricValue pr_p;
  MetricValue pr_n;
  double ifr = 0.0;
  size_t n_scored = 0;
  size_t n_total = 0;

  const MetricValue& Get(Metric metric) const;
  MetricValue& Get(Metric metric);

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

inline constexpr int kDefaultEceBins = 10;

struct CalibrationBin {
  size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

// Equal-width bins over [0, 1]; bin i (1-based) holds ((i-1)/n, i/n] and
// bin 1 also holds 0. Empty bins are kept with count 0.
struct CalibrationBinning {
  int n_bins = kDefaultEceBins;
  std::vector<CalibrationBin> bins;
};

// 1-based bin for `confidence`.
int CalibrationBinIndex(double confidence, int n_bins);

CalibrationBinning BinCalibration(std::span<const ItemRecord> records,
                                  int n_bins = kDefaultEceBins);

// Correct / total; unfollowed records count as incorrect. Throws
// std::invalid_argument on empty input.
double Accuracy(std::span<const ItemRecord> records);

// Fallback when no record is followed: 1.0, flagged degenerate.
MetricValue ExpectedCalibrationError(std::span<const ItemRecord> records,
                                     int n_bins = kDefaultEceBins);

// Mann-Whitney AUROC over followed records with "correct" as the positive
// class. Fallback 0.5 when either class is empty.
MetricValue Auroc(std::span<const ItemRecord> records);

enum class PrClass { kPositive, kNegative };

// Average precision. kPositive ranks correct records by confidence;
// kNegative ranks incorrect records by 1 - confidence. Fallback when the
// class is empty: its prevalence among followed records.
MetricValue PrAuc(std::span<const ItemRecord> records, PrClass pr_class);

double InstructionFollowingRate(std::span<const ItemRecord> records);

MetricVector ComputeMetrics(std::span<const ItemRecord> records,
                            int n_bins = kDefaultEceBins);

struct RankedLabel {
  double score = 0.0;
  bool positive = false;
  std::string_view id;
};

// Sum over positives of precision at their rank, divided by the number of
// positives. Ranking is descending score, ties by ascending id. Requires at
// least one positive.
double AveragePrecision(std::vector<RankedLabel> ranked);

using MetricWeights = std::map<Metric, double>;

// 1/5 on each objective metric.
MetricWeights DefaultWeights();

struct CompositeScore {
  double value = 0.0;
  MetricWeights weights;
  std::map<Metric, double> normalized;
};

// ece and pr_n enter as 1 - v; the rest as-is. IFR is never weighted.
// Throws std::invalid_argument if the weights are negative or do not sum to
// 1 within 1e-9.
CompositeScore NormalizeAndCompose(const MetricVector& metrics,
                                   const MetricWeights& weights =
                                       DefaultWeights());

}  // namespace promptxfer

#endif  // PROMPTXFER_METRICS_H_

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

#include "promptxfer/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace promptxfer {
namespace {

void RequireNonEmpty(std::span<const ItemRecord> records, const char* what) {
  if (records.empty()) {
    throw std::invalid_argument(std::string(what) + " of an empty record set");
  }
}

struct Scored {
  double confidence;
  bool correct;
};

std::vector<Scored> FollowedScores(std::span<const ItemRecord> records) {
  std::vector<Scored> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.followed) out.push_back({*r.confidence, r.correct});
  }
  return out;
}

}  // namespace

ItemRecord ItemRecord::Unfollowed(std::string id) {
  ItemRecord r;
  r.item_id = std::move(id);
  return r;
}

ItemRecord ItemRecord::Answered(std::string id, char letter, bool correct,
                                double confidence) {
  ItemRecord r;
  r.item_id = std::move(id);
  r.followed = true;
  r.predicted = letter;
  r.correct = correct;
  r.confidence = confidence;
  return r;
}

void ItemRecord::Validate() const {
  if (followed) {
    if (!predicted || !confidence) {
      throw std::invalid_argument("followed record " + item_id +
                                  " lacks a prediction or confidence");
    }
    if (!(*confidence >= 0.0 && *confidence <= 1.0)) {
      throw std::invalid_argument("record " + item_id +
                                  " has confidence outside [0, 1]");
    }
  } else if (predicted || confidence || correct) {
    throw std::invalid_argument("unfollowed record " + item_id +
                                " carries an answer");
  }
}

std::string_view MetricName(Metric metric) {
  switch (metric) {
    case Metric::kAccuracy:
      return "acc";
    case Metric::kEce:
      return "ece";
    case Metric::kAuroc:
      return "auroc";
    case Metric::kPrPositive:
      return "pr_p";
    case Metric::kPrNegative:
      return "pr_n";
  }
  return "acc";
}

Metric ParseMetric(std::string_view name) {
  for (Metric m : kObjectiveMetrics) {
    if (MetricName(m) == name) return m;
  }
  throw std::invalid_argument("unknown metric \"" + std::string(name) + "\"");
}

const MetricValue& MetricVector::Get(Metric metric) const {
  switch (metric) {
    case Metric::kAccuracy:
      return acc;
    case Metric::kEce:
      return ece;
    case Metric::kAuroc:
      return auroc;
    case Metric::kPrPositive:
      return pr_p;
    case Metric::kPrNegative:
      return pr_n;
  }
  return acc;
}

MetricValue& MetricVector::Get(Metric metric) {
  return const_cast<MetricValue&>(std::as_const(*this).Get(metric));
}

int CalibrationBinIndex(double confidence, int n_bins) {
  int i = static_cast<int>(std::ceil(confidence * n_bins));
  i = std::clamp(i, 1, n_bins);
  // Bin edges are k/n as doubles; fix up rounding in the product above.
  while (i > 1 && confidence <= static_cast<double>(i - 1) / n_bins) --i;
  while (i < n_bins && confidence > static_cast<double>(i) / n_bins) ++i;
  return i;
}

CalibrationBinning BinCalibration(std::span<const ItemRecord> records,
                                  int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
  std::vector<size_t> count(n_bins, 0), correct(n_bins, 0);
  std::vector<long double> conf_sum(n_bins, 0.0L);
  for (const auto& r : records) {
    if (!r.followed) continue;
    const int b = CalibrationBinIndex(*r.confidence, n_bins) - 1;
    ++count[b];
    conf_sum[b] += *r.confidence;
    if (r.correct) ++correct[b];
  }
  CalibrationBinning binning;
  binning.n_bins = n_bins;
  binning.bins.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = binning.bins[b];
    bin.count = count[b];
    if (count[b] > 0) {
      bin.mean_confidence = static_cast<double>(conf_sum[b] / count[b]);
      bin.accuracy = static_cast<double>(correct[b]) / count[b];
    }
  }
  return binning;
}

double Accuracy(std::span<const ItemRecord> records) {
  RequireNonEmpty(records, "accuracy");
  size_t correct = 0;
  for (const auto& r : records) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / records.size();
}

MetricValue ExpectedCalibrationError(std::span<const ItemRecord> records,
                                     int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
  // Per-bin |B|*|acc - conf| = |#correct - sum(conf)|, accumulated in
  // extended precision and rounded once.
  std::vector<size_t> count(n_bins, 0), correct(n_bins, 0);
  std::vector<long double> conf_sum(n_bins, 0.0L);
  size_t n_scored = 0;
  for (const auto& r : records) {
    if (!r.followed) continue;
    const int b = CalibrationBinIndex(*r.confidence, n_bins) - 1;
    ++count[b];
    ++n_scored;
    conf_sum[b] += *r.confidence;
    if (r.correct) ++correct[b];
  }
  if (n_scored == 0) return {1.0, true};
  long double gap = 0.0L;
  for (int b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    gap += std::fabs(static_cast<long double>(correct[b]) - conf_sum[b]);
  }
  return {static_cast<double>(gap / n_scored), false};
}

MetricValue Auroc(std::span<const ItemRecord> records) {
  auto scored = FollowedScores(records);
  uint64_t n_pos = 0, n_neg = 0;
  for (const auto& s : scored) (s.correct ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) return {0.5, true};

  std::sort(scored.begin(), scored.end(),
            [](const Scored& a, const Scored& b) {
              return a.confidence < b.confidence;
            });
  // Twice the Mann-Whitney U: 2 per win, 1 per tie. Exact in integers.
  uint64_t doubled_u = 0;
  uint64_t neg_below = 0;
  for (size_t i = 0; i < scored.size();) {
    size_t j = i;
    uint64_t pos = 0, neg = 0;
    while (j < scored.size() && scored[j].confidence == scored[i].confidence) {
      (scored[j].correct ? pos : neg) += 1;
      ++j;
    }
    doubled_u += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    i = j;
  }
  const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  return {static_cast<double>(doubled_u) / (2.0 * pairs), false};
}

double AveragePrecision(std::vector<RankedLabel> ranked) {
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedLabel& a, const RankedLabel& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  size_t positives = 0;
  double sum = 0.0;
  for (size_t rank = 1; rank <= ranked.size(); ++rank) {
    if (!ranked[rank - 1].positive) continue;
    ++positives;
    sum += static_cast<double>(positives) / static_cast<double>(rank);
  }
  if (positives == 0) {
    throw std::invalid_argument("average precision needs a positive label");
  }
  return sum / static_cast<double>(positives);
}

MetricValue PrAuc(std::span<const ItemRecord> records, PrClass pr_class) {
  std::vector<RankedLabel> ranked;
  ranked.reserve(records.size());
  size_t members = 0;
  for (const auto& r : records) {
    if (!r.followed) continue;
    RankedLabel label;
    label.id = r.item_id;
    if (pr_class == PrClass::kPositive) {
      label.positive = r.correct;
      label.score = *r.confidence;
    } else {
      label.positive = !r.correct;
      label.score = 1.0 - *r.confidence;
    }
    members += label.positive ? 1 : 0;
    ranked.push_back(label);
  }
  if (members == 0) {
    // Prevalence of an empty class.
    return {0.0, true};
  }
  return {AveragePrecision(std::move(ranked)), false};
}

double InstructionFollowingRate(std::span<const ItemRecord> records) {
  RequireNonEmpty(records, "instruction-following rate");
  size_t followed = 0;
  for (const auto& r : records) followed += r.followed ? 1 : 0;
  return static_cast<double>(followed) / records.size();
}

MetricVector ComputeMetrics(std::span<const ItemRecord> records, int n_bins) {
  RequireNonEmpty(records, "metrics");
  for (const auto& r : records) r.Validate();
  MetricVector m;
  m.acc = {Accuracy(records), false};
  m.ece = ExpectedCalibrationError(records, n_bins);
  m.auroc = Auroc(records);
  m.pr_p = PrAuc(records, PrClass::kPositive);
  m.pr_n = PrAuc(records, PrClass::kNegative);
  m.ifr = InstructionFollowingRate(records);
  m.n_total = records.size();
  m.n_scored = static_cast<size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const ItemRecord& r) { return r.followed; }));
  return m;
}

MetricWeights DefaultWeights() {
  MetricWeights w;
  for (Metric m : kObjectiveMetrics) w[m] = 1.0 / 5.0;
  return w;
}

CompositeScore NormalizeAndCompose(const MetricVector& metrics,
                                   const MetricWeights& weights) {
  double total = 0.0;
  for (const auto& [metric, w] : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative metric weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("metric weights must sum to 1");
  }
  CompositeScore score;
  score.weights = weights;
  for (Metric m : kObjectiveMetrics) {
    const double v = metrics.Get(m).value;
    const bool lower_is_better = m == Metric::kEce || m == Metric::kPrNegative;
    score.normalized[m] = lower_is_better ? 1.0 - v : v;
  }
  for (Metric m : kObjectiveMetrics) {
    auto it = weights.find(m);
    if (it == weights.end()) continue;
    score.value += it->second * score.normalized[m];
  }
  return score;
}

}  // namespace promptxfer

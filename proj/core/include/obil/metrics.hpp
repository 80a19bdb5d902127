// Copyright 2026 The OBIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OBIL_METRICS_HPP_
#define OBIL_METRICS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace obil {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);

// value is 0 when defined is false.
struct MetricValue {
  double value = 0.0;
  bool defined = true;
};

MetricValue f1(const ConfusionCounts& c);
MetricValue g_mean(const ConfusionCounts& c);
// Step curve, ties grouped, non-interpolated.
MetricValue auprc(std::span<const double> scores, std::span<const int> labels);

inline constexpr std::size_t kDefaultEceBins = 15;

struct ReliabilityBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  double confidence = 0.0;  // mean confidence, 0 for empty bins
  double accuracy = 0.0;
};

// Equal-width bins on [0,1]; the first bin is [0, 1/B], the rest (lo, hi].
std::vector<ReliabilityBin> reliability_bins(std::span<const double> confidences,
                                             std::span<const int> correct,
                                             std::size_t bins = kDefaultEceBins);
MetricValue ece(std::span<const double> confidences, std::span<const int> correct,
                std::size_t bins = kDefaultEceBins);

// ECE of binary posteriors: confidence max(p, 1-p), correct when the
// thresholded prediction [p > 0.5] matches the label.
MetricValue binary_ece(std::span<const double> posteriors, std::span<const int> labels,
                       std::size_t bins = kDefaultEceBins);

// Columns bin_low, bin_high, count, conf, acc.
void write_reliability_bins(std::ostream& out, std::span<const ReliabilityBin> bins);

enum class FitStatus { kOk, kAtBoundary, kFailed };

struct TemperatureFit {
  double temperature = 1.0;
  FitStatus status = FitStatus::kOk;
  double nll = 0.0;
};

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

// Mean of -log sigma(+-(z/T + offset)); offsets may be empty (all zero).
double mean_temperature_nll(std::span<const double> logits, std::span<const int> labels,
                            double temperature, std::span<const double> offsets = {});

// Golden-section search of the mean sigmoid cross-entropy over
// [0.05, 20] to absolute tolerance 1e-4. Offsets shift each scaled logit,
// e.g. to move a posterior onto a different class prior.
TemperatureFit fit_temperature(std::span<const double> logits, std::span<const int> labels,
                               std::span<const double> offsets = {});

}  // namespace obil

#endif  // OBIL_METRICS_HPP_

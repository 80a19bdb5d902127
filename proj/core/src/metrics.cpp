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

#include "obil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "obil/error.hpp"
#include "obil/losses.hpp"
#include "text_io.hpp"

namespace obil {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kShapeError, "metric inputs differ in length");
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  require_same_size(predictions.size(), labels.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricValue f1(const ConfusionCounts& c) {
  const std::size_t den = 2 * c.tp + c.fp + c.fn;
  if (den == 0) return {0.0, false};
  return {2.0 * static_cast<double>(c.tp) / static_cast<double>(den), true};
}

MetricValue g_mean(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) return {0.0, false};
  const double sens = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double spec = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return {std::sqrt(sens * spec), true};
}

MetricValue auprc(std::span<const double> scores, std::span<const int> labels) {
  require_same_size(scores.size(), labels.size());
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) return {0.0, false};
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    const std::size_t tp_before = tp;
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] == 1 ? 1 : 0;
      ++seen;
      ++i;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    area += precision * static_cast<double>(tp - tp_before) / static_cast<double>(positives);
  }
  return {area, true};
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> confidences,
                                             std::span<const int> correct, std::size_t bins) {
  require_same_size(confidences.size(), correct.size());
  if (bins == 0) throw Error(ErrorCode::kInvalidConfig, "bin count must be positive");
  std::vector<ReliabilityBin> out(bins);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].low = static_cast<double>(b) * width;
    out[b].high = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) * width;
  }
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> acc_sum(bins, 0.0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = std::clamp(confidences[i], 0.0, 1.0);
    // Right-closed bins: ceil(c*B) - 1, with 0 mapped into the first bin.
    auto b = static_cast<std::size_t>(std::max(0.0, std::ceil(c * static_cast<double>(bins)) - 1.0));
    b = std::min(b, bins - 1);
    // Guard against rounding of c*B at the edges.
    if (b + 1 < bins && c > out[b].high) ++b;
    if (b > 0 && c <= out[b].low) --b;
    ++out[b].count;
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (out[b].count == 0) continue;
    out[b].confidence = conf_sum[b] / static_cast<double>(out[b].count);
    out[b].accuracy = acc_sum[b] / static_cast<double>(out[b].count);
  }
  return out;
}

MetricValue ece(std::span<const double> confidences, std::span<const int> correct,
                std::size_t bins) {
  if (confidences.empty()) return {0.0, false};
  const auto rb = reliability_bins(confidences, correct, bins);
  const double n = static_cast<double>(confidences.size());
  double total = 0.0;
  for (const auto& b : rb) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / n * std::abs(b.accuracy - b.confidence);
  }
  return {total, true};
}

MetricValue binary_ece(std::span<const double> posteriors, std::span<const int> labels,
                       std::size_t bins) {
  require_same_size(posteriors.size(), labels.size());
  std::vector<double> conf(posteriors.size());
  std::vector<int> correct(posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const double p = posteriors[i];
    conf[i] = std::max(p, 1.0 - p);
    correct[i] = (p > 0.5 ? 1 : 0) == labels[i] ? 1 : 0;
  }
  return ece(conf, correct, bins);
}

void write_reliability_bins(std::ostream& out, std::span<const ReliabilityBin> bins) {
  using detail::format_double;
  out << "bin_low,bin_high,count,conf,acc\n";
  for (const auto& b : bins) {
    out << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << ','
        << format_double(b.confidence) << ',' << format_double(b.accuracy) << '\n';
  }
}

double mean_temperature_nll(std::span<const double> logits, std::span<const int> labels,
                            double temperature, std::span<const double> offsets) {
  require_same_size(logits.size(), labels.size());
  if (!offsets.empty()) require_same_size(logits.size(), offsets.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double off = offsets.empty() ? 0.0 : offsets[i];
    acc += cross_entropy_sigmoid(logits[i] + off * temperature, labels[i], temperature).value;
  }
  return logits.empty() ? 0.0 : acc / static_cast<double>(logits.size());
}

TemperatureFit fit_temperature(std::span<const double> logits, std::span<const int> labels,
                               std::span<const double> offsets) {
  require_same_size(logits.size(), labels.size());
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  TemperatureFit fit;
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    fit.status = FitStatus::kFailed;
    return fit;
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kMinTemperature;
  double b = kMaxTemperature;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = mean_temperature_nll(logits, labels, c, offsets);
  double fd = mean_temperature_nll(logits, labels, d, offsets);
  while (b - a > 1e-4) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = mean_temperature_nll(logits, labels, c, offsets);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = mean_temperature_nll(logits, labels, d, offsets);
    }
  }
  fit.temperature = 0.5 * (a + b);
  fit.nll = mean_temperature_nll(logits, labels, fit.temperature, offsets);
  if (!std::isfinite(fit.nll)) {
    fit.status = FitStatus::kFailed;
    return fit;
  }
  // A minimizer pinned against either end of the bracket means the
  // objective had no interior optimum.
  constexpr double kEdge = 1e-3;
  if (fit.temperature - kMinTemperature < kEdge || kMaxTemperature - fit.temperature < kEdge) {
    fit.status = FitStatus::kAtBoundary;
  }
  return fit;
}

}  // namespace obil

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

#include "obil/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "obil/error.hpp"

namespace obil {

std::string_view baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::kNone: return "none";
    case BaselineKind::kThresholdMoving: return "threshold_moving";
    case BaselineKind::kLogitAdjustment: return "logit_adjustment";
    case BaselineKind::kBbse: return "bbse";
  }
  return "none";
}

BaselineKind parse_baseline(std::string_view name) {
  for (auto k : {BaselineKind::kNone, BaselineKind::kThresholdMoving,
                 BaselineKind::kLogitAdjustment, BaselineKind::kBbse}) {
    if (baseline_name(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown baseline '" + std::string(name) + "'");
}

ThresholdFit threshold_moving_fit(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeError, "scores and labels differ in length");
  }
  ThresholdFit fit;
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0 || pos == labels.size()) {
    fit.ok = false;
    return fit;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  if (scores[order.front()] == scores[order.back()]) {
    fit.ok = false;
    return fit;
  }
  // Sweep from the smallest threshold upward; tp/fp count scores above it.
  std::size_t tp = pos;
  std::size_t fp = labels.size() - pos;
  auto f1_of = [&](std::size_t tp_, std::size_t fp_) {
    const double den = static_cast<double>(2 * tp_ + fp_ + (pos - tp_));
    return 2.0 * static_cast<double>(tp_) / den;
  };
  fit.threshold = -std::numeric_limits<double>::infinity();
  fit.f1 = f1_of(tp, fp);
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) --tp;
      else --fp;
      ++i;
    }
    const double thr = i < order.size() ? 0.5 * (s + scores[order[i]])
                                        : std::numeric_limits<double>::infinity();
    const double f = f1_of(tp, fp);
    if (f > fit.f1) {
      fit.f1 = f;
      fit.threshold = thr;
    }
  }
  return fit;
}

double log_odds(double p) { return std::log(p) - std::log1p(-p); }

double logit_adjust(double z, double train_p1, double test_p1) {
  auto check = [](double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidPrior, "prior must lie in (0,1)");
  };
  check(train_p1);
  check(test_p1);
  return z + log_odds(test_p1) - log_odds(train_p1);
}

Confusion2 estimate_confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kShapeError, "predictions and labels differ in length");
  }
  Confusion2 c{};
  std::array<double, 2> n{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i] == 1 ? 1 : 0;
    const int p = predictions[i] == 1 ? 1 : 0;
    c[p][y] += 1.0;
    n[y] += 1.0;
  }
  for (int y = 0; y < 2; ++y) {
    if (n[y] == 0.0) throw Error(ErrorCode::kBbseUnidentifiable, "source batch lacks a class");
    c[0][y] /= n[y];
    c[1][y] /= n[y];
  }
  return c;
}

PriorPair bbse_estimate_prior(const Confusion2& c, std::array<double, 2> mu) {
  const double det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
  if (!(std::abs(det) > 1e-6)) {
    throw Error(ErrorCode::kBbseUnidentifiable, "confusion matrix is near singular");
  }
  double p0 = (c[1][1] * mu[0] - c[0][1] * mu[1]) / det;
  double p1 = (c[0][0] * mu[1] - c[1][0] * mu[0]) / det;
  p0 = std::max(p0, 0.0);
  p1 = std::max(p1, 0.0);
  const double total = p0 + p1;
  if (!(total > 0.0)) throw Error(ErrorCode::kBbseUnidentifiable, "estimated priors vanish");
  return PriorPair(p1 / total);
}

}  // namespace obil

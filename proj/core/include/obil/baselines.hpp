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

#ifndef OBIL_BASELINES_HPP_
#define OBIL_BASELINES_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "obil/bayes.hpp"

namespace obil {

enum class BaselineKind { kNone, kThresholdMoving, kLogitAdjustment, kBbse };

std::string_view baseline_name(BaselineKind k);
BaselineKind parse_baseline(std::string_view name);

struct ThresholdFit {
  double threshold = 0.0;  // predict 1 iff score > threshold
  double f1 = 0.0;
  bool ok = true;
};

// Candidates are -inf, midpoints between adjacent distinct scores, and +inf.
// Highest F1 wins; ties go to the smaller threshold.
ThresholdFit threshold_moving_fit(std::span<const double> scores, std::span<const int> labels);

double log_odds(double p);

// z + logit(test_p1) - logit(train_p1).
double logit_adjust(double z, double train_p1, double test_p1);

// Column-stochastic C(i, j) = P(yhat = i | y = j).
using Confusion2 = std::array<std::array<double, 2>, 2>;

// Estimates P(yhat|y) from source predictions and labels.
Confusion2 estimate_confusion(std::span<const int> predictions, std::span<const int> labels);

inline constexpr std::size_t kDefaultBbseBatch = 500;

// Solves C p = mu, clips negatives, renormalizes and eta-clips. Returns
// {P0, P1}.
PriorPair bbse_estimate_prior(const Confusion2& confusion, std::array<double, 2> target_pred_dist);

}  // namespace obil

#endif  // OBIL_BASELINES_HPP_

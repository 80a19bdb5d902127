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

#ifndef OBIL_RESAMPLING_HPP_
#define OBIL_RESAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "obil/dataset.hpp"

namespace obil {

enum class ResampleMethod { kUndersample, kOversample, kSmote };

std::string_view resample_method_name(ResampleMethod m);
ResampleMethod parse_resample_method(std::string_view name);

inline constexpr std::size_t kDefaultSmoteNeighbors = 5;

// Rebalanced version of a dataset with imbalance ratio target_qp = N0/N1.
//
// Lowering the ratio: kUndersample keeps round(target * N1) majority rows;
// kOversample / kSmote grow the minority to round(N0 / target) by drawing
// with replacement or by SMOTE interpolation.
// Raising the ratio: kUndersample keeps round(N0 / target) minority rows;
// kOversample / kSmote grow the majority to round(target * N1) with
// replacement.
struct AssociatedProblemSpec {
  double target_qp = 1.0;
  ResampleMethod method = ResampleMethod::kUndersample;
  std::uint64_t seed = 0;
  std::size_t smote_neighbors = kDefaultSmoteNeighbors;
};

// Retained rows keep their original relative order and come first; added
// rows are appended. A target equal to the current ratio returns the input
// unchanged. Throws kInfeasibleTarget when a class would fall below one row,
// kTooFewMinority for SMOTE on fewer than two minority rows.
LabeledDataset make_associated(const LabeledDataset& dataset,
                               const AssociatedProblemSpec& spec);

// Synthetic rows x_i + lambda (x_j - x_i), with x_j drawn among the
// k Euclidean nearest neighbours of a uniformly chosen x_i and
// lambda ~ U(0, 1) (open). Requires more rows than k_neighbors.
FeatureMatrix smote_generate(const FeatureMatrix& minority, std::size_t n_synthetic,
                             std::size_t k_neighbors, std::uint64_t seed);

// Round half up.
std::size_t round_count(double x);

}  // namespace obil

#endif  // OBIL_RESAMPLING_HPP_

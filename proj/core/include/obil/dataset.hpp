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

#ifndef OBIL_DATASET_HPP_
#define OBIL_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace obil {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Feature rows with 0/1 labels. Class 1 is the minority by convention.
struct LabeledDataset {
  FeatureMatrix features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t count(int label) const;
  bool has_both_classes() const { return count(0) > 0 && count(1) > 0; }
  // N0 / N1; +inf when there are no positives.
  double imbalance_ratio() const;

  Vector row(std::size_t i) const { return features.row(static_cast<Eigen::Index>(i)).transpose(); }

  // Rows in the given order (indices may repeat).
  LabeledDataset subset(std::span<const std::size_t> indices) const;
  // Row indices carrying the given label, ascending.
  std::vector<std::size_t> indices_of(int label) const;

  // Throws kShapeError when the label count disagrees with the row count or
  // a label is not 0/1.
  void validate() const;
};

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

// Stratified split: each class is shuffled and cut by the fractions, which
// must sum to at most 1; the remainder forms the final part.
std::vector<LabeledDataset> stratified_split(const LabeledDataset& data,
                                             std::span<const double> fractions,
                                             std::uint64_t seed);

}  // namespace obil

#endif  // OBIL_DATASET_HPP_

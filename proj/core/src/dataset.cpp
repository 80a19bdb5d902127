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

#include "obil/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "obil/error.hpp"

namespace obil {

std::size_t LabeledDataset::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

double LabeledDataset::imbalance_ratio() const {
  const auto n1 = count(1);
  if (n1 == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(count(0)) / static_cast<double>(n1);
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::indices_of(int label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) idx.push_back(i);
  }
  return idx;
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorCode::kShapeError,
                "rows=" + std::to_string(features.rows()) +
                    " labels=" + std::to_string(labels.size()));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kShapeError, "labels must be 0/1");
  }
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.features.cols() != b.features.cols()) {
    throw Error(ErrorCode::kShapeError, "feature dimensions differ");
  }
  LabeledDataset out;
  out.features.resize(a.features.rows() + b.features.rows(), a.features.cols());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::vector<LabeledDataset> stratified_split(const LabeledDataset& data,
                                             std::span<const double> fractions,
                                             std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "negative split fraction");
    total += f;
  }
  if (total > 1.0 + 1e-12) {
    throw Error(ErrorCode::kInvalidConfig, "split fractions exceed 1");
  }
  std::mt19937_64 rng(seed);
  const std::size_t parts = fractions.size() + 1;
  std::vector<std::vector<std::size_t>> chosen(parts);
  for (int label : {0, 1}) {
    auto idx = data.indices_of(label);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t start = 0;
    for (std::size_t p = 0; p < fractions.size(); ++p) {
      const auto take = std::min(
          idx.size() - start,
          static_cast<std::size_t>(std::llround(fractions[p] * static_cast<double>(idx.size()))));
      chosen[p].insert(chosen[p].end(), idx.begin() + static_cast<std::ptrdiff_t>(start),
                       idx.begin() + static_cast<std::ptrdiff_t>(start + take));
      start += take;
    }
    chosen.back().insert(chosen.back().end(),
                         idx.begin() + static_cast<std::ptrdiff_t>(start), idx.end());
  }
  std::vector<LabeledDataset> out;
  out.reserve(parts);
  for (auto& c : chosen) {
    std::sort(c.begin(), c.end());
    out.push_back(data.subset(c));
  }
  return out;
}

}  // namespace obil

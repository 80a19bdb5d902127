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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "obil/dataset.hpp"
#include "obil/error.hpp"

namespace obil {
namespace {

LabeledDataset make(std::size_t n0, std::size_t n1) {
  LabeledDataset d;
  d.features.resize(static_cast<Eigen::Index>(n0 + n1), 2);
  for (std::size_t i = 0; i < n0 + n1; ++i) {
    d.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    d.features(static_cast<Eigen::Index>(i), 1) = -static_cast<double>(i);
    d.labels.push_back(i < n0 ? 0 : 1);
  }
  return d;
}

TEST(LabeledDataset, CountsAndRatio) {
  const auto d = make(100, 10);
  EXPECT_EQ(d.size(), 110u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.count(0), 100u);
  EXPECT_EQ(d.count(1), 10u);
  EXPECT_DOUBLE_EQ(d.imbalance_ratio(), 10.0);
  EXPECT_TRUE(d.has_both_classes());
  EXPECT_EQ(make(5, 0).imbalance_ratio(), std::numeric_limits<double>::infinity());
}

TEST(LabeledDataset, ValidateCatchesShapeErrors) {
  auto d = make(3, 2);
  d.labels.push_back(1);
  EXPECT_THROW(d.validate(), Error);
  auto e = make(3, 2);
  e.labels[0] = 2;
  EXPECT_THROW(e.validate(), Error);
}

TEST(LabeledDataset, SubsetAndConcat) {
  const auto d = make(4, 2);
  const std::size_t idx[] = {5, 0, 0};
  const auto s = d.subset(idx);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.labels[0], 1);
  EXPECT_DOUBLE_EQ(s.features(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.features(0, 1), -5.0);
  const auto c = concat(d, s);
  EXPECT_EQ(c.size(), 9u);
  EXPECT_DOUBLE_EQ(c.features(8, 0), 0.0);
}

TEST(StratifiedSplit, PreservesClassProportionsAndPartitions) {
  const auto d = make(700, 100);
  const double fr[] = {0.7, 0.15};
  const auto parts = stratified_split(d, fr, 3);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].count(0), 490u);
  EXPECT_EQ(parts[0].count(1), 70u);
  EXPECT_EQ(parts[1].count(0), 105u);
  EXPECT_EQ(parts[1].count(1), 15u);
  EXPECT_EQ(parts[2].size(), 120u);
  // Every row lands in exactly one part.
  std::vector<int> seen(d.size(), 0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) ++seen[static_cast<std::size_t>(p.features(static_cast<Eigen::Index>(i), 0))];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const auto d = make(50, 20);
  const double fr[] = {0.5};
  const auto a = stratified_split(d, fr, 9);
  const auto b = stratified_split(d, fr, 9);
  const auto c = stratified_split(d, fr, 10);
  EXPECT_EQ(a[0].features, b[0].features);
  EXPECT_NE(a[0].features, c[0].features);
}

TEST(StratifiedSplit, RejectsBadFractions) {
  const auto d = make(10, 10);
  const double over[] = {0.7, 0.4};
  EXPECT_THROW(stratified_split(d, over, 1), Error);
  const double neg[] = {-0.1};
  EXPECT_THROW(stratified_split(d, neg, 1), Error);
}

}  // namespace
}  // namespace obil

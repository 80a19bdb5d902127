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

#include "obil/resampling.hpp"

#include <algorithm>
#include <limits>
#include <utility>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "obil/error.hpp"

namespace obil {
namespace {

using Rng = std::mt19937_64;

// k uniform draws without replacement, returned ascending.
std::vector<std::size_t> choose_sorted(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<std::size_t> draw_with_replacement(const std::vector<std::size_t>& pool,
                                               std::size_t k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::size_t> out(k);
  for (auto& v : out) v = pool[pick(rng)];
  return out;
}

// Target size for a class, after the infeasibility check.
std::size_t target_count(double raw) {
  if (!(raw >= 1.0)) {
    throw Error(ErrorCode::kInfeasibleTarget,
                "target class size " + std::to_string(raw) + " is below one sample");
  }
  return std::max<std::size_t>(1, round_count(raw));
}

// Keeps `keep` rows of class `label` (uniformly, without replacement) and
// all rows of the other class, preserving order.
LabeledDataset shrink_class(const LabeledDataset& d, int label, std::size_t keep, Rng& rng) {
  const auto pool = d.indices_of(label);
  auto kept = choose_sorted(pool, keep, rng);
  std::vector<std::size_t> rows;
  rows.reserve(d.size() - pool.size() + keep);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] != label) {
      rows.push_back(i);
    } else if (k < kept.size() && kept[k] == i) {
      rows.push_back(i);
      ++k;
    }
  }
  return d.subset(rows);
}

LabeledDataset grow_by_replacement(const LabeledDataset& d, int label, std::size_t total,
                                   Rng& rng) {
  const auto pool = d.indices_of(label);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto extra = draw_with_replacement(pool, total - pool.size(), rng);
  rows.insert(rows.end(), extra.begin(), extra.end());
  return d.subset(rows);
}

LabeledDataset grow_by_smote(const LabeledDataset& d, std::size_t total,
                             std::size_t k_neighbors, std::uint64_t seed) {
  const auto pool = d.indices_of(1);
  if (pool.size() < 2) {
    throw Error(ErrorCode::kTooFewMinority, "SMOTE needs at least two minority rows");
  }
  const auto minority = d.subset(pool).features;
  const std::size_t k = std::min(k_neighbors, pool.size() - 1);
  LabeledDataset synth;
  synth.features = smote_generate(minority, total - pool.size(), k, seed);
  synth.labels.assign(static_cast<std::size_t>(synth.features.rows()), 1);
  return concat(d, synth);
}

}  // namespace

std::size_t round_count(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::string_view resample_method_name(ResampleMethod m) {
  switch (m) {
    case ResampleMethod::kUndersample: return "undersample";
    case ResampleMethod::kOversample: return "oversample";
    case ResampleMethod::kSmote: return "smote";
  }
  return "?";
}

ResampleMethod parse_resample_method(std::string_view name) {
  if (name == "undersample") return ResampleMethod::kUndersample;
  if (name == "oversample") return ResampleMethod::kOversample;
  if (name == "smote") return ResampleMethod::kSmote;
  throw Error(ErrorCode::kInvalidConfig, "unknown resampling method '" + std::string(name) + "'");
}

LabeledDataset make_associated(const LabeledDataset& dataset, const AssociatedProblemSpec& spec) {
  dataset.validate();
  if (!(spec.target_qp > 0.0) || !std::isfinite(spec.target_qp)) {
    throw Error(ErrorCode::kInvalidConfig, "target_qp must be positive");
  }
  if (!dataset.has_both_classes()) {
    throw Error(ErrorCode::kDegenerateData, "resampling needs both classes");
  }
  const double n0 = static_cast<double>(dataset.count(0));
  const double n1 = static_cast<double>(dataset.count(1));
  const double current = n0 / n1;
  if (std::abs(spec.target_qp - current) <= 1e-12 * current) return dataset;

  Rng rng(spec.seed);
  if (spec.target_qp < current) {
    if (spec.method == ResampleMethod::kUndersample) {
      return shrink_class(dataset, 0, target_count(spec.target_qp * n1), rng);
    }
    const auto total = target_count(n0 / spec.target_qp);
    if (total <= dataset.count(1)) return dataset;
    if (spec.method == ResampleMethod::kOversample) {
      return grow_by_replacement(dataset, 1, total, rng);
    }
    return grow_by_smote(dataset, total, spec.smote_neighbors, spec.seed);
  }
  if (spec.method == ResampleMethod::kUndersample) {
    return shrink_class(dataset, 1, target_count(n0 / spec.target_qp), rng);
  }
  const auto total = target_count(spec.target_qp * n1);
  if (total <= dataset.count(0)) return dataset;
  return grow_by_replacement(dataset, 0, total, rng);
}

FeatureMatrix smote_generate(const FeatureMatrix& minority, std::size_t n_synthetic,
                             std::size_t k_neighbors, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(minority.rows());
  if (m < 2) throw Error(ErrorCode::kTooFewMinority, "SMOTE needs at least two rows");
  if (k_neighbors == 0 || m <= k_neighbors) {
    throw Error(ErrorCode::kTooFewMinority,
                "minority count must exceed k_neighbors (" + std::to_string(k_neighbors) + ")");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_row(0, m - 1);
  std::uniform_int_distribution<std::size_t> pick_nb(0, k_neighbors - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // With k = m - 1 every other row is a neighbour; skip the distance sort.
  const bool all_neighbors = k_neighbors == m - 1;
  std::vector<std::vector<std::size_t>> neighbors;
  if (!all_neighbors) {
    neighbors.resize(m);
    std::vector<std::pair<double, std::size_t>> dist(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double d2 = i == j ? std::numeric_limits<double>::infinity()
                                 : (minority.row(static_cast<Eigen::Index>(i)) -
                                    minority.row(static_cast<Eigen::Index>(j))).squaredNorm();
        dist[j] = {d2, j};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors),
                        dist.end());
      for (std::size_t n = 0; n < k_neighbors; ++n) neighbors[i].push_back(dist[n].second);
    }
  }

  FeatureMatrix out(static_cast<Eigen::Index>(n_synthetic), minority.cols());
  for (std::size_t s = 0; s < n_synthetic; ++s) {
    const auto i = pick_row(rng);
    std::size_t j = 0;
    if (all_neighbors) {
      j = pick_nb(rng);
      if (j >= i) ++j;
    } else {
      j = neighbors[i][pick_nb(rng)];
    }
    double lambda = 0.0;
    do {
      lambda = u01(rng);
    } while (lambda == 0.0);
    const auto xi = minority.row(static_cast<Eigen::Index>(i));
    const auto xj = minority.row(static_cast<Eigen::Index>(j));
    out.row(static_cast<Eigen::Index>(s)) = xi + lambda * (xj - xi);
  }
  return out;
}

}  // namespace obil

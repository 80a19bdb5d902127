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

#ifndef OBIL_ENSEMBLE_HPP_
#define OBIL_ENSEMBLE_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "obil/bayes.hpp"
#include "obil/dataset.hpp"
#include "obil/mlp.hpp"
#include "obil/resampling.hpp"

namespace obil {

struct EnsembleConfig {
  // Empty target_qps means {1, 2, 5, 10, Q_P of the training data}, keeping
  // the first k of them when k > 0.
  std::vector<double> target_qps;
  std::size_t k = 0;
  double tau = 1.0;
  int mc_samples = 30;
  double calibration_fraction = 0.15;
  ResampleMethod method = ResampleMethod::kUndersample;
  // Fit member temperatures for every loss, not only xent_sigmoid.
  bool fit_temperature = false;

  void validate() const;
};

struct LikelihoodRatioEnsemble {
  std::vector<CalibratedScorer> members;
  EnsembleConfig config;

  std::size_t size() const { return members.size(); }
};

struct TrainedEnsemble {
  LikelihoodRatioEnsemble ensemble;
  // Rows held out before resampling; used for temperature fitting.
  LabeledDataset calibration;
};

// seed ^ (k + 1) * 0x9E3779B97F4A7C15 (mod 2^64).
std::uint64_t member_seed(std::uint64_t master, std::size_t k);

// {1, 2, 5, 10, qp}, sorted, duplicates dropped.
std::vector<double> default_target_qps(double qp);

// Trains one member per target ratio on associated problems built from the
// non-calibration rows. Members train in parallel (bounded by threads, or
// OBIL_THREADS when threads == 0). xent_sigmoid members get a fitted
// temperature from the calibration rows.
TrainedEnsemble train_ensemble(const LabeledDataset& dataset, const EnsembleConfig& cfg,
                               const NetworkConfig& net_cfg, const TrainingConfig& train_cfg,
                               LossId loss, std::uint64_t seed, unsigned threads = 0);

// As train_ensemble, with the calibration rows supplied by the caller.
LikelihoodRatioEnsemble train_members(const LabeledDataset& train_rows,
                                      const LabeledDataset& calibration,
                                      const EnsembleConfig& cfg, const NetworkConfig& net_cfg,
                                      const TrainingConfig& train_cfg, LossId loss,
                                      std::uint64_t seed, unsigned threads = 0);

// Fits the member temperature on calibration rows drawn at prior ratio
// calibration_qp; returns false (leaving the member alone) when the fit fails.
bool fit_member_temperature(CalibratedScorer& member, const LabeledDataset& calibration);

LogLikelihoodRatio member_log_lr(const CalibratedScorer& member, const Vector& x);

// Softmax of -variance / tau; a member with infinite variance gets weight 0.
std::vector<double> weights_from_variances(std::span<const double> variances, double tau);

// MC-dropout variance per member, then weights_from_variances.
std::vector<double> fusion_weights(const LikelihoodRatioEnsemble& ensemble, const Vector& x,
                                   Rng& rng);

// sum_k w_k log q_k.
LogLikelihoodRatio fuse_log_lrs(std::span<const double> log_lrs, std::span<const double> weights);

LogLikelihoodRatio fused_log_lr(const LikelihoodRatioEnsemble& ensemble, const Vector& x,
                                Rng& rng);

// Magic "OBIL-ENS-v1", the configuration, then one scorer record per member.
void write_ensemble(std::ostream& out, const LikelihoodRatioEnsemble& ensemble);
LikelihoodRatioEnsemble read_ensemble(std::istream& in);

// Worker count from OBIL_THREADS, defaulting to the hardware concurrency.
unsigned worker_threads();

}  // namespace obil

#endif  // OBIL_ENSEMBLE_HPP_

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

#ifndef OBIL_MLP_HPP_
#define OBIL_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "obil/dataset.hpp"
#include "obil/losses.hpp"

namespace obil {

using Rng = std::mt19937_64;

enum class Activation { kRelu, kTanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct NetworkConfig {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims = {128, 64, 32};
  Activation activation = Activation::kRelu;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;

  // Throws kInvalidConfig on an empty hidden list, zero widths or a dropout
  // rate outside [0, 1).
  void validate() const;
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int batch_size = 64;
  int early_stop_patience = 10;
  double validation_fraction = 0.15;
  // Negative-class weight for squared_costweighted.
  double cost_weight = 1.0;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Dense network whose output tanh(g / temperature) estimates 2 P(y=1|x) - 1
// on the problem it was trained on (imbalance ratio training_qp).
struct CalibratedScorer {
  NetworkConfig config;
  std::vector<DenseLayer> layers;  // hidden layers then the 1-unit output layer
  double training_qp = 1.0;
  LossId loss = LossId::kSquared;
  double temperature = 1.0;

  std::size_t parameter_count() const;
};

// One inverted-dropout mask per hidden layer: entries are 0 for dropped
// units and 1 / (1 - rate) for kept units.
using DropoutMasks = std::vector<Eigen::VectorXd>;

// Glorot-uniform weights, zero biases, drawn from config.seed.
CalibratedScorer initialize_scorer(const NetworkConfig& config);

// Draws one mask per hidden layer, unit by unit in layer order: a unit is
// dropped when a U[0,1) draw falls below the dropout rate.
DropoutMasks sample_dropout_masks(const CalibratedScorer& scorer, Rng& rng);

// Output-layer pre-activation g(x), optionally with dropout masks applied
// after every hidden activation.
double preactivation(const CalibratedScorer& scorer, const Vector& x,
                     const DropoutMasks* masks = nullptr);

// tanh(g(x) / temperature). Throws kShapeError on a dimension mismatch.
double forward(const CalibratedScorer& scorer, const Vector& x,
               bool dropout_active, Rng& rng);
double forward(const CalibratedScorer& scorer, const Vector& x);
double forward_with_masks(const CalibratedScorer& scorer, const Vector& x,
                          const DropoutMasks& masks);

// Trains a scorer with mini-batch Adam and early stopping on a stratified
// validation split. Deterministic in net_cfg.seed. Throws kDegenerateData on
// a single-class dataset.
CalibratedScorer train(const LabeledDataset& dataset, const NetworkConfig& net_cfg,
                       const TrainingConfig& train_cfg, LossId loss);

// Mean training loss of the scorer on a dataset (dropout off).
double mean_loss(const CalibratedScorer& scorer, const LabeledDataset& data,
                 double cost_weight = 1.0);

// Gradient of mean_loss with respect to every parameter, flattened layer by
// layer (weights row-major, then bias).
std::vector<double> loss_gradient(const CalibratedScorer& scorer,
                                  const LabeledDataset& data,
                                  double cost_weight = 1.0);

// Max over parameters of |analytic - fd| / max(|analytic|, |fd|, floor), where
// fd is a Richardson-extrapolated central difference (steps 1e-6 and 5e-7) and
// floor = max(1e-8, 1e-3 * max |analytic|).
double gradient_check(const CalibratedScorer& scorer, const LabeledDataset& sample,
                      LossId loss, double cost_weight = 1.0);

// Variance (1/m normalization) of log q_hat over m passes with dropout
// active. Returns 0 when the scorer has no dropout.
double mc_dropout_log_lr_variance(const CalibratedScorer& scorer, const Vector& x,
                                  int m, Rng& rng);

// Versioned text container, magic "OBIL-SCORER-v1". Doubles are written in
// shortest round-trip form, so a reload reproduces every weight bit-exactly.
void write_scorer(std::ostream& out, const CalibratedScorer& scorer);
CalibratedScorer read_scorer(std::istream& in);

}  // namespace obil

#endif  // OBIL_MLP_HPP_

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

#ifndef OBIL_LOSSES_HPP_
#define OBIL_LOSSES_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace obil {

// Registered training losses. Identifiers are the strings used in
// configuration files.
enum class LossId {
  kSquared,              // "squared"
  kSquaredCostWeighted,  // "squared_costweighted"
  kLogisticArctanh,      // "logistic_arctanh"
  kXentSigmoid,          // "xent_sigmoid"
};

std::string_view loss_name(LossId id);
// Throws kUnknownLoss for an unregistered identifier.
LossId parse_loss(std::string_view name);
std::optional<LossId> try_parse_loss(std::string_view name);

struct LossValue {
  double value = 0.0;
  double derivative = 0.0;  // d value / d (o or z)
};

// Losses on a bounded output o in (-1, 1) with target t in {-1, +1}.

// 1/2 (t - o)^2; derivative -(t - o); g(o) = 1.
LossValue squared_error(double o, double t);

// (t - o)^2 for t = +1, qc_tilde (t - o)^2 for t = -1.
// Throws kInvalidWeight when qc_tilde <= 0.
LossValue cost_weighted_squared_error(double o, double t, double qc_tilde);

// log(1 + exp(-t * 2 arctanh(o))) = -log((1 + t o) / 2), evaluated on the
// clamped output. Derivative -(t - o) / (1 - o^2), i.e. g(o) = 1/(1 - o^2).
LossValue logistic_arctanh(double o, double t);

// arctanh via 1/2 log((1+o)/(1-o)) on the clamped value.
double clamped_arctanh(double o);

// Cross-entropy of sigma(z / temperature) against y in {0,1}; derivative
// with respect to z.
LossValue cross_entropy_sigmoid(double z, int y, double temperature);

// Per-loss metadata.
struct LossSpec {
  LossId id;
  bool bregman_exact;
  // g(o) of the Bregman form, present only when bregman_exact.
  double (*g)(double o);
};

const LossSpec& loss_spec(LossId id);
std::span<const LossSpec> registered_losses();

// Loss of a network with pre-activation g and tanh output. Every loss is
// expressed through g so backpropagation sees a single scalar derivative.
// y is the 0/1 label; cost_weight applies to kSquaredCostWeighted only.
LossValue loss_on_preactivation(LossId id, double g, int y, double cost_weight);

}  // namespace obil

#endif  // OBIL_LOSSES_HPP_

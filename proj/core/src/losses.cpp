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

#include "obil/losses.hpp"

#include <array>
#include <cmath>
#include <string>

#include "obil/bayes.hpp"
#include "obil/error.hpp"

namespace obil {
namespace {

double unit_g(double) { return 1.0; }
double arctanh_g(double o) { return 1.0 / (1.0 - o * o); }

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr std::array<LossSpec, 4> kSpecs = {{
    {LossId::kSquared, true, &unit_g},
    {LossId::kSquaredCostWeighted, false, nullptr},
    {LossId::kLogisticArctanh, true, &arctanh_g},
    {LossId::kXentSigmoid, false, nullptr},
}};

}  // namespace

std::string_view loss_name(LossId id) {
  switch (id) {
    case LossId::kSquared: return "squared";
    case LossId::kSquaredCostWeighted: return "squared_costweighted";
    case LossId::kLogisticArctanh: return "logistic_arctanh";
    case LossId::kXentSigmoid: return "xent_sigmoid";
  }
  return "?";
}

std::optional<LossId> try_parse_loss(std::string_view name) {
  for (const auto& spec : kSpecs) {
    if (loss_name(spec.id) == name) return spec.id;
  }
  return std::nullopt;
}

LossId parse_loss(std::string_view name) {
  if (auto id = try_parse_loss(name)) return *id;
  throw Error(ErrorCode::kUnknownLoss, std::string(name));
}

LossValue squared_error(double o, double t) {
  const double r = t - o;
  return {0.5 * r * r, -r};
}

LossValue cost_weighted_squared_error(double o, double t, double qc_tilde) {
  if (!(qc_tilde > 0.0)) {
    throw Error(ErrorCode::kInvalidWeight, "qc_tilde must be positive");
  }
  const double w = t > 0.0 ? 1.0 : qc_tilde;
  const double r = t - o;
  return {w * r * r, -2.0 * w * r};
}

double clamped_arctanh(double o) {
  const double c = clamp_output(o);
  return 0.5 * std::log((1.0 + c) / (1.0 - c));
}

LossValue logistic_arctanh(double o, double t) {
  if (!std::isfinite(o) || std::abs(o) >= 1.0) {
    throw Error(ErrorCode::kClampRequired, "output must be clamped inside (-1,1)");
  }
  const double c = clamp_output(o);
  const double value = softplus(-2.0 * t * clamped_arctanh(c));
  return {value, -(t - c) / (1.0 - c * c)};
}

LossValue cross_entropy_sigmoid(double z, int y, double temperature) {
  const double s = z / temperature;
  // -[y log sigma(s) + (1-y) log(1 - sigma(s))] = softplus(s) - y s.
  const double value = softplus(s) - (y == 1 ? s : 0.0);
  const double grad = (sigmoid(s) - (y == 1 ? 1.0 : 0.0)) / temperature;
  return {value, grad};
}

const LossSpec& loss_spec(LossId id) {
  for (const auto& spec : kSpecs) {
    if (spec.id == id) return spec;
  }
  throw Error(ErrorCode::kUnknownLoss, "unregistered loss id");
}

std::span<const LossSpec> registered_losses() { return kSpecs; }

LossValue loss_on_preactivation(LossId id, double g, int y, double cost_weight) {
  const double t = y == 1 ? 1.0 : -1.0;
  switch (id) {
    case LossId::kSquared: {
      const double o = std::tanh(g);
      const auto l = squared_error(o, t);
      return {l.value, l.derivative * (1.0 - o * o)};
    }
    case LossId::kSquaredCostWeighted: {
      const double o = std::tanh(g);
      const auto l = cost_weighted_squared_error(o, t, cost_weight);
      return {l.value, l.derivative * (1.0 - o * o)};
    }
    case LossId::kLogisticArctanh: {
      // On g directly: -log((1 + t tanh g)/2) = softplus(-2 t g), which avoids
      // the clamp for training while agreeing with logistic_arctanh inside it.
      const double value = softplus(-2.0 * t * g);
      const double grad = -(t - std::tanh(g));
      return {value, grad};
    }
    case LossId::kXentSigmoid: {
      const auto l = cross_entropy_sigmoid(2.0 * g, y, 1.0);
      return {l.value, 2.0 * l.derivative};
    }
  }
  throw Error(ErrorCode::kUnknownLoss, "unregistered loss id");
}

}  // namespace obil

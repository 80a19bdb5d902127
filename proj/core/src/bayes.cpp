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

#include "obil/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obil/error.hpp"

namespace obil {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidCostStructure: return "invalid-cost-structure";
    case ErrorCode::kInvalidPrior: return "invalid-prior";
    case ErrorCode::kUnclampedOutput: return "unclamped-output";
    case ErrorCode::kPosteriorSaturation: return "posterior-saturation";
    case ErrorCode::kBoundUndefined: return "bound-undefined";
    case ErrorCode::kInvalidWeight: return "invalid-weight";
    case ErrorCode::kClampRequired: return "clamp-required";
    case ErrorCode::kShapeError: return "shape-error";
    case ErrorCode::kDegenerateData: return "degenerate-data";
    case ErrorCode::kUnknownLoss: return "unknown-loss";
    case ErrorCode::kInfeasibleTarget: return "infeasible-target";
    case ErrorCode::kTooFewMinority: return "too-few-minority";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kResampleInfeasible: return "resample-infeasible";
    case ErrorCode::kBbseUnidentifiable: return "bbse-unidentifiable";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kSchemaError: return "schema-error";
    case ErrorCode::kFormatError: return "format-error";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown-error";
}

void CostStructure::validate() const {
  if (!(c10 > c00) || !(c01 > c11)) {
    throw Error(ErrorCode::kInvalidCostStructure,
                "error costs must exceed correct-decision costs");
  }
}

double CostStructure::cost_ratio() const {
  validate();
  return (c10 - c00) / (c01 - c11);
}

PriorPair::PriorPair(double p1, double floor) {
  if (!std::isfinite(p1) || !(floor > 0.0) || !(floor < 0.5)) {
    throw Error(ErrorCode::kInvalidPrior, "p1=" + std::to_string(p1));
  }
  p1_ = std::clamp(p1, floor, 1.0 - floor);
}

double combined_threshold(const CostStructure& costs, const PriorPair& priors) {
  return costs.cost_ratio() * priors.imbalance_ratio();
}

double clamp_output(double o) {
  return std::clamp(o, -1.0 + kOutputClip, 1.0 - kOutputClip);
}

double posterior_from_output(double o) {
  if (!(std::abs(o) < 1.0)) {
    throw Error(ErrorCode::kUnclampedOutput, "|o| >= 1");
  }
  return (o + 1.0) / 2.0;
}

double lr_from_posterior(double p_hat, double training_qp) {
  if (!(p_hat > 0.0 && p_hat < 1.0)) {
    throw Error(ErrorCode::kPosteriorSaturation, "posterior must lie in (0,1)");
  }
  return training_qp * p_hat / (1.0 - p_hat);
}

double lr_from_output(double o, double training_qp) {
  return lr_from_posterior(posterior_from_output(clamp_output(o)), training_qp);
}

LogLikelihoodRatio log_lr_from_output(double o, double training_qp) {
  const double c = clamp_output(o);
  // log1p keeps precision for small |o|.
  return {std::log(training_qp) + std::log1p(c) - std::log1p(-c)};
}

double relative_lr_error_bound(double p_true, double eps) {
  if (!(eps >= 0.0) || !(eps < std::min(p_true, 1.0 - p_true))) {
    throw Error(ErrorCode::kBoundUndefined,
                "eps must satisfy 0 <= eps < min(p, 1-p)");
  }
  return eps / (p_true * (1.0 - p_true) - eps * (1.0 - 2.0 * p_true));
}

double exact_relative_lr_error(double p_true, double signed_eps) {
  return std::abs(signed_eps) /
         (p_true * std::abs(1.0 - p_true - signed_eps));
}

double cost_sensitive_loss(int pred, int truth, double qc) {
  if (pred == 0 && truth == 1) return qc;
  if (pred == 1 && truth == 0) return 1.0;
  return 0.0;
}

}  // namespace obil

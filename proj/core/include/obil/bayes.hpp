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

#ifndef OBIL_BAYES_HPP_
#define OBIL_BAYES_HPP_

// Closed-form Bayesian decision primitives for binary problems.
//
// Class 1 is the minority (positive) class. A likelihood ratio
// q_L(x) = p(x|y=1) / p(x|y=0) is compared against the combined threshold
// Q = Q_C * Q_P, where Q_C is the cost ratio and Q_P = P0 / P1 the
// imbalance ratio; q_L(x) > Q predicts 1 and ties predict 0.

namespace obil {

// Clamp applied to scorer outputs before any ratio is formed.
inline constexpr double kOutputClip = 1e-6;

// Floor keeping every prior estimate inside [eta, 1 - eta].
inline constexpr double kPriorFloor = 0.005;

// c_ij is the cost of predicting i when the truth is j.
struct CostStructure {
  double c00 = 0.0;
  double c01 = 1.0;
  double c10 = 1.0;
  double c11 = 0.0;

  // Throws kInvalidCostStructure unless c10 > c00 and c01 > c11.
  void validate() const;
  // (c10 - c00) / (c01 - c11).
  double cost_ratio() const;

  static CostStructure zero_one() { return {}; }
};

// Minority prior P1 clipped into [floor, 1 - floor].
class PriorPair {
 public:
  explicit PriorPair(double p1, double floor = kPriorFloor);

  double p1() const { return p1_; }
  double p0() const { return 1.0 - p1_; }
  // P0 / P1.
  double imbalance_ratio() const { return p0() / p1_; }

 private:
  double p1_;
};

// Natural-log likelihood ratio.
struct LogLikelihoodRatio {
  double value = 0.0;
};

double combined_threshold(const CostStructure& costs, const PriorPair& priors);

// Clamps a scorer output into [-1 + kOutputClip, 1 - kOutputClip].
double clamp_output(double o);

// (o + 1) / 2. Throws kUnclampedOutput when |o| >= 1.
double posterior_from_output(double o);

// training_qp * p / (1 - p). Throws kPosteriorSaturation for p outside (0,1).
double lr_from_posterior(double p_hat, double training_qp);

// lr_from_posterior(posterior_from_output(clamp_output(o)), training_qp).
double lr_from_output(double o, double training_qp);
LogLikelihoodRatio log_lr_from_output(double o, double training_qp);

// Upper bound on the relative likelihood-ratio error produced by a posterior
// error eps at true posterior p_true:
//   eps / (p(1-p) - eps(1-2p)).
// Throws kBoundUndefined unless 0 <= eps < min(p, 1-p).
double relative_lr_error_bound(double p_true, double eps);

// Exact relative error |q_hat - q| / q when the posterior estimate is
// p_true + signed_eps.
double exact_relative_lr_error(double p_true, double signed_eps);

// qc for a missed positive, 1 for a false alarm, 0 otherwise.
double cost_sensitive_loss(int pred, int truth, double qc);

// Strict comparison; a tie predicts 0.
inline int bayes_decision(double lr, double threshold) {
  return lr > threshold ? 1 : 0;
}

}  // namespace obil

#endif  // OBIL_BAYES_HPP_

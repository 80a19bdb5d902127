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

#ifndef OBIL_SHIFT_SIM_HPP_
#define OBIL_SHIFT_SIM_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "obil/adapter.hpp"
#include "obil/bayes.hpp"
#include "obil/dataset.hpp"
#include "obil/mlp.hpp"

namespace obil {

// Two isotropic Gaussians with a shared variance.
struct GaussianProblem {
  Vector mu0 = Vector::Constant(1, -1.0);
  Vector mu1 = Vector::Constant(1, 1.0);
  double sigma2 = 1.0;

  std::size_t dim() const { return static_cast<std::size_t>(mu0.size()); }
  void validate() const;
  // (|x - mu0|^2 - |x - mu1|^2) / (2 sigma^2)
  double log_lr(const Vector& x) const;
  Vector sample(int label, Rng& rng) const;
  // P(y=1|x) under prior p1.
  double posterior(const Vector& x, double p1) const;
};

// n rows with labels drawn from Bernoulli(p1).
LabeledDataset sample_dataset(const GaussianProblem& problem, std::size_t n, double p1, Rng& rng);
// Exactly n1 positives and n0 negatives, in shuffled order.
LabeledDataset sample_dataset_counts(const GaussianProblem& problem, std::size_t n0,
                                     std::size_t n1, Rng& rng);

enum class TrajectoryKind { kConstant, kAbrupt, kLinearDrift, kResampleGrid };

std::string_view trajectory_kind_name(TrajectoryKind k);
TrajectoryKind parse_trajectory_kind(std::string_view name);

struct PriorTrajectory {
  TrajectoryKind kind = TrajectoryKind::kConstant;
  double p = 0.5;  // constant
  // abrupt: p_before until t_switch, p_after at t_switch, then linear decay
  // back to p_before over decay_steps.
  double p_before = 0.03;
  double p_after = 0.12;
  std::uint64_t t_switch = 500;
  std::uint64_t decay_steps = 1000;
  // linear_drift: p_start + slope * t, held inside [p_min, p_max].
  double p_start = 0.2;
  double slope = -0.002;
  double p_min = 0.05;
  double p_max = 1.0 - kPriorFloor;
  // resample_grid: equal-length segments, each with Q_P = multiplier * base_qp.
  double base_qp = 4.0;
  std::vector<double> multipliers = {1.0};
  std::uint64_t horizon = 1;

  void validate() const;
  double prior_at(std::uint64_t t) const;
};

struct StreamScenario {
  GaussianProblem problem;
  PriorTrajectory trajectory;
  std::uint64_t horizon = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StreamSample {
  Vector x;
  int y = 0;
  double p1 = 0.5;
};

StreamSample sample_step(const StreamScenario& scenario, std::uint64_t t, Rng& rng);

// 1 iff exp(log_lr) > qc (1 - p1) / p1.
int oracle_decision(double log_lr, double qc, double p1);

// Cost of a decision with false negatives costing 1 and false positives qc;
// this is the loss whose Bayes rule is the oracle threshold above.
double decision_cost(int pred, int truth, double qc);
// Expected decision_cost given P(y=1|x) = posterior.
double expected_decision_cost(int pred, double posterior, double qc);

enum class Policy { kAdaptive, kOracle, kFixed };

std::string_view policy_name(Policy p);
Policy parse_policy(std::string_view name);

struct RegretLedger {
  std::vector<double> alg_loss;          // realized
  std::vector<double> oracle_loss;       // realized
  std::vector<double> alg_expected;      // expected under the true posterior
  std::vector<double> oracle_expected;
  std::vector<double> cum_regret;        // running sum of expected differences
  std::vector<double> cum_regret_realized;
};

struct RegretRun {
  RegretLedger ledger;
  std::vector<StepRecord> trace;  // adaptive policy only
  std::vector<double> true_p1;
};

// Log-LR source; the analytic one is used when empty.
using LogLrSource = std::function<double(const Vector& x)>;

struct RegretOptions {
  Policy policy = Policy::kAdaptive;
  double fixed_p1 = 0.5;  // for kFixed
};

RegretRun run_regret_experiment(const StreamScenario& scenario, const AdapterConfig& adapter,
                                const LogLrSource& source, const RegretOptions& options,
                                Rng& rng);

// Columns t, alg_loss, oracle_loss, cum_regret.
void write_regret_ledger(std::ostream& out, const RegretLedger& ledger);

struct ResampledTestSet {
  LabeledDataset data;
  bool with_replacement = false;
};

// Resamples so that N0/N1 = multiplier * current ratio; rows are kept
// without replacement when possible. target_size, when nonzero, fixes the
// total row count instead of keeping the larger class whole.
ResampledTestSet make_resampled_testset(const LabeledDataset& dataset, double multiplier,
                                        std::uint64_t seed, std::size_t target_size = 0);

}  // namespace obil

#endif  // OBIL_SHIFT_SIM_HPP_

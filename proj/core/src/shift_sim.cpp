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

#include "obil/shift_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "obil/error.hpp"
#include "obil/resampling.hpp"
#include "text_io.hpp"

namespace obil {

void GaussianProblem::validate() const {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::kInvalidConfig, "sigma2 must be positive");
  if (mu0.size() == 0 || mu0.size() != mu1.size()) {
    throw Error(ErrorCode::kShapeError, "class means must share a nonzero dimension");
  }
}

double GaussianProblem::log_lr(const Vector& x) const {
  return ((x - mu0).squaredNorm() - (x - mu1).squaredNorm()) / (2.0 * sigma2);
}

Vector GaussianProblem::sample(int label, Rng& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sd = std::sqrt(sigma2);
  const Vector& mu = label == 1 ? mu1 : mu0;
  Vector x(mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) x[j] = mu[j] + sd * n01(rng);
  return x;
}

double GaussianProblem::posterior(const Vector& x, double p1) const {
  const double z = log_lr(x) + std::log(p1) - std::log1p(-p1);
  return 1.0 / (1.0 + std::exp(-z));
}

LabeledDataset sample_dataset(const GaussianProblem& problem, std::size_t n, double p1, Rng& rng) {
  problem.validate();
  std::bernoulli_distribution coin(p1);
  LabeledDataset d;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(problem.dim()));
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = coin(rng) ? 1 : 0;
    d.labels[i] = y;
    d.features.row(static_cast<Eigen::Index>(i)) = problem.sample(y, rng).transpose();
  }
  return d;
}

LabeledDataset sample_dataset_counts(const GaussianProblem& problem, std::size_t n0,
                                     std::size_t n1, Rng& rng) {
  problem.validate();
  std::vector<int> labels(n0, 0);
  labels.insert(labels.end(), n1, 1);
  std::shuffle(labels.begin(), labels.end(), rng);
  LabeledDataset d;
  d.features.resize(static_cast<Eigen::Index>(n0 + n1), static_cast<Eigen::Index>(problem.dim()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    d.features.row(static_cast<Eigen::Index>(i)) = problem.sample(labels[i], rng).transpose();
  }
  d.labels = std::move(labels);
  return d;
}

std::string_view trajectory_kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kConstant: return "constant";
    case TrajectoryKind::kAbrupt: return "abrupt";
    case TrajectoryKind::kLinearDrift: return "linear_drift";
    case TrajectoryKind::kResampleGrid: return "resample_grid";
  }
  return "constant";
}

TrajectoryKind parse_trajectory_kind(std::string_view name) {
  for (auto k : {TrajectoryKind::kConstant, TrajectoryKind::kAbrupt, TrajectoryKind::kLinearDrift,
                 TrajectoryKind::kResampleGrid}) {
    if (trajectory_kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown scenario kind '" + std::string(name) + "'");
}

void PriorTrajectory::validate() const {
  auto prob = [](double v, const char* what) {
    if (!(v >= kPriorFloor && v <= 1.0 - kPriorFloor)) {
      throw Error(ErrorCode::kInvalidPrior, std::string(what) + " outside [eta, 1-eta]");
    }
  };
  switch (kind) {
    case TrajectoryKind::kConstant: prob(p, "p"); break;
    case TrajectoryKind::kAbrupt:
      prob(p_before, "p_before");
      prob(p_after, "p_after");
      break;
    case TrajectoryKind::kLinearDrift:
      prob(p_start, "p_start");
      prob(p_min, "p_min");
      prob(p_max, "p_max");
      if (p_min > p_max) throw Error(ErrorCode::kInvalidConfig, "p_min exceeds p_max");
      if (!std::isfinite(slope)) throw Error(ErrorCode::kInvalidConfig, "slope must be finite");
      break;
    case TrajectoryKind::kResampleGrid:
      if (multipliers.empty() || !(base_qp > 0.0) || horizon == 0) {
        throw Error(ErrorCode::kInvalidConfig, "resample_grid needs multipliers, base_qp, horizon");
      }
      for (double m : multipliers) {
        if (!(m > 0.0)) throw Error(ErrorCode::kInvalidConfig, "multipliers must be positive");
      }
      break;
  }
}

double PriorTrajectory::prior_at(std::uint64_t t) const {
  double v = p;
  switch (kind) {
    case TrajectoryKind::kConstant: v = p; break;
    case TrajectoryKind::kAbrupt:
      if (t < t_switch) {
        v = p_before;
      } else {
        const auto since = t - t_switch;
        if (decay_steps == 0 || since >= decay_steps) {
          v = decay_steps == 0 ? p_after : p_before;
        } else {
          const double f = static_cast<double>(since) / static_cast<double>(decay_steps);
          v = p_after + f * (p_before - p_after);
        }
      }
      break;
    case TrajectoryKind::kLinearDrift:
      v = std::clamp(p_start + slope * static_cast<double>(t), p_min, p_max);
      break;
    case TrajectoryKind::kResampleGrid: {
      const std::size_t k = multipliers.size();
      const auto seg = std::min<std::size_t>(
          k - 1, static_cast<std::size_t>(t * k / std::max<std::uint64_t>(horizon, 1)));
      v = 1.0 / (1.0 + multipliers[seg] * base_qp);
      break;
    }
  }
  return std::clamp(v, kPriorFloor, 1.0 - kPriorFloor);
}

void StreamScenario::validate() const {
  problem.validate();
  trajectory.validate();
  if (horizon < 1) throw Error(ErrorCode::kInvalidConfig, "horizon must be >= 1");
}

StreamSample sample_step(const StreamScenario& scenario, std::uint64_t t, Rng& rng) {
  StreamSample s;
  s.p1 = scenario.trajectory.prior_at(t);
  std::bernoulli_distribution coin(s.p1);
  s.y = coin(rng) ? 1 : 0;
  s.x = scenario.problem.sample(s.y, rng);
  return s;
}

int oracle_decision(double log_lr, double qc, double p1) {
  return bayes_decision(std::exp(log_lr), qc * (1.0 - p1) / p1);
}

double decision_cost(int pred, int truth, double qc) {
  if (pred == 0 && truth == 1) return 1.0;
  if (pred == 1 && truth == 0) return qc;
  return 0.0;
}

double expected_decision_cost(int pred, double posterior, double qc) {
  return pred == 1 ? qc * (1.0 - posterior) : posterior;
}

std::string_view policy_name(Policy p) {
  switch (p) {
    case Policy::kAdaptive: return "adaptive";
    case Policy::kOracle: return "oracle";
    case Policy::kFixed: return "fixed";
  }
  return "adaptive";
}

Policy parse_policy(std::string_view name) {
  for (auto p : {Policy::kAdaptive, Policy::kOracle, Policy::kFixed}) {
    if (policy_name(p) == name) return p;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown policy '" + std::string(name) + "'");
}

RegretRun run_regret_experiment(const StreamScenario& scenario, const AdapterConfig& adapter,
                                const LogLrSource& source, const RegretOptions& options,
                                Rng& rng) {
  scenario.validate();
  auto state = init_adapter(adapter);
  const double qc = adapter.qc;
  RegretRun run;
  auto& L = run.ledger;
  const auto T = static_cast<std::size_t>(scenario.horizon);
  for (auto* v : {&L.alg_loss, &L.oracle_loss, &L.alg_expected, &L.oracle_expected, &L.cum_regret,
                  &L.cum_regret_realized, &run.true_p1}) {
    v->reserve(T);
  }
  double cum = 0.0;
  double cum_realized = 0.0;
  for (std::uint64_t t = 0; t < scenario.horizon; ++t) {
    const auto s = sample_step(scenario, t, rng);
    const double llr = source ? source(s.x) : scenario.problem.log_lr(s.x);
    int pred = 0;
    switch (options.policy) {
      case Policy::kAdaptive: {
        auto r = step(state, {llr});
        pred = r.prediction;
        run.trace.push_back(r);
        break;
      }
      case Policy::kOracle: pred = oracle_decision(llr, qc, s.p1); break;
      case Policy::kFixed: pred = oracle_decision(llr, qc, options.fixed_p1); break;
    }
    const int oracle = oracle_decision(llr, qc, s.p1);
    const double post = scenario.problem.posterior(s.x, s.p1);
    L.alg_loss.push_back(decision_cost(pred, s.y, qc));
    L.oracle_loss.push_back(decision_cost(oracle, s.y, qc));
    L.alg_expected.push_back(expected_decision_cost(pred, post, qc));
    L.oracle_expected.push_back(expected_decision_cost(oracle, post, qc));
    cum += L.alg_expected.back() - L.oracle_expected.back();
    cum_realized += L.alg_loss.back() - L.oracle_loss.back();
    L.cum_regret.push_back(cum);
    L.cum_regret_realized.push_back(cum_realized);
    run.true_p1.push_back(s.p1);
  }
  return run;
}

void write_regret_ledger(std::ostream& out, const RegretLedger& L) {
  using detail::format_double;
  out << "t,alg_loss,oracle_loss,cum_regret,alg_expected,oracle_expected,cum_regret_realized\n";
  for (std::size_t t = 0; t < L.cum_regret.size(); ++t) {
    out << t << ',' << format_double(L.alg_loss[t]) << ',' << format_double(L.oracle_loss[t]) << ','
        << format_double(L.cum_regret[t]) << ',' << format_double(L.alg_expected[t]) << ','
        << format_double(L.oracle_expected[t]) << ',' << format_double(L.cum_regret_realized[t])
        << '\n';
  }
}

namespace {

// Draws `want` indices from `pool`: a shuffled prefix when the pool is large
// enough, otherwise the whole pool plus uniform draws with replacement.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t want, Rng& rng,
                              bool& replaced) {
  std::shuffle(pool.begin(), pool.end(), rng);
  if (want <= pool.size()) {
    pool.resize(want);
    return pool;
  }
  replaced = true;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::size_t> out = pool;
  while (out.size() < want) out.push_back(pool[pick(rng)]);
  return out;
}

}  // namespace

ResampledTestSet make_resampled_testset(const LabeledDataset& dataset, double multiplier,
                                        std::uint64_t seed, std::size_t target_size) {
  dataset.validate();
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
    throw Error(ErrorCode::kResampleInfeasible, "multiplier must be positive");
  }
  if (!dataset.has_both_classes()) {
    throw Error(ErrorCode::kResampleInfeasible, "resampling needs both classes");
  }
  const auto n0 = static_cast<double>(dataset.count(0));
  const auto n1 = static_cast<double>(dataset.count(1));
  const double ratio = multiplier * n0 / n1;
  std::size_t want0 = 0;
  std::size_t want1 = 0;
  if (target_size == 0) {
    if (multiplier >= 1.0) {
      want0 = dataset.count(0);
      want1 = round_count(n1 / multiplier);
    } else {
      want1 = dataset.count(1);
      want0 = round_count(n0 * multiplier);
    }
  } else {
    want1 = round_count(static_cast<double>(target_size) / (1.0 + ratio));
    want0 = target_size > want1 ? target_size - want1 : 0;
  }
  if (want0 == 0 || want1 == 0) {
    throw Error(ErrorCode::kResampleInfeasible, "target ratio leaves a class empty");
  }
  Rng rng(seed);
  ResampledTestSet out;
  auto i0 = draw(dataset.indices_of(0), want0, rng, out.with_replacement);
  auto i1 = draw(dataset.indices_of(1), want1, rng, out.with_replacement);
  i0.insert(i0.end(), i1.begin(), i1.end());
  std::sort(i0.begin(), i0.end());
  out.data = dataset.subset(i0);
  return out;
}

}  // namespace obil

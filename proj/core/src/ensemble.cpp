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

#include "obil/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "obil/error.hpp"
#include "obil/metrics.hpp"
#include "text_io.hpp"

namespace obil {

void EnsembleConfig::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidConfig, "tau must be positive");
  if (mc_samples < 2) throw Error(ErrorCode::kInvalidConfig, "mc_samples must be >= 2");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "calibration_fraction must lie in (0,1)");
  }
  for (double q : target_qps) {
    if (!(q > 0.0) || !std::isfinite(q)) {
      throw Error(ErrorCode::kInvalidConfig, "target_qps must be positive");
    }
  }
}

std::uint64_t member_seed(std::uint64_t master, std::size_t k) {
  return master ^ (static_cast<std::uint64_t>(k + 1) * 0x9E3779B97F4A7C15ULL);
}

std::vector<double> default_target_qps(double qp) {
  std::vector<double> t = {1.0, 2.0, 5.0, 10.0, qp};
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("OBIL_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

bool fit_member_temperature(CalibratedScorer& member, const LabeledDataset& calibration) {
  if (!calibration.has_both_classes()) return false;
  // Posterior log-odds on the calibration rows: 2g/T + log qp_member - log qp_cal.
  const double offset = std::log(member.training_qp) - std::log(calibration.imbalance_ratio());
  std::vector<double> logits(calibration.size());
  const std::vector<double> offsets(calibration.size(), offset);
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    logits[i] = 2.0 * preactivation(member, calibration.row(i));
  }
  const auto fit = fit_temperature(logits, calibration.labels, offsets);
  if (fit.status == FitStatus::kFailed) return false;
  member.temperature = fit.temperature;
  return true;
}

LikelihoodRatioEnsemble train_members(const LabeledDataset& train_rows,
                                      const LabeledDataset& calibration,
                                      const EnsembleConfig& cfg, const NetworkConfig& net_cfg,
                                      const TrainingConfig& train_cfg, LossId loss,
                                      std::uint64_t seed, unsigned threads) {
  cfg.validate();
  train_rows.validate();
  if (!train_rows.has_both_classes()) {
    throw Error(ErrorCode::kDegenerateData, "ensemble training needs both classes");
  }
  LikelihoodRatioEnsemble out;
  out.config = cfg;
  if (out.config.target_qps.empty()) {
    out.config.target_qps = default_target_qps(train_rows.imbalance_ratio());
    if (cfg.k > 0 && cfg.k < out.config.target_qps.size()) out.config.target_qps.resize(cfg.k);
  }
  out.config.k = out.config.target_qps.size();
  const auto& targets = out.config.target_qps;
  out.members.resize(targets.size());
  const bool fit_t = cfg.fit_temperature || loss == LossId::kXentSigmoid;

  auto train_member = [&](std::size_t k) {
    const auto s = member_seed(seed, k);
    AssociatedProblemSpec spec{targets[k], cfg.method, s, kDefaultSmoteNeighbors};
    const auto assoc = make_associated(train_rows, spec);
    NetworkConfig nc = net_cfg;
    nc.seed = s;
    auto member = train(assoc, nc, train_cfg, loss);
    if (fit_t) fit_member_temperature(member, calibration);
    out.members[k] = std::move(member);
  };

  const unsigned n_threads =
      std::min<unsigned>(threads == 0 ? worker_threads() : threads,
                         static_cast<unsigned>(targets.size()));
  if (n_threads <= 1) {
    for (std::size_t k = 0; k < targets.size(); ++k) train_member(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < targets.size(); k = next++) {
          try {
            train_member(k);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

TrainedEnsemble train_ensemble(const LabeledDataset& dataset, const EnsembleConfig& cfg,
                               const NetworkConfig& net_cfg, const TrainingConfig& train_cfg,
                               LossId loss, std::uint64_t seed, unsigned threads) {
  cfg.validate();
  dataset.validate();
  const double fr[] = {cfg.calibration_fraction};
  auto parts = stratified_split(dataset, fr, seed);
  TrainedEnsemble out;
  out.calibration = std::move(parts[0]);
  out.ensemble =
      train_members(parts[1], out.calibration, cfg, net_cfg, train_cfg, loss, seed, threads);
  return out;
}

LogLikelihoodRatio member_log_lr(const CalibratedScorer& member, const Vector& x) {
  return log_lr_from_output(forward(member, x), member.training_qp);
}

std::vector<double> weights_from_variances(std::span<const double> variances, double tau) {
  std::vector<double> w(variances.size(), 0.0);
  double lowest = std::numeric_limits<double>::infinity();
  for (double v : variances) lowest = std::min(lowest, v);
  if (!std::isfinite(lowest)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < variances.size(); ++k) {
    // Shifted by the smallest variance so the largest term is exp(0).
    w[k] = std::isfinite(variances[k]) ? std::exp(-(variances[k] - lowest) / tau) : 0.0;
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> fusion_weights(const LikelihoodRatioEnsemble& ensemble, const Vector& x,
                                   Rng& rng) {
  std::vector<double> var;
  var.reserve(ensemble.size());
  for (const auto& m : ensemble.members) {
    var.push_back(mc_dropout_log_lr_variance(m, x, ensemble.config.mc_samples, rng));
  }
  return weights_from_variances(var, ensemble.config.tau);
}

LogLikelihoodRatio fuse_log_lrs(std::span<const double> log_lrs, std::span<const double> weights) {
  double acc = 0.0;
  for (std::size_t k = 0; k < log_lrs.size(); ++k) {
    if (weights[k] != 0.0) acc += weights[k] * log_lrs[k];
  }
  return {acc};
}

LogLikelihoodRatio fused_log_lr(const LikelihoodRatioEnsemble& ensemble, const Vector& x,
                                Rng& rng) {
  if (ensemble.size() == 1) return member_log_lr(ensemble.members.front(), x);
  std::vector<double> logs;
  logs.reserve(ensemble.size());
  for (const auto& m : ensemble.members) logs.push_back(member_log_lr(m, x).value);
  const auto w = fusion_weights(ensemble, x, rng);
  return fuse_log_lrs(logs, w);
}

void write_ensemble(std::ostream& out, const LikelihoodRatioEnsemble& e) {
  using detail::format_double;
  out << "OBIL-ENS-v1\n";
  out << "k " << e.members.size() << "\n";
  out << "fit_temperature " << (e.config.fit_temperature ? 1 : 0) << "\n";
  out << "target_qps " << e.config.target_qps.size();
  for (double q : e.config.target_qps) out << ' ' << format_double(q);
  out << "\n";
  out << "tau " << format_double(e.config.tau) << "\n";
  out << "mc_samples " << e.config.mc_samples << "\n";
  out << "calibration_fraction " << format_double(e.config.calibration_fraction) << "\n";
  out << "method " << resample_method_name(e.config.method) << "\n";
  for (const auto& m : e.members) write_scorer(out, m);
  out << "end-ensemble\n";
}

LikelihoodRatioEnsemble read_ensemble(std::istream& in) {
  using namespace detail;
  expect_token(in, "OBIL-ENS-v1");
  LikelihoodRatioEnsemble e;
  expect_token(in, "k");
  const auto k = read_u64(in);
  e.config.k = k;
  expect_token(in, "fit_temperature");
  e.config.fit_temperature = read_u64(in) != 0;
  expect_token(in, "target_qps");
  const auto nq = read_u64(in);
  for (std::uint64_t i = 0; i < nq; ++i) e.config.target_qps.push_back(read_double(in));
  expect_token(in, "tau");
  e.config.tau = read_double(in);
  expect_token(in, "mc_samples");
  e.config.mc_samples = static_cast<int>(read_u64(in));
  expect_token(in, "calibration_fraction");
  e.config.calibration_fraction = read_double(in);
  expect_token(in, "method");
  e.config.method = parse_resample_method(next_token(in));
  for (std::uint64_t i = 0; i < k; ++i) e.members.push_back(read_scorer(in));
  expect_token(in, "end-ensemble");
  e.config.validate();
  return e;
}

}  // namespace obil

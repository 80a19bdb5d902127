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

#ifndef OBIL_ADAPTER_HPP_
#define OBIL_ADAPTER_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "obil/bayes.hpp"
#include "obil/ensemble.hpp"

namespace obil {

struct AdapterConfig {
  double qc = 1.0;
  double initial_p1 = 0.5;
  double alpha = 0.05;
  double gamma = 0.9;
  double beta = 0.6;
  double delta_max = 0.02;
  std::size_t window_w = 100;
  double eta = kPriorFloor;

  void validate() const;
};

struct AdapterState {
  AdapterConfig config;
  double p1_hat = 0.5;
  double qp_hat = 1.0;
  double threshold_q = 1.0;
  std::vector<unsigned char> window;  // ring buffer of [q > 1]
  std::size_t window_head = 0;
  std::size_t window_fill = 0;
  std::size_t window_sum = 0;
  std::uint64_t t = 0;
};

struct StepRecord {
  std::uint64_t t = 0;
  double log_lr = 0.0;
  int prediction = 0;
  double p_lr = 0.0;
  double p_freq = 0.0;
  double p_comb = 0.0;
  bool updated = false;
  bool clamped = false;
  double p1_hat_after = 0.0;
  double threshold_after = 0.0;
};

AdapterState init_adapter(const AdapterConfig& config);

// One pass of the loop body; advances the state in place.
StepRecord step(AdapterState& state, LogLikelihoodRatio log_lr);

// The prior update in isolation (gate, clamp, floor), for a given p_comb.
// Returns {updated, clamped}.
struct PriorUpdate {
  bool updated = false;
  bool clamped = false;
};
PriorUpdate update_prior(AdapterState& state, double p_comb);

std::vector<StepRecord> run_stream(const LikelihoodRatioEnsemble& ensemble,
                                   std::span<const Vector> stream, const AdapterConfig& config,
                                   Rng& rng);
std::vector<StepRecord> run_stream(std::span<const double> log_lrs, const AdapterConfig& config);

// One JSON object per line.
void write_trace_line(std::ostream& out, const StepRecord& r);
void write_trace(std::ostream& out, std::span<const StepRecord> trace);

}  // namespace obil

#endif  // OBIL_ADAPTER_HPP_

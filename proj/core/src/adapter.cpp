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

#include "obil/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "obil/error.hpp"
#include "text_io.hpp"

namespace obil {

namespace {

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

void refresh_threshold(AdapterState& s) {
  const double eta = s.config.eta;
  s.p1_hat = std::clamp(s.p1_hat, eta, 1.0 - eta);
  s.qp_hat = (1.0 - s.p1_hat) / s.p1_hat;
  s.threshold_q = s.config.qc * s.qp_hat;
}

}  // namespace

void AdapterConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(qc > 0.0) || !std::isfinite(qc)) bad("adapter qc must be positive");
  if (!(initial_p1 >= 0.0 && initial_p1 <= 1.0)) bad("initial_p1 must lie in [0,1]");
  if (!in_open_unit(alpha)) bad("alpha must lie in (0,1)");
  if (!(gamma > 0.5 && gamma < 1.0)) bad("gamma must lie in (0.5,1)");
  if (!in_open_unit(beta)) bad("beta must lie in (0,1)");
  if (!in_open_unit(delta_max)) bad("delta_max must lie in (0,1)");
  if (window_w == 0) bad("window_w must be positive");
  if (!(eta > 0.0 && eta < 0.5)) bad("eta must lie in (0,0.5)");
}

AdapterState init_adapter(const AdapterConfig& config) {
  config.validate();
  AdapterState s;
  s.config = config;
  s.p1_hat = config.initial_p1;
  s.window.assign(config.window_w, 0);
  refresh_threshold(s);
  return s;
}

PriorUpdate update_prior(AdapterState& s, double p_comb) {
  const auto& c = s.config;
  PriorUpdate u;
  const double diff = p_comb - s.p1_hat;
  if (std::abs(diff) < c.delta_max) {
    if (p_comb > c.gamma || p_comb < 1.0 - c.gamma) {
      s.p1_hat = c.alpha * p_comb + (1.0 - c.alpha) * s.p1_hat;
      u.updated = true;
    }
  } else {
    s.p1_hat += (diff > 0.0 ? 1.0 : -1.0) * c.delta_max;
    u.updated = true;
    u.clamped = true;
  }
  refresh_threshold(s);
  return u;
}

StepRecord step(AdapterState& s, LogLikelihoodRatio log_lr) {
  StepRecord r;
  r.t = s.t;
  r.log_lr = log_lr.value;
  const double q = std::exp(log_lr.value);
  r.prediction = bayes_decision(q, s.threshold_q);
  // q / (q + qp) written to stay finite when q overflows.
  r.p_lr = 1.0 / (1.0 + s.qp_hat * std::exp(-log_lr.value));

  const unsigned char above = q > 1.0 ? 1 : 0;
  const std::size_t w = s.window.size();
  if (s.window_fill == w) {
    s.window_sum -= s.window[s.window_head];
  } else {
    ++s.window_fill;
  }
  s.window[s.window_head] = above;
  s.window_sum += above;
  s.window_head = (s.window_head + 1) % w;
  r.p_freq = static_cast<double>(s.window_sum) / static_cast<double>(s.window_fill);

  r.p_comb = s.config.beta * r.p_lr + (1.0 - s.config.beta) * r.p_freq;
  const auto u = update_prior(s, r.p_comb);
  r.updated = u.updated;
  r.clamped = u.clamped;
  r.p1_hat_after = s.p1_hat;
  r.threshold_after = s.threshold_q;
  ++s.t;
  return r;
}

std::vector<StepRecord> run_stream(const LikelihoodRatioEnsemble& ensemble,
                                   std::span<const Vector> stream, const AdapterConfig& config,
                                   Rng& rng) {
  auto s = init_adapter(config);
  std::vector<StepRecord> out;
  out.reserve(stream.size());
  for (const auto& x : stream) out.push_back(step(s, fused_log_lr(ensemble, x, rng)));
  return out;
}

std::vector<StepRecord> run_stream(std::span<const double> log_lrs, const AdapterConfig& config) {
  auto s = init_adapter(config);
  std::vector<StepRecord> out;
  out.reserve(log_lrs.size());
  for (double v : log_lrs) out.push_back(step(s, {v}));
  return out;
}

void write_trace_line(std::ostream& out, const StepRecord& r) {
  using detail::format_double;
  auto num = [](double v) {
    return std::isfinite(v) ? format_double(v) : std::string(v > 0 ? "1e308" : "-1e308");
  };
  out << "{\"t\":" << r.t << ",\"log_lr\":" << num(r.log_lr) << ",\"prediction\":" << r.prediction
      << ",\"p_lr\":" << num(r.p_lr) << ",\"p_freq\":" << num(r.p_freq)
      << ",\"p_comb\":" << num(r.p_comb) << ",\"updated\":" << (r.updated ? "true" : "false")
      << ",\"clamped\":" << (r.clamped ? "true" : "false")
      << ",\"p1_hat_after\":" << num(r.p1_hat_after)
      << ",\"threshold_after\":" << num(r.threshold_after) << "}\n";
}

void write_trace(std::ostream& out, std::span<const StepRecord> trace) {
  for (const auto& r : trace) write_trace_line(out, r);
}

}  // namespace obil

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

#include <cmath>
#include <deque>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "obil/adapter.hpp"
#include "obil/error.hpp"

namespace obil {
namespace {

TEST(InitAdapter, Examples) {
  AdapterConfig c;
  c.initial_p1 = 0.5;
  EXPECT_DOUBLE_EQ(init_adapter(c).threshold_q, 1.0);
  c.initial_p1 = 0.2;
  EXPECT_NEAR(init_adapter(c).threshold_q, 4.0, 1e-12);
  c.initial_p1 = 0.0;
  c.qc = 3.0;
  const auto s = init_adapter(c);
  EXPECT_DOUBLE_EQ(s.p1_hat, 0.005);
  EXPECT_NEAR(s.threshold_q, 199.0 * 3.0, 1e-9);
  EXPECT_EQ(s.window_fill, 0u);
}

TEST(AdapterConfig, RejectsOutOfRange) {
  AdapterConfig c;
  c.gamma = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = AdapterConfig{};
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = AdapterConfig{};
  c.window_w = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Step, TieAtUnitThresholdPredictsZero) {
  auto s = init_adapter(AdapterConfig{});
  const auto r = step(s, {0.0});
  EXPECT_EQ(r.prediction, 0);
  EXPECT_DOUBLE_EQ(r.p_lr, 0.5);
}

TEST(UpdatePrior, GatedEmaInsideClampRegion) {
  AdapterConfig c;
  c.alpha = 0.1;
  c.delta_max = 0.5;
  auto s = init_adapter(c);
  const auto u = update_prior(s, 0.95);
  EXPECT_TRUE(u.updated);
  EXPECT_FALSE(u.clamped);
  EXPECT_NEAR(s.p1_hat, 0.545, 1e-15);
}

TEST(UpdatePrior, ClampedBranch) {
  AdapterConfig c;
  c.delta_max = 0.02;
  auto s = init_adapter(c);
  const auto u = update_prior(s, 0.9);
  EXPECT_TRUE(u.clamped);
  EXPECT_NEAR(s.p1_hat, 0.52, 1e-15);
}

TEST(UpdatePrior, UnconfidentInsideRegionLeavesPriorAlone) {
  AdapterConfig c;
  c.delta_max = 0.5;
  auto s = init_adapter(c);
  const auto u = update_prior(s, 0.7);
  EXPECT_FALSE(u.updated);
  EXPECT_EQ(s.p1_hat, 0.5);
}

// The window counts [q > 1] strictly, so q = 1 never counts: p_freq is 0 and
// p_comb = beta * p_lr sits below p1_hat, which therefore drifts down.
TEST(RunStream, ZeroLogLrCountsAsNotAbove) {
  const std::vector<double> lrs(5000, 0.0);
  const AdapterConfig c;
  const auto trace = run_stream(lrs, c);
  EXPECT_EQ(trace[0].p_freq, 0.0);
  EXPECT_DOUBLE_EQ(trace[0].p_comb, c.beta * 0.5);
  EXPECT_TRUE(trace[0].clamped);
  EXPECT_DOUBLE_EQ(trace[0].p1_hat_after, 0.5 - c.delta_max);
  double prev = 0.5;
  for (const auto& r : trace) {
    EXPECT_EQ(r.prediction, 0);
    EXPECT_LE(r.p1_hat_after, prev);
    prev = r.p1_hat_after;
  }
  EXPECT_NEAR(trace.back().p1_hat_after, c.eta, 1e-9);
}

// Log-LRs alternating around 0 keep p_comb near 1/2, inside the no-update band.
TEST(RunStream, BalancedSignalsHoldPriorInsideNoUpdateBand) {
  AdapterConfig c;
  c.beta = 0.5;
  c.delta_max = 0.3;
  std::vector<double> lrs;
  for (int i = 0; i < 4000; ++i) lrs.push_back(i % 2 == 0 ? 1e-9 : -1e-9);
  const auto trace = run_stream(lrs, c);
  for (const auto& r : trace) {
    EXPECT_FALSE(r.updated);
    EXPECT_EQ(r.p1_hat_after, 0.5);
  }
}

TEST(RunStream, AlwaysAboveOneRaisesPriorMonotonically) {
  AdapterConfig c;
  c.gamma = 0.6;
  c.beta = 0.6;
  const std::vector<double> lrs(3000, 1.5);
  const auto trace = run_stream(lrs, c);
  double prev = c.initial_p1;
  for (const auto& r : trace) {
    EXPECT_GE(r.p1_hat_after, prev);
    prev = r.p1_hat_after;
  }
  EXPECT_GT(trace.back().p1_hat_after, 0.8);
}

TEST(RunStream, EmptyStream) {
  EXPECT_TRUE(run_stream(std::span<const double>{}, AdapterConfig{}).empty());
}

TEST(Step, FrequencySignalDependsOnlyOnLastWindow) {
  AdapterConfig c;
  c.window_w = 17;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> lrs(2000);
  for (auto& v : lrs) v = n(rng);
  const auto trace = run_stream(lrs, c);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const std::size_t lo = t + 1 >= c.window_w ? t + 1 - c.window_w : 0;
    double above = 0;
    for (std::size_t i = lo; i <= t; ++i) above += std::exp(lrs[i]) > 1.0 ? 1 : 0;
    EXPECT_DOUBLE_EQ(trace[t].p_freq, above / static_cast<double>(t + 1 - lo));
  }
}

TEST(Step, PredictionUsesThresholdBeforeTheStep) {
  AdapterConfig c;
  c.initial_p1 = 0.2;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  auto s = init_adapter(c);
  for (int i = 0; i < 5000; ++i) {
    const double before = s.threshold_q;
    const double v = u(rng);
    const auto r = step(s, {v});
    EXPECT_EQ(r.prediction, std::exp(v) > before ? 1 : 0);
  }
}

TEST(Step, AdversarialFuzzKeepsInvariants) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::bernoulli_distribution extreme(0.2);
  AdapterConfig c;
  c.initial_p1 = 0.3;
  auto s = init_adapter(c);
  for (int i = 0; i < 20000; ++i) {
    const double prev = s.p1_hat;
    const double v = extreme(rng) ? (u(rng) > 0 ? 50.0 : -50.0) : u(rng);
    const auto r = step(s, {v});
    ASSERT_GE(s.p1_hat, c.eta);
    ASSERT_LE(s.p1_hat, 1.0 - c.eta);
    if (std::abs(r.p_comb - prev) >= c.delta_max) {
      ASSERT_TRUE(r.clamped);
      ASSERT_LE(std::abs(s.p1_hat - prev), c.delta_max + 1e-15);
    }
    ASSERT_NEAR(s.threshold_q, c.qc * (1.0 - s.p1_hat) / s.p1_hat,
                1e-12 * std::max(1.0, s.threshold_q));
  }
}

TEST(Trace, OneJsonObjectPerStep) {
  const std::vector<double> lrs = {0.1, -2.0, 3.0};
  const auto trace = run_stream(lrs, AdapterConfig{});
  std::ostringstream out;
  write_trace(out, trace);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("t").get<std::size_t>(), n);
    EXPECT_DOUBLE_EQ(j.at("log_lr").get<double>(), lrs[n]);
    for (const char* key : {"prediction", "p_lr", "p_freq", "p_comb", "updated", "clamped",
                            "p1_hat_after", "threshold_after"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    ++n;
  }
  EXPECT_EQ(n, 3u);
}

}  // namespace
}  // namespace obil

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
#include <random>

#include <gtest/gtest.h>

#include "obil/bayes.hpp"
#include "obil/error.hpp"
#include "oracles.hpp"

namespace obil {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an obil::Error";
  return ErrorCode::kIoError;
}

TEST(CombinedThreshold, Examples) {
  EXPECT_DOUBLE_EQ(combined_threshold(CostStructure::zero_one(), PriorPair(0.5)), 1.0);
  EXPECT_NEAR(combined_threshold(CostStructure::zero_one(), PriorPair(0.2)), 4.0, 1e-12);
  const CostStructure c{0.0, 1.0, 2.0, 0.0};
  EXPECT_DOUBLE_EQ(c.cost_ratio(), 2.0);
  EXPECT_DOUBLE_EQ(PriorPair(0.25).imbalance_ratio(), 3.0);
  EXPECT_DOUBLE_EQ(combined_threshold(c, PriorPair(0.25)), 6.0);
}

TEST(CombinedThreshold, DegenerateCostsRejected) {
  const CostStructure c{0.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(code_of([&] { combined_threshold(c, PriorPair(0.5)); }),
            ErrorCode::kInvalidCostStructure);
  const CostStructure d{1.0, 1.0, 1.0, 0.0};
  EXPECT_EQ(code_of([&] { d.validate(); }), ErrorCode::kInvalidCostStructure);
}

TEST(CombinedThreshold, CostScaleInvariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const CostStructure c{u(rng), u(rng) + 3.5, u(rng) + 3.5, u(rng)};
    const PriorPair p(std::uniform_real_distribution<double>(0.01, 0.99)(rng));
    const double lambda = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
    const CostStructure s{lambda * c.c00, lambda * c.c01, lambda * c.c10, lambda * c.c11};
    const double a = combined_threshold(c, p);
    EXPECT_NEAR(combined_threshold(s, p), a, 1e-14 * a);
  }
}

TEST(PriorPair, FloorClip) {
  EXPECT_DOUBLE_EQ(PriorPair(0.0).p1(), kPriorFloor);
  EXPECT_DOUBLE_EQ(PriorPair(1.0).p1(), 1.0 - kPriorFloor);
  EXPECT_NEAR(PriorPair(0.0).imbalance_ratio(), 199.0, 1e-9);
}

TEST(PosteriorFromOutput, Examples) {
  EXPECT_DOUBLE_EQ(posterior_from_output(0.0), 0.5);
  EXPECT_DOUBLE_EQ(posterior_from_output(0.6), 0.8);
  EXPECT_NEAR(posterior_from_output(-1.0 + 1e-6), 5e-7, 1e-15);
  EXPECT_EQ(code_of([] { posterior_from_output(1.0); }), ErrorCode::kUnclampedOutput);
  EXPECT_EQ(code_of([] { posterior_from_output(-1.5); }), ErrorCode::kUnclampedOutput);
}

TEST(LrFromPosterior, Examples) {
  EXPECT_DOUBLE_EQ(lr_from_posterior(0.5, 1.0), 1.0);
  EXPECT_NEAR(lr_from_posterior(0.8, 2.0), 8.0, 1e-12);
  EXPECT_NEAR(lr_from_posterior(0.2, 4.0), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { lr_from_posterior(0.0, 1.0); }), ErrorCode::kPosteriorSaturation);
  EXPECT_EQ(code_of([] { lr_from_posterior(1.0, 1.0); }), ErrorCode::kPosteriorSaturation);
}

TEST(LrFromOutput, Examples) {
  EXPECT_DOUBLE_EQ(lr_from_output(0.0, 1.0), 1.0);
  EXPECT_NEAR(lr_from_output(0.5, 1.0), 3.0, 1e-12);
  EXPECT_NEAR(lr_from_output(0.6, 2.0), 8.0, 1e-12);
  EXPECT_NEAR(lr_from_output(0.6, 2.0), lr_from_posterior(0.8, 2.0), 1e-12);
  // Saturated outputs are clamped rather than rejected.
  EXPECT_TRUE(std::isfinite(lr_from_output(1.0, 1.0)));
  EXPECT_GT(lr_from_output(1.0, 1.0), 1e5);
}

TEST(LrFromOutput, CompositionIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> o(-0.999, 0.999);
  std::uniform_real_distribution<double> q(0.1, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double out = o(rng);
    const double qp = q(rng);
    const double a = lr_from_output(out, qp);
    const double b = lr_from_posterior(posterior_from_output(out), qp);
    EXPECT_EQ(a, b);
  }
}

TEST(LrFromOutput, LogFormAgrees) {
  for (double o : {-0.9, -0.3, 0.0, 0.25, 0.99}) {
    for (double qp : {0.5, 1.0, 7.0}) {
      EXPECT_NEAR(log_lr_from_output(o, qp).value, std::log(lr_from_output(o, qp)), 1e-12);
    }
  }
}

// Analytic posteriors of a fixed pair of class conditionals under several
// training priors all map back to the same likelihood ratio.
TEST(ExactTransfer, AnalyticPosteriorsRecoverSameRatio) {
  for (double x : {-2.0, -0.7, 0.0, 0.3, 1.9}) {
    const double q_true = std::exp(2.0 * x);
    for (double qp : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double p1 = 1.0 / (1.0 + qp);
      const double post = oracle::gaussian_posterior_1d(x, p1);
      EXPECT_NEAR(lr_from_posterior(post, qp), q_true, 1e-12 * q_true) << x << " " << qp;
    }
  }
}

TEST(ErrorBound, Examples) {
  EXPECT_NEAR(relative_lr_error_bound(0.5, 0.1), 0.4, 1e-12);
  EXPECT_NEAR(relative_lr_error_bound(0.8, 0.05), 0.05 / 0.19, 1e-12);
  EXPECT_DOUBLE_EQ(relative_lr_error_bound(0.5, 0.0), 0.0);
  EXPECT_EQ(code_of([] { relative_lr_error_bound(0.1, 0.1); }), ErrorCode::kBoundUndefined);
  EXPECT_EQ(code_of([] { relative_lr_error_bound(0.5, -0.01); }), ErrorCode::kBoundUndefined);
}

TEST(ErrorBound, ExactErrorMatchesDirectComputation) {
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    for (double e : {-0.04, -0.01, 0.01, 0.04}) {
      const double q = p / (1 - p);
      const double qh = (p + e) / (1 - p - e);
      EXPECT_NEAR(exact_relative_lr_error(p, e), std::abs(qh - q) / q, 1e-12);
    }
  }
}

// The stated bound holds for both error signs when p <= 1/3; above that an
// overestimate of the posterior exceeds it (the acceptance suite sweeps the
// full grid).
TEST(ErrorBound, HoldsBelowOneThird) {
  for (int i = 0; i < 100; ++i) {
    const double p = 0.05 + (1.0 / 3.0 - 0.05) * i / 99.0;
    for (int j = 0; j < 100; ++j) {
      const double eps = 0.5 * std::min(p, 1 - p) * j / 100.0;
      const double bound = relative_lr_error_bound(p, eps);
      EXPECT_LE(exact_relative_lr_error(p, eps), bound * (1 + 1e-12));
      EXPECT_LE(exact_relative_lr_error(p, -eps), bound * (1 + 1e-12));
    }
  }
}

TEST(CostSensitiveLoss, Examples) {
  EXPECT_DOUBLE_EQ(cost_sensitive_loss(1, 1, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(cost_sensitive_loss(0, 1, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(cost_sensitive_loss(1, 0, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(cost_sensitive_loss(0, 0, 5.0), 0.0);
}

TEST(BayesDecision, TiePredictsZero) {
  EXPECT_EQ(bayes_decision(1.0, 1.0), 0);
  EXPECT_EQ(bayes_decision(1.0 + 1e-12, 1.0), 1);
  EXPECT_EQ(bayes_decision(3.0, 4.0), 0);
}

TEST(ErrorNames, KebabCase) {
  EXPECT_EQ(to_string(ErrorCode::kInvalidCostStructure), "invalid-cost-structure");
  EXPECT_EQ(to_string(ErrorCode::kBbseUnidentifiable), "bbse-unidentifiable");
}

}  // namespace
}  // namespace obil

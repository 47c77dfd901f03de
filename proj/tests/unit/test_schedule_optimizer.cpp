/*
 * Copyright 2026 The SHIELD-CL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "shield/errors.hpp"
#include "shield/optimizer.hpp"
#include "shield/schedule.hpp"

namespace shield {
namespace {

TEST(Schedule, Endpoints) {
  const auto first = schedule_step(1, 1000, 0.1);
  EXPECT_NEAR(first.kappa, 1.0, 1e-3);
  EXPECT_NEAR(first.eps, 0.0, 1e-3);
  const auto mid = schedule_step(500, 1000, 0.1);
  EXPECT_DOUBLE_EQ(mid.eps, 0.1);
  EXPECT_DOUBLE_EQ(mid.kappa, 0.75);
  EXPECT_DOUBLE_EQ(schedule_step(1000, 1000, 0.1).kappa, 0.5);
  EXPECT_DOUBLE_EQ(schedule_step(1000, 1000, 0.1).eps, 0.1);
  // Odd E: the ramp reaches 2 floor(E/2) eps / E just short of the target.
  EXPECT_DOUBLE_EQ(schedule_step(3, 7, 0.7).eps, 0.6);
  EXPECT_DOUBLE_EQ(schedule_step(4, 7, 0.7).eps, 0.7);
}

TEST(Schedule, MatchesClosedFormAndStaysInRange) {
  for (std::size_t total : {1u, 2u, 9u, 100u}) {
    for (std::size_t i = 1; i <= total; ++i) {
      const auto v = schedule_step(i, total, 0.3);
      const double want_eps = i <= total / 2 ? 2.0 * i * 0.3 / total : 0.3;
      EXPECT_DOUBLE_EQ(v.eps, want_eps);
      EXPECT_DOUBLE_EQ(v.kappa, std::max(0.5, 1.0 - static_cast<double>(i) / (2.0 * total)));
      EXPECT_GE(v.kappa, 0.5);
      EXPECT_LE(v.kappa, 1.0);
      EXPECT_GE(v.eps, 0.0);
      EXPECT_LE(v.eps, 0.3 + 1e-15);
    }
  }
}

TEST(Schedule, RejectsBadSteps) {
  EXPECT_THROW(schedule_step(1, 0, 0.1), ContractError);
  EXPECT_THROW(schedule_step(0, 10, 0.1), ContractError);
  EXPECT_THROW(schedule_step(11, 10, 0.1), ContractError);
}

TEST(OptimizerTest, ParsesKinds) {
  EXPECT_EQ(parse_optimizer("adam"), OptimizerKind::adam);
  EXPECT_EQ(parse_optimizer("sgd"), OptimizerKind::sgd);
  EXPECT_THROW(parse_optimizer("lbfgs"), ContractError);
}

TEST(OptimizerTest, SgdStep) {
  Optimizer opt({OptimizerKind::sgd, 0.5});
  Tensor p({2}, {1.0, 2.0});
  Tensor* params[] = {&p};
  const Tensor grads[] = {Tensor({2}, {2.0, -4.0})};
  opt.step(params, grads);
  EXPECT_EQ(p.data, (std::vector<double>{0.0, 4.0}));
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  Optimizer opt({OptimizerKind::adam, 0.01});
  Tensor p({3}, {1.0, 1.0, 1.0});
  Tensor* params[] = {&p};
  const Tensor grads[] = {Tensor({3}, {3.0, -0.001, 0.0})};
  opt.step(params, grads);
  EXPECT_NEAR(p[0], 0.99, 1e-9);
  EXPECT_NEAR(p[1], 1.01, 1e-7);
  EXPECT_EQ(p[2], 1.0);
}

TEST(OptimizerTest, AdamMatchesReferenceRecursion) {
  Optimizer opt({OptimizerKind::adam, 0.1, 0.8, 0.9, 1e-8});
  Tensor p({1}, {0.0});
  Tensor* params[] = {&p};
  double x = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 25; ++t) {
    const double g = 2.0 * (x - 3.0);
    const Tensor grads[] = {Tensor({1}, {g})};
    opt.step(params, grads);
    m = 0.8 * m + 0.2 * g;
    v = 0.9 * v + 0.1 * g * g;
    x -= 0.1 * (m / (1 - std::pow(0.8, t))) / (std::sqrt(v / (1 - std::pow(0.9, t))) + 1e-8);
    EXPECT_NEAR(p[0], x, 1e-12);
  }
}

TEST(OptimizerTest, AdamMinimisesAQuadratic) {
  Optimizer opt({OptimizerKind::adam, 0.05});
  Tensor p({2}, {4.0, -3.0});
  Tensor* params[] = {&p};
  for (int t = 0; t < 2000; ++t) {
    const Tensor grads[] = {Tensor({2}, {2.0 * (p[0] - 1.0), 2.0 * (p[1] + 2.0)})};
    opt.step(params, grads);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -2.0, 1e-3);
}

TEST(OptimizerTest, RejectsChangingParameterLists) {
  Optimizer opt({});
  Tensor a({1}), b({1});
  Tensor* one[] = {&a};
  Tensor* two[] = {&a, &b};
  const Tensor g1[] = {Tensor({1})};
  const Tensor g2[] = {Tensor({1}), Tensor({1})};
  opt.step(one, g1);
  EXPECT_THROW(opt.step(two, g2), DimensionError);
  EXPECT_THROW(opt.step(one, g2), DimensionError);
  EXPECT_THROW(Optimizer({OptimizerKind::adam, -1.0}), ContractError);
}

}  // namespace
}  // namespace shield

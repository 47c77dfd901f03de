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

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "shield/attacks.hpp"
#include "shield/errors.hpp"
#include "shield/network.hpp"
#include "shield/soundness.hpp"

namespace shield {
namespace {

NetworkSpec mlp(std::size_t in, std::size_t hidden, std::size_t classes, Activation act = Activation::relu) {
  NetworkSpec spec;
  spec.input_shape = {in};
  spec.layers = {LayerDescriptor::dense(hidden), LayerDescriptor::act(act), LayerDescriptor::dense(classes)};
  spec.classes = classes;
  return spec;
}

TEST(LayerText, RoundTrips) {
  const std::string text = "conv:8:3:2,bn,relu,avgpool:2:2,maxpool:2:1,flatten,dense:10,sigmoid,identity";
  const auto layers = parse_layers(text);
  ASSERT_EQ(layers.size(), 9u);
  EXPECT_EQ(layers[0], LayerDescriptor::conv(8, 3, 2));
  EXPECT_EQ(layers[4], LayerDescriptor::maxpool(2, 1));
  EXPECT_EQ(parse_layers(format_layers(layers)), layers);
}

TEST(LayerText, RejectsGarbage) {
  EXPECT_THROW(parse_layers("dense:x"), ContractError);
  EXPECT_THROW(parse_layers("softplus"), ContractError);
  EXPECT_THROW(parse_layers("dense:-3"), ContractError);
}

TEST(NetworkSpecShapes, ValidatesComposition) {
  NetworkSpec spec = mlp(3, 4, 2);
  EXPECT_NO_THROW(spec.validate());
  spec.classes = 3;
  EXPECT_THROW(spec.validate(), DimensionError);
  NetworkSpec conv;
  conv.input_shape = {4};
  conv.layers = {LayerDescriptor::conv(2, 3)};
  conv.classes = 2;
  EXPECT_THROW(conv.validate(), DimensionError);
}

TEST(ParamLayoutTest, PackUnpackRoundTrip) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet p = testing::random_params(spec, rng);
    const ParamSet q = ParamSet::pack(p.layout, p.unpack());
    EXPECT_EQ(q.flat, p.flat);
    std::size_t offset = 0;
    for (const auto& e : p.layout.entries) {
      EXPECT_EQ(e.offset, offset);
      offset += numel(e.shape);
    }
    EXPECT_EQ(offset, p.layout.total);
  }
  EXPECT_THROW(ParamSet(mlp(2, 2, 2).layout(), std::vector<double>(3)), DimensionError);
}

TEST(ForwardPoint, SingleIdentityDenseReturnsInput) {
  NetworkSpec spec;
  spec.input_shape = {3};
  spec.layers = {LayerDescriptor::dense(3)};
  spec.classes = 3;
  std::vector<double> flat(spec.layout().total, 0.0);
  for (std::size_t i = 0; i < 3; ++i) flat[i * 3 + i] = 1.0;
  const ParamSet p(spec.layout(), flat);
  const Tensor x({2, 3}, {0.1, -0.2, 0.3, 4, 5, 6});
  EXPECT_EQ(forward_point(spec, p, x).data, x.data);
}

TEST(ForwardPoint, MatchesHandRolledTwoLayerNet) {
  const NetworkSpec spec = mlp(3, 4, 2, Activation::sigmoid);
  Rng rng(3);
  const ParamSet p = testing::random_params(spec, rng);
  const Tensor x({1, 3}, {0.25, -0.5, 0.75});
  const Tensor w1 = p.tensor(0, "weight"), b1 = p.tensor(0, "bias");
  const Tensor w2 = p.tensor(2, "weight"), b2 = p.tensor(2, "bias");
  double h[4];
  for (int o = 0; o < 4; ++o) {
    double a = b1[o];
    for (int i = 0; i < 3; ++i) a += w1[o * 3 + i] * x[i];
    h[o] = 1.0 / (1.0 + std::exp(-a));
  }
  const Tensor out = forward_point(spec, p, x);
  for (int o = 0; o < 2; ++o) {
    double a = b2[o];
    for (int i = 0; i < 4; ++i) a += w2[o * 4 + i] * h[i];
    EXPECT_NEAR(out[o], a, 1e-14);
  }
}

TEST(ForwardPoint, RejectsWrongInputShape) {
  const NetworkSpec spec = mlp(3, 4, 2);
  Rng rng(2);
  const ParamSet p = testing::random_params(spec, rng);
  EXPECT_THROW(forward_point(spec, p, Tensor({1, 4})), DimensionError);
  EXPECT_THROW(forward_interval(spec, p, Tensor({1, 3}), -0.1), ContractError);
}

TEST(ForwardInterval, ZeroRadiusCollapsesToPointPass) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet p = testing::random_params(spec, rng);
    const NormState norm = testing::random_norm(spec, rng);
    const Tensor x = testing::random_tensor(testing::per_sample(spec, 3), rng, 0, 1);
    const Tensor z = forward_point(spec, p, x, &norm);
    const auto b = forward_interval(spec, p, x, 0.0, &norm);
    EXPECT_EQ(b.lower.data, z.data);
    EXPECT_EQ(b.upper.data, z.data);
  }
}

TEST(ForwardInterval, ContainsRandomPerturbations) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet p = testing::random_params(spec, rng);
    const NormState norm = testing::random_norm(spec, rng);
    const Tensor x = testing::random_tensor(testing::per_sample(spec, 2), rng, 0, 1);
    const auto report = soundness_oracle(spec, p, IntervalTensor::ball(x, 0.05), 1000, 100 + trial, &norm);
    EXPECT_EQ(report.violations, 0u) << format_layers(spec.layers) << " worst " << report.max_violation;
    EXPECT_EQ(report.points, 2000u);
  }
}

TEST(ForwardInterval, NestedRadiiGiveNestedBounds) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet p = testing::random_params(spec, rng);
    const NormState norm = testing::random_norm(spec, rng);
    const Tensor x = testing::random_tensor(testing::per_sample(spec, 2), rng, 0, 1);
    const auto small = forward_interval(spec, p, x, 0.01, &norm);
    const auto large = forward_interval(spec, p, x, 0.1, &norm);
    for (std::size_t i = 0; i < small.lower.size(); ++i) {
      EXPECT_LE(large.lower[i], small.lower[i] + 1e-12);
      EXPECT_GE(large.upper[i], small.upper[i] - 1e-12);
    }
  }
}

TEST(WorstCase, Examples) {
  const IntervalTensor a(Tensor({2}, {3, 1}), Tensor({2}, {4, 2}));
  EXPECT_EQ(worst_case_logits(a, 0).values, (std::vector<double>{3, 2}));
  const IntervalTensor b(Tensor({1, 2}, {2, 1}), Tensor({1, 2}, {3, 4}));
  EXPECT_EQ(worst_case_logits(b, 0).values, (std::vector<double>{2, 4}));
  EXPECT_EQ(worst_case_logits(b, 1).values, (std::vector<double>{3, 1}));
  const auto pt = IntervalTensor::point(Tensor({3}, {0.5, -1, 2}));
  EXPECT_EQ(worst_case_logits(pt, 2).values, (std::vector<double>{0.5, -1, 2}));
  EXPECT_THROW(worst_case_logits(a, 2), ContractError);
}

TEST(Certification, StrictInequality) {
  EXPECT_TRUE(certified(IntervalTensor(Tensor({2}, {3, 1}), Tensor({2}, {4, 2})), 0));
  EXPECT_FALSE(certified(IntervalTensor(Tensor({2}, {2, 1}), Tensor({2}, {3, 2})), 0));
  EXPECT_FALSE(certified(IntervalTensor(Tensor({2}, {3, 1}), Tensor({2}, {4, 2})), 1));
}

// Every point sampled in the box of a certified input keeps the label.
TEST(Certification, SoundUnderDenseSampling) {
  const NetworkSpec spec = mlp(4, 8, 3);
  Rng rng(7);
  std::size_t certified_points = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const ParamSet p = testing::random_params(spec, rng, 2.0);
    const Tensor x = testing::random_tensor({16, 4}, rng, 0, 1);
    const Classifier model{spec, p, nullptr};
    const auto labels = predict(model, x);
    const double eps = 0.03;
    const auto cert = certify(model, x, labels, eps);
    for (std::size_t s = 0; s < 16; ++s) {
      if (!cert[s]) continue;
      ++certified_points;
      Tensor probe({10000, 4});
      for (std::size_t k = 0; k < 10000; ++k) {
        for (std::size_t j = 0; j < 4; ++j) probe[k * 4 + j] = x[s * 4 + j] + uniform(rng, -eps, eps);
      }
      for (std::size_t label : predict(model, probe)) ASSERT_EQ(label, labels[s]);
    }
  }
  EXPECT_GT(certified_points, 20u);
}

TEST(TapeForward, MatchesPureEvaluation) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet p = testing::random_params(spec, rng);
    const NormState norm = testing::random_norm(spec, rng);
    const Tensor x = testing::random_tensor(testing::per_sample(spec, 4), rng, 0, 1);
    for (NormMode mode : {NormMode::frozen, NormMode::batch}) {
      ad::Tape tape;
      const ParamVars vars = constant_params(tape, p);
      const Tensor z = forward_point(tape, spec, vars, tape.constant(x), &norm, mode).value();
      const Tensor want = forward_point(spec, p, x, &norm, mode);
      ASSERT_EQ(z.shape, want.shape);
      for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], want[i], 1e-12);

      const auto box = IntervalTensor::ball(x, 0.02);
      const auto tf =
          forward_interval(tape, spec, vars, tape.constant(box.lower), tape.constant(box.upper), &norm, mode);
      const auto want_b = forward_interval(spec, p, x, 0.02, &norm, mode);
      for (std::size_t i = 0; i < want_b.lower.size(); ++i) {
        EXPECT_NEAR(tf.lower.value()[i], want_b.lower[i], 1e-12);
        EXPECT_NEAR(tf.upper.value()[i], want_b.upper[i], 1e-12);
      }
      EXPECT_EQ(tf.batch_stats.size(), mode == NormMode::batch ? spec.batchnorm_count() : 0u);
    }
  }
}

TEST(TapeForward, FlatParameterNodeSplitsByLayout) {
  const NetworkSpec spec = mlp(3, 4, 2);
  Rng rng(9);
  const ParamSet p = testing::random_params(spec, rng);
  ad::Tape tape;
  ad::Var flat = tape.variable(Tensor(Shape{1, p.layout.total}, p.flat));
  const ParamVars vars = split_params(flat, p.layout);
  EXPECT_EQ(vars.at(2, "bias").value().data, p.tensor(2, "bias").data);
  EXPECT_THROW(vars.at(1, "weight"), ContractError);
}

}  // namespace
}  // namespace shield

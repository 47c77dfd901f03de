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

#include "fixtures.hpp"
#include "shield/errors.hpp"
#include "shield/interval.hpp"

namespace shield {
namespace {

IntervalTensor box(Shape shape, std::vector<double> lo, std::vector<double> hi) {
  return IntervalTensor(Tensor(shape, std::move(lo)), Tensor(shape, std::move(hi)));
}

void expect_bounds(const IntervalTensor& got, const std::vector<double>& lo, const std::vector<double>& hi,
                   double tol = 0.0) {
  ASSERT_EQ(got.lower.size(), lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    EXPECT_NEAR(got.lower[i], lo[i], tol) << "lower " << i;
    EXPECT_NEAR(got.upper[i], hi[i], tol) << "upper " << i;
  }
}

// Hull of W x + b over every corner of the input box.
IntervalTensor corner_hull(const IntervalTensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t n = in.lower.size(), out = w.dim(0);
  Tensor lo(Shape{1, out}, INFINITY), hi(Shape{1, out}, -INFINITY);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    for (std::size_t o = 0; o < out; ++o) {
      double v = b[o];
      for (std::size_t i = 0; i < n; ++i) v += w[o * n + i] * ((mask >> i) & 1 ? in.upper[i] : in.lower[i]);
      lo[o] = std::min(lo[o], v);
      hi[o] = std::max(hi[o], v);
    }
  }
  return IntervalTensor(lo, hi);
}

TEST(IntervalAffine, IdentityWeight) {
  const auto out = interval::affine(box({1, 1}, {0}, {1}), Tensor({1, 1}, {1.0}), Tensor({1}, {0.0}));
  expect_bounds(out, {0}, {1});
}

TEST(IntervalAffine, NegativeWeightFlipsBounds) {
  const auto out = interval::affine(box({1, 1}, {0}, {1}), Tensor({1, 1}, {-2.0}), Tensor({1}, {1.0}));
  expect_bounds(out, {-1}, {1});
}

TEST(IntervalAffine, TwoByTwoMatchesCornerEnumeration) {
  const auto in = box({1, 2}, {0, 2}, {1, 3});
  const Tensor w({2, 2}, {1, -1, 2, 0});
  const Tensor b({2}, {0, 1});
  const auto hull = corner_hull(in, w, b);
  expect_bounds(hull, {-3, 1}, {-1, 3});
  expect_bounds(interval::affine(in, w, b), {-3, 1}, {-1, 3});
}

TEST(IntervalAffine, RandomBoxesEqualCornerHullExactly) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6), out = 1 + uniform_index(rng, 4);
    const Tensor centre = testing::random_tensor({1, n}, rng);
    Tensor radius = testing::random_tensor({1, n}, rng, 0.0, 0.5);
    Tensor lo(centre.shape), hi(centre.shape);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = centre[i] - radius[i];
      hi[i] = centre[i] + radius[i];
    }
    const IntervalTensor in(lo, hi);
    const Tensor w = testing::random_tensor({out, n}, rng), b = testing::random_tensor({out}, rng);
    const auto got = interval::affine(in, w, b);
    const auto want = corner_hull(in, w, b);
    for (std::size_t o = 0; o < out; ++o) {
      EXPECT_NEAR(got.lower[o], want.lower[o], 1e-12);
      EXPECT_NEAR(got.upper[o], want.upper[o], 1e-12);
    }
  }
}

TEST(IntervalAffine, DyadicBoxesEqualCornerHullBitForBit) {
  // Multiples of 1/64 in a small range keep every sum exact, so any ordering agrees.
  Rng rng(55);
  auto dyadic = [&](int lo, int hi) { return static_cast<double>(lo + static_cast<int>(uniform_index(rng, hi - lo + 1))) / 64.0; };
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 5), out = 1 + uniform_index(rng, 3);
    Tensor lo({1, n}), hi({1, n}), w({out, n}), b({out});
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = dyadic(-64, 64);
      hi[i] = lo[i] + 2.0 * dyadic(0, 32);
    }
    for (double& v : w.data) v = dyadic(-64, 64);
    for (double& v : b.data) v = dyadic(-64, 64);
    const IntervalTensor in(lo, hi);
    const auto got = interval::affine(in, w, b);
    const auto want = corner_hull(in, w, b);
    EXPECT_EQ(got.lower.data, want.lower.data);
    EXPECT_EQ(got.upper.data, want.upper.data);
  }
}

TEST(IntervalAffine, ShapeMismatchIsADimensionError) {
  EXPECT_THROW(interval::affine(box({1, 2}, {0, 0}, {1, 1}), Tensor({1, 3}), Tensor({1})), DimensionError);
  EXPECT_THROW(interval::affine(box({1, 2}, {0, 0}, {1, 1}), Tensor({1, 2}), Tensor({2})), DimensionError);
}

TEST(IntervalTensorType, RejectsInvertedBounds) {
  EXPECT_THROW(box({1}, {1}, {0}), ContractError);
  EXPECT_THROW(IntervalTensor(Tensor({1}), Tensor({2})), DimensionError);
  EXPECT_THROW(IntervalTensor::ball(Tensor({1}), -0.1), ContractError);
}

TEST(IntervalTensorType, MidpointAndRadius) {
  const auto b = box({2}, {-1, 2}, {3, 2});
  EXPECT_EQ(b.midpoint().data, (std::vector<double>{1, 2}));
  EXPECT_EQ(b.radius().data, (std::vector<double>{2, 0}));
}

TEST(IntervalConv, OneByOneIdentity) {
  Rng rng(6);
  const Tensor x = testing::random_tensor({1, 1, 3, 3}, rng);
  const auto in = IntervalTensor::ball(x, 0.1);
  const auto out = interval::conv2d(in, Tensor({1, 1, 1, 1}, {1.0}), Tensor({1}, {0.0}), 1);
  // Midpoint-radius round trip, so equal up to one rounding.
  expect_bounds(out, in.lower.data, in.upper.data, 1e-15);
}

TEST(IntervalConv, AllOnesKernelOnPointInput) {
  const auto in = IntervalTensor::point(Tensor({1, 1, 2, 2}, {1, 1, 1, 1}));
  const auto out = interval::conv2d(in, Tensor({1, 1, 2, 2}, {1, 1, 1, 1}), Tensor({1}, {0.0}), 1);
  expect_bounds(out, {4}, {4});
}

TEST(IntervalConv, CheckerKernelMatchesCornerEnumeration) {
  const auto in = IntervalTensor::ball(Tensor({1, 1, 2, 2}), 0.1);
  const Tensor k({1, 1, 2, 2}, {1, -1, -1, 1});
  const auto out = interval::conv2d(in, k, Tensor({1}, {0.0}), 1);
  // The 2x2 valid convolution is the affine map with weight row (1, -1, -1, 1).
  const auto hull = corner_hull(IntervalTensor(in.lower.reshaped({1, 4}), in.upper.reshaped({1, 4})),
                                Tensor({1, 4}, {1, -1, -1, 1}), Tensor({1}, {0.0}));
  expect_bounds(hull, {-0.4}, {0.4}, 1e-15);
  expect_bounds(out, {-0.4}, {0.4}, 1e-15);
}

TEST(IntervalConv, OversizedKernelIsADimensionError) {
  const auto in = IntervalTensor::point(Tensor({1, 1, 2, 2}));
  EXPECT_THROW(interval::conv2d(in, Tensor({1, 1, 3, 3}), Tensor({1}), 1), DimensionError);
}

TEST(IntervalActivation, Examples) {
  expect_bounds(interval::activation(box({1}, {-1}, {2}), Activation::relu), {0}, {2});
  expect_bounds(interval::activation(box({1}, {-3}, {-1}), Activation::relu), {0}, {0});
  expect_bounds(interval::activation(box({1}, {0}, {0}), Activation::sigmoid), {0.5}, {0.5});
}

TEST(IntervalBatchnorm, PointBatchIsStandardBatchnorm) {
  Rng rng(7);
  const Tensor x = testing::random_tensor({5, 3}, rng);
  const Tensor gamma({3}, {1, 1, 1}), shift({3});
  const auto out = interval::batchnorm(IntervalTensor::point(x), gamma, shift, 1e-5);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t b = 0; b < 5; ++b) mean += x[b * 3 + c] / 5.0;
    for (std::size_t b = 0; b < 5; ++b) var += (x[b * 3 + c] - mean) * (x[b * 3 + c] - mean) / 5.0;
    for (std::size_t b = 0; b < 5; ++b) {
      const double want = (x[b * 3 + c] - mean) / std::sqrt(var + 1e-5);
      EXPECT_NEAR(out.lower[b * 3 + c], want, 1e-12);
      EXPECT_EQ(out.lower[b * 3 + c], out.upper[b * 3 + c]);
    }
  }
}

TEST(IntervalBatchnorm, ConcatenatedStatistics) {
  const auto in = box({2, 1}, {0, 2}, {2, 4});
  interval::ChannelStats stats;
  const auto out = interval::batchnorm(in, Tensor({1}, {1.0}), Tensor({1}), 0.0, &stats);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(stats.var[0], 2.0);
  expect_bounds(out, {-std::sqrt(2.0), 0}, {0, std::sqrt(2.0)}, 1e-15);
}

TEST(IntervalBatchnorm, NegativeScaleSwapsBounds) {
  const auto in = box({2, 1}, {0, 2}, {2, 4});
  const auto out = interval::batchnorm(in, Tensor({1}, {-1.0}), Tensor({1}), 0.0);
  expect_bounds(out, {0, -std::sqrt(2.0)}, {std::sqrt(2.0), 0}, 1e-15);
}

TEST(IntervalPool, Examples) {
  // Windows are square, so each pair is laid out as a 2x2 image with duplicates.
  const auto sq = box({1, 1, 2, 2}, {0, 2, 0, 2}, {1, 3, 1, 3});
  expect_bounds(interval::pool(sq, interval::PoolKind::max, 2, 2), {2}, {3});
  expect_bounds(interval::pool(sq, interval::PoolKind::avg, 2, 2), {1}, {2});
  const auto wide = box({1, 1, 2, 2}, {0, 2, 0, 2}, {5, 3, 5, 3});
  const auto out = interval::pool(wide, interval::PoolKind::max, 2, 2);
  expect_bounds(out, {2}, {5});
  // Brute force: the max over sampled points of [0,5] x [2,3] spans the same hull.
  Rng rng(8);
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 20000; ++i) {
    const double v = std::max(uniform(rng, 0, 5), uniform(rng, 2, 3));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, 2.0);
  EXPECT_LE(hi, 5.0);
  EXPECT_NEAR(lo, 2.0, 1e-2);
  EXPECT_NEAR(hi, 5.0, 1e-2);
}

TEST(IntervalPool, OversizedWindowIsADimensionError) {
  EXPECT_THROW(interval::pool(IntervalTensor::point(Tensor({1, 1, 2, 2})), interval::PoolKind::avg, 3, 1),
               DimensionError);
}

// ---- properties over random layers -------------------------------------------

TEST(IntervalProperties, ZeroRadiusEqualsPointOpsBitForBit) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor x = testing::random_tensor({3, 2, 5, 5}, rng);
    const auto in = IntervalTensor::point(x);
    const Tensor k = testing::random_tensor({3, 2, 2, 2}, rng), kb = testing::random_tensor({3}, rng);
    const auto conv = interval::conv2d(in, k, kb, 1);
    const Tensor pc = point::conv2d(x, k, kb, 1);
    EXPECT_EQ(conv.lower.data, pc.data);
    EXPECT_EQ(conv.upper.data, pc.data);

    const Tensor gamma = testing::random_tensor({3}, rng), shift = testing::random_tensor({3}, rng);
    interval::ChannelStats s;
    const auto bn = interval::batchnorm(conv, gamma, shift, 1e-5, &s);
    const Tensor pbn = point::batchnorm(pc, gamma, shift, point::statistics(pc), 1e-5);
    EXPECT_EQ(bn.lower.data, pbn.data);
    EXPECT_EQ(bn.upper.data, pbn.data);

    for (auto kind : {interval::PoolKind::avg, interval::PoolKind::max}) {
      const auto p = interval::pool(bn, kind, 2, 1);
      const Tensor pp = point::pool(pbn, kind, 2, 1);
      EXPECT_EQ(p.lower.data, pp.data);
      EXPECT_EQ(p.upper.data, pp.data);
    }
    const Tensor flat = testing::random_tensor({4, 6}, rng);
    const Tensor w = testing::random_tensor({3, 6}, rng), b = testing::random_tensor({3}, rng);
    const auto aff = interval::affine(IntervalTensor::point(flat), w, b);
    EXPECT_EQ(aff.lower.data, point::affine(flat, w, b).data);
    EXPECT_EQ(aff.upper.data, point::affine(flat, w, b).data);
  }
}

TEST(IntervalProperties, ShrinkingTheBoxNeverWidensBounds) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkSpec spec = testing::random_spec(rng);
    const ParamSet params = testing::random_params(spec, rng);
    const NormState norm = testing::random_norm(spec, rng);
    const Tensor x = testing::random_tensor(testing::per_sample(spec, 2), rng, 0.0, 1.0);
    const double big = uniform(rng, 0.01, 0.3), small = big * uniform01(rng);
    const auto wide = forward_interval_trace(spec, params, IntervalTensor::ball(x, big), &norm);
    const auto narrow = forward_interval_trace(spec, params, IntervalTensor::ball(x, small), &norm);
    for (std::size_t l = 0; l < wide.size(); ++l) {
      for (std::size_t i = 0; i < wide[l].lower.size(); ++i) {
        EXPECT_LE(wide[l].lower[i], narrow[l].lower[i] + 1e-12 * (1 + std::abs(narrow[l].lower[i])));
        EXPECT_GE(wide[l].upper[i], narrow[l].upper[i] - 1e-12 * (1 + std::abs(narrow[l].upper[i])));
      }
    }
  }
}

TEST(IntervalProperties, PoolAndBatchnormKeepValidBoundsWithNegativeScale) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = testing::random_tensor({4, 3, 4, 4}, rng);
    const auto in = IntervalTensor::ball(x, uniform(rng, 0.0, 0.5));
    const Tensor gamma = testing::random_tensor({3}, rng, -2.0, -0.1), shift = testing::random_tensor({3}, rng);
    for (const auto& out : {interval::batchnorm(in, gamma, shift, 1e-5),
                            interval::batchnorm_frozen(in, gamma, shift, interval::concat_statistics(in), 1e-5),
                            interval::pool(in, interval::PoolKind::max, 2, 2),
                            interval::pool(in, interval::PoolKind::avg, 2, 1)}) {
      for (std::size_t i = 0; i < out.lower.size(); ++i) EXPECT_LE(out.lower[i], out.upper[i]);
    }
  }
}

}  // namespace
}  // namespace shield

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

#include "shield/interval.hpp"

#include <algorithm>
#include <cmath>

#include "shield/errors.hpp"
#include "shield/kernels.hpp"

namespace shield {

double activate(Activation kind, double v) {
  switch (kind) {
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-v));
    case Activation::identity:
      return v;
  }
  return v;
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

IntervalTensor::IntervalTensor(Tensor lo, Tensor hi) : lower(std::move(lo)), upper(std::move(hi)) {
  require_same_shape(lower, upper, "interval bounds");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw ContractError("interval lower bound exceeds upper bound");
  }
}

IntervalTensor IntervalTensor::point(const Tensor& x) {
  IntervalTensor out;
  out.lower = x;
  out.upper = x;
  return out;
}

IntervalTensor IntervalTensor::ball(const Tensor& x, double eps) {
  if (!(eps >= 0.0)) throw ContractError("perturbation radius must be non-negative");
  IntervalTensor out;
  out.lower = x;
  out.upper = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.lower[i] = x[i] - eps;
    out.upper[i] = x[i] + eps;
  }
  return out;
}

Tensor IntervalTensor::midpoint() const {
  Tensor m(lower.shape);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (upper[i] + lower[i]) / 2.0;
  return m;
}

Tensor IntervalTensor::radius() const {
  Tensor r(lower.shape);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (upper[i] - lower[i]) / 2.0;
  return r;
}

bool IntervalTensor::contains(const Tensor& x, double tolerance) const {
  if (x.shape != lower.shape) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tolerance || x[i] > upper[i] + tolerance) return false;
  }
  return true;
}

namespace {

void check_affine(const Shape& in, const Tensor& weights, const Tensor& bias) {
  if (in.size() != 2 || weights.rank() != 2 || in[1] != weights.shape[1]) {
    throw DimensionError("affine: input " + to_string(in) + " incompatible with weights " +
                         to_string(weights.shape));
  }
  if (bias.size() != weights.shape[0]) {
    throw DimensionError("affine: bias size " + std::to_string(bias.size()) + " != " +
                         std::to_string(weights.shape[0]));
  }
}

kernels::ConvGeometry conv_geometry(const Shape& in, const Tensor& kernel, const Tensor& bias,
                                    std::size_t stride) {
  if (in.size() != 4 || kernel.rank() != 4 || in[1] != kernel.shape[1]) {
    throw DimensionError("conv2d: input " + to_string(in) + " incompatible with kernel " +
                         to_string(kernel.shape));
  }
  if (kernel.shape[2] > in[2] || kernel.shape[3] > in[3]) {
    throw DimensionError("conv2d: kernel " + to_string(kernel.shape) + " larger than input " +
                         to_string(in));
  }
  if (bias.size() != kernel.shape[0]) throw DimensionError("conv2d: bias size mismatch");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  return {in[0], in[1], in[2], in[3], kernel.shape[0], kernel.shape[2], kernel.shape[3], stride};
}

void add_channel_bias(Tensor& t, const Tensor& bias) {
  const std::size_t channels = bias.size();
  const std::size_t spatial = t.row_size() / channels;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += bias[(i / spatial) % channels];
}

Tensor absolute(const Tensor& t) {
  Tensor out(t.shape);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::abs(t[i]);
  return out;
}

IntervalTensor from_midpoint_radius(const Tensor& mu, const Tensor& r) {
  IntervalTensor out;
  out.lower = mu;
  out.upper = mu;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out.lower[i] = mu[i] - r[i];
    out.upper[i] = mu[i] + r[i];
  }
  return out;
}

std::size_t channel_count(const Shape& s) {
  if (s.size() < 2) throw DimensionError("expected a batched tensor with a channel dim, got " + to_string(s));
  return s[1];
}

void check_channel_vector(const Tensor& v, std::size_t channels, const char* what) {
  if (v.size() != channels) {
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                         std::to_string(channels));
  }
}

// Sum per channel of f(value, channel) in batch-major order.
template <typename F>
void channel_accumulate(const Tensor& t, std::size_t channels, std::vector<double>& acc, F f) {
  const std::size_t spatial = t.row_size() / channels;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::size_t c = (i / spatial) % channels;
    acc[c] += f(t[i], c);
  }
}

Tensor normalise(const Tensor& x, const Tensor& gamma, const Tensor& shift,
                 const interval::ChannelStats& stats, double stability) {
  const std::size_t channels = gamma.size();
  const std::size_t spatial = x.row_size() / channels;
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t c = (i / spatial) % channels;
    const double n = (x[i] - stats.mean[c]) / std::sqrt(stats.var[c] + stability);
    out[i] = gamma[c] * n + shift[c];
  }
  return out;
}

void check_pool(const Shape& in, std::size_t window, std::size_t stride) {
  if (in.size() != 4) throw DimensionError("pool: expected [B,C,H,W], got " + to_string(in));
  if (window == 0 || stride == 0) throw DimensionError("pool: window and stride must be positive");
  if (window > in[2] || window > in[3]) {
    throw DimensionError("pool: window " + std::to_string(window) + " larger than input " + to_string(in));
  }
}

}  // namespace

namespace interval {

IntervalTensor affine(const IntervalTensor& in, const Tensor& weights, const Tensor& bias) {
  check_affine(in.shape(), weights, bias);
  const std::size_t batch = in.shape()[0], fin = weights.shape[1], fout = weights.shape[0];
  const Tensor mu = in.midpoint();
  const Tensor r = in.radius();
  Tensor mu_out(Shape{batch, fout});
  Tensor r_out(Shape{batch, fout});
  kernels::gemm(kernels::Trans::no, kernels::Trans::yes, batch, fout, fin, mu.values(), weights.values(),
                mu_out.values());
  add_channel_bias(mu_out, bias);
  const Tensor w_abs = absolute(weights);
  kernels::gemm(kernels::Trans::no, kernels::Trans::yes, batch, fout, fin, r.values(), w_abs.values(),
                r_out.values());
  return from_midpoint_radius(mu_out, r_out);
}

IntervalTensor conv2d(const IntervalTensor& in, const Tensor& kernel, const Tensor& bias, std::size_t stride) {
  const auto g = conv_geometry(in.shape(), kernel, bias, stride);
  const Shape out_shape{g.batch, g.out_channels, g.out_h(), g.out_w()};
  const Tensor mu = in.midpoint();
  const Tensor r = in.radius();
  Tensor mu_out(out_shape);
  Tensor r_out(out_shape);
  kernels::conv2d_forward(g, mu.values(), kernel.values(), mu_out.values());
  add_channel_bias(mu_out, bias);
  const Tensor k_abs = absolute(kernel);
  kernels::conv2d_forward(g, r.values(), k_abs.values(), r_out.values());
  return from_midpoint_radius(mu_out, r_out);
}

IntervalTensor activation(const IntervalTensor& in, Activation kind) {
  IntervalTensor out = in;
  for (std::size_t i = 0; i < out.lower.size(); ++i) {
    out.lower[i] = activate(kind, in.lower[i]);
    out.upper[i] = activate(kind, in.upper[i]);
  }
  return out;
}

ChannelStats concat_statistics(const IntervalTensor& in) {
  const std::size_t channels = channel_count(in.shape());
  const double count = 2.0 * static_cast<double>(in.lower.size() / channels);
  std::vector<double> sum_lo(channels, 0.0), sum_hi(channels, 0.0);
  auto identity = [](double v, std::size_t) { return v; };
  channel_accumulate(in.lower, channels, sum_lo, identity);
  channel_accumulate(in.upper, channels, sum_hi, identity);
  ChannelStats stats{Tensor(Shape{channels}), Tensor(Shape{channels})};
  for (std::size_t c = 0; c < channels; ++c) stats.mean[c] = (sum_lo[c] + sum_hi[c]) / count;
  std::vector<double> sq_lo(channels, 0.0), sq_hi(channels, 0.0);
  auto centred_sq = [&](double v, std::size_t c) {
    const double d = v - stats.mean[c];
    return d * d;
  };
  channel_accumulate(in.lower, channels, sq_lo, centred_sq);
  channel_accumulate(in.upper, channels, sq_hi, centred_sq);
  for (std::size_t c = 0; c < channels; ++c) stats.var[c] = (sq_lo[c] + sq_hi[c]) / count;
  return stats;
}

IntervalTensor batchnorm_frozen(const IntervalTensor& in, const Tensor& gamma, const Tensor& shift,
                                const ChannelStats& stats, double stability) {
  const std::size_t channels = channel_count(in.shape());
  check_channel_vector(gamma, channels, "batchnorm gamma");
  check_channel_vector(shift, channels, "batchnorm shift");
  check_channel_vector(stats.mean, channels, "batchnorm mean");
  check_channel_vector(stats.var, channels, "batchnorm variance");
  const Tensor a = normalise(in.lower, gamma, shift, stats, stability);
  const Tensor b = normalise(in.upper, gamma, shift, stats, stability);
  IntervalTensor out;
  out.lower = a;
  out.upper = b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.lower[i] = std::min(a[i], b[i]);
    out.upper[i] = std::max(a[i], b[i]);
  }
  return out;
}

IntervalTensor batchnorm(const IntervalTensor& in, const Tensor& gamma, const Tensor& shift,
                         double stability, ChannelStats* stats_out) {
  ChannelStats stats = concat_statistics(in);
  IntervalTensor out = batchnorm_frozen(in, gamma, shift, stats, stability);
  if (stats_out) *stats_out = std::move(stats);
  return out;
}

IntervalTensor pool(const IntervalTensor& in, PoolKind kind, std::size_t window, std::size_t stride) {
  IntervalTensor out;
  out.lower = point::pool(in.lower, kind, window, stride);
  out.upper = point::pool(in.upper, kind, window, stride);
  return out;
}

}  // namespace interval

namespace point {

Tensor affine(const Tensor& in, const Tensor& weights, const Tensor& bias) {
  check_affine(in.shape, weights, bias);
  const std::size_t batch = in.shape[0], fin = weights.shape[1], fout = weights.shape[0];
  Tensor out(Shape{batch, fout});
  kernels::gemm(kernels::Trans::no, kernels::Trans::yes, batch, fout, fin, in.values(), weights.values(),
                out.values());
  add_channel_bias(out, bias);
  return out;
}

Tensor conv2d(const Tensor& in, const Tensor& kernel, const Tensor& bias, std::size_t stride) {
  const auto g = conv_geometry(in.shape, kernel, bias, stride);
  Tensor out(Shape{g.batch, g.out_channels, g.out_h(), g.out_w()});
  kernels::conv2d_forward(g, in.values(), kernel.values(), out.values());
  add_channel_bias(out, bias);
  return out;
}

Tensor activation(const Tensor& in, Activation kind) {
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = activate(kind, in[i]);
  return out;
}

interval::ChannelStats statistics(const Tensor& in) {
  const std::size_t channels = channel_count(in.shape);
  const double count = static_cast<double>(in.size() / channels);
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  channel_accumulate(in, channels, sum, [](double v, std::size_t) { return v; });
  interval::ChannelStats stats{Tensor(Shape{channels}), Tensor(Shape{channels})};
  for (std::size_t c = 0; c < channels; ++c) stats.mean[c] = sum[c] / count;
  channel_accumulate(in, channels, sq, [&](double v, std::size_t c) {
    const double d = v - stats.mean[c];
    return d * d;
  });
  for (std::size_t c = 0; c < channels; ++c) stats.var[c] = sq[c] / count;
  return stats;
}

Tensor batchnorm(const Tensor& in, const Tensor& gamma, const Tensor& shift,
                 const interval::ChannelStats& stats, double stability) {
  const std::size_t channels = channel_count(in.shape);
  check_channel_vector(gamma, channels, "batchnorm gamma");
  check_channel_vector(shift, channels, "batchnorm shift");
  return normalise(in, gamma, shift, stats, stability);
}

Tensor pool(const Tensor& in, interval::PoolKind kind, std::size_t window, std::size_t stride) {
  check_pool(in.shape, window, stride);
  const std::size_t batch = in.shape[0], channels = in.shape[1], h = in.shape[2], w = in.shape[3];
  const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  Tensor out(Shape{batch, channels, oh, ow});
  const double inv = 1.0 / static_cast<double>(window * window);
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const double* src = in.data.data() + plane * h * w;
    double* dst = out.data.data() + plane * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = kind == interval::PoolKind::max ? src[(y * stride) * w + x * stride] : 0.0;
        for (std::size_t ky = 0; ky < window; ++ky) {
          for (std::size_t kx = 0; kx < window; ++kx) {
            const double v = src[(y * stride + ky) * w + x * stride + kx];
            acc = kind == interval::PoolKind::max ? std::max(acc, v) : acc + v;
          }
        }
        dst[y * ow + x] = kind == interval::PoolKind::max ? acc : acc * inv;
      }
    }
  }
  return out;
}

}  // namespace point

}  // namespace shield

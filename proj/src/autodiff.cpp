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

#include "shield/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shield/errors.hpp"
#include "shield/kernels.hpp"

namespace shield::ad {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound autodiff variable");
  return tape_->value(id_);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ContractError("item() on a non-scalar node of shape " + to_string(v.shape));
  return v[0];
}

Tensor Gradients::wrt(Var v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].data.empty()) return grads_[v.id()];
  return Tensor(v.shape());
}

bool Gradients::reached(Var v) const { return v.id() < grads_.size() && !grads_[v.id()].data.empty(); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{"variable", std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node node{op, std::move(value), {}, std::move(fn), false};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractError("autodiff inputs belong to a different tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (!node.backward) node.requires_grad = false;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var output) const {
  if (output.tape() != this) throw ContractError("backward on a variable from another tape");
  if (output.size() != 1) {
    throw ContractError("backward requires a scalar output, got shape " + to_string(output.shape()));
  }
  Gradients result;
  result.grads_.resize(nodes_.size());
  result.shapes_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) result.shapes_[i] = nodes_[i].value.shape;
  if (!nodes_[output.id()].requires_grad) return result;
  result.grads_[output.id()] = Tensor(output.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t step = output.id() + 1; step-- > 0;) {
    const Node& node = nodes_[step];
    Tensor& g = result.grads_[step];
    if (g.data.empty() || !node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        Tensor& gi = result.grads_[in];
        if (gi.data.empty()) gi = Tensor(nodes_[in].value.shape);
        in_grads.push_back(&gi);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(BackwardArgs{g, node.value, in_values, in_grads});
    ++result.visited_;
  }
  return result;
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) throw ContractError("operands belong to different tapes");
  return *a.tape();
}

template <typename F, typename DF>
Var unary(std::string_view op, Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const Var inputs[] = {a};
  return a.tape()->record(op, std::move(y), inputs, [df](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      const Tensor& x = *args.inputs[0];
      for (std::size_t i = 0; i < x.size(); ++i) (*gx)[i] += args.grad[i] * df(x[i], args.output[i]);
    }
  });
}

// df returns {d/da, d/db} at (a, b).
template <typename F, typename DF>
Var binary(std::string_view op, Var a, Var b, F f, DF df) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), std::string(op).c_str());
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i], z[i]);
  const Var inputs[] = {a, b};
  return tape.record(op, std::move(y), inputs, [df](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& z = *args.inputs[1];
    Tensor* gx = args.input_grads[0];
    Tensor* gz = args.input_grads[1];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto [da, db] = df(x[i], z[i]);
      if (gx) (*gx)[i] += args.grad[i] * da;
      if (gz) (*gz)[i] += args.grad[i] * db;
    }
  });
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct ChannelLayout {
  std::size_t channels;
  std::size_t spatial;
};

ChannelLayout channel_layout(const Tensor& a, const Tensor& v, const char* what) {
  if (a.rank() < 2 || a.shape[1] != v.size()) {
    throw DimensionError(std::string(what) + ": cannot broadcast " + to_string(v.shape) + " over " +
                         to_string(a.shape));
  }
  return {a.shape[1], a.row_size() / a.shape[1]};
}

std::size_t channel_of(std::size_t i, const ChannelLayout& l) { return (i / l.spatial) % l.channels; }

void check_labels(std::span<const std::size_t> labels, const Shape& logits) {
  if (logits.size() != 2 || logits[0] != labels.size()) {
    throw DimensionError("cross_entropy: logits " + to_string(logits) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t y : labels) {
    if (y >= logits[1]) throw ContractError("label " + std::to_string(y) + " out of range");
  }
}

}  // namespace

Var add(Var a, Var b) {
  return binary("add", a, b, [](double x, double z) { return x + z; },
                [](double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
  return binary("sub", a, b, [](double x, double z) { return x - z; },
                [](double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
  return binary("mul", a, b, [](double x, double z) { return x * z; },
                [](double x, double z) { return std::pair{z, x}; });
}

Var div(Var a, Var b) {
  return binary("div", a, b, [](double x, double z) { return x / z; },
                [](double x, double z) { return std::pair{1.0 / z, -x / (z * z)}; });
}

Var maximum(Var a, Var b) {
  return binary("maximum", a, b, [](double x, double z) { return std::max(x, z); },
                [](double x, double z) { return x >= z ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0}; });
}

Var minimum(Var a, Var b) {
  return binary("minimum", a, b, [](double x, double z) { return std::min(x, z); },
                [](double x, double z) { return x <= z ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0}; });
}

Var neg(Var a) {
  return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var abs(Var a) {
  return unary("abs", a, [](double x) { return std::abs(x); }, [](double x, double) { return sign(x); });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
  return unary("sqrt", a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return 0.5 / y; });
}

Var activation(Var a, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return relu(a);
    case Activation::sigmoid:
      return sigmoid(a);
    case Activation::identity:
      return a;
  }
  return a;
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return x * factor; },
               [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double c) {
  return unary("add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const Var inputs[] = {a};
  return a.tape()->record("sum", Tensor::scalar(s), inputs, [](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (double& g : gx->data) g += args.grad[0];
    }
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.size());
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const Var inputs[] = {a};
  return a.tape()->record("mean", Tensor::scalar(s / n), inputs, [n](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (double& g : gx->data) g += args.grad[0] / n;
    }
  });
}

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  if (x.rank() != 2 || w.rank() != 2 || x.shape[1] != w.shape[0]) {
    throw DimensionError("matmul: " + to_string(x.shape) + " x " + to_string(w.shape));
  }
  const std::size_t m = x.shape[0], k = x.shape[1], n = w.shape[1];
  Tensor y(Shape{m, n});
  kernels::gemm(kernels::Trans::no, kernels::Trans::no, m, n, k, x.values(), w.values(), y.values());
  const Var inputs[] = {a, b};
  return tape.record("matmul", std::move(y), inputs, [m, n, k](const BackwardArgs& args) {
    using kernels::Trans;
    if (Tensor* ga = args.input_grads[0]) {
      kernels::gemm(Trans::no, Trans::yes, m, k, n, args.grad.values(), args.inputs[1]->values(), ga->values(), true);
    }
    if (Tensor* gb = args.input_grads[1]) {
      kernels::gemm(Trans::yes, Trans::no, k, n, m, args.inputs[0]->values(), args.grad.values(), gb->values(), true);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  if (x.rank() != 2 || w.rank() != 2 || x.shape[1] != w.shape[1]) {
    throw DimensionError("matmul_nt: " + to_string(x.shape) + " x " + to_string(w.shape) + "^T");
  }
  const std::size_t m = x.shape[0], k = x.shape[1], n = w.shape[0];
  Tensor y(Shape{m, n});
  kernels::gemm(kernels::Trans::no, kernels::Trans::yes, m, n, k, x.values(), w.values(), y.values());
  const Var inputs[] = {a, b};
  return tape.record("matmul_nt", std::move(y), inputs, [m, n, k](const BackwardArgs& args) {
    using kernels::Trans;
    // y = x w^T:  dx = g w,  dw = g^T x
    if (Tensor* ga = args.input_grads[0]) {
      kernels::gemm(Trans::no, Trans::no, m, k, n, args.grad.values(), args.inputs[1]->values(), ga->values(), true);
    }
    if (Tensor* gb = args.input_grads[1]) {
      kernels::gemm(Trans::yes, Trans::no, n, k, m, args.grad.values(), args.inputs[0]->values(), gb->values(), true);
    }
  });
}

Var add_channel(Var a, Var v) {
  Tape& tape = tape_of(a, v);
  const auto layout = channel_layout(a.value(), v.value(), "add_channel");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += v.value()[channel_of(i, layout)];
  const Var inputs[] = {a, v};
  return tape.record("add_channel", std::move(y), inputs, [layout](const BackwardArgs& args) {
    if (Tensor* ga = args.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += args.grad[i];
    }
    if (Tensor* gv = args.input_grads[1]) {
      for (std::size_t i = 0; i < args.grad.size(); ++i) (*gv)[channel_of(i, layout)] += args.grad[i];
    }
  });
}

Var sub_channel(Var a, Var v) {
  Tape& tape = tape_of(a, v);
  const auto layout = channel_layout(a.value(), v.value(), "sub_channel");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= v.value()[channel_of(i, layout)];
  const Var inputs[] = {a, v};
  return tape.record("sub_channel", std::move(y), inputs, [layout](const BackwardArgs& args) {
    if (Tensor* ga = args.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += args.grad[i];
    }
    if (Tensor* gv = args.input_grads[1]) {
      for (std::size_t i = 0; i < args.grad.size(); ++i) (*gv)[channel_of(i, layout)] -= args.grad[i];
    }
  });
}

Var mul_channel(Var a, Var v) {
  Tape& tape = tape_of(a, v);
  const auto layout = channel_layout(a.value(), v.value(), "mul_channel");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= v.value()[channel_of(i, layout)];
  const Var inputs[] = {a, v};
  return tape.record("mul_channel", std::move(y), inputs, [layout](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& s = *args.inputs[1];
    if (Tensor* ga = args.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += args.grad[i] * s[channel_of(i, layout)];
    }
    if (Tensor* gv = args.input_grads[1]) {
      for (std::size_t i = 0; i < x.size(); ++i) (*gv)[channel_of(i, layout)] += args.grad[i] * x[i];
    }
  });
}

Var div_channel(Var a, Var v) {
  Tape& tape = tape_of(a, v);
  const auto layout = channel_layout(a.value(), v.value(), "div_channel");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= v.value()[channel_of(i, layout)];
  const Var inputs[] = {a, v};
  return tape.record("div_channel", std::move(y), inputs, [layout](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& s = *args.inputs[1];
    if (Tensor* ga = args.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += args.grad[i] / s[channel_of(i, layout)];
    }
    if (Tensor* gv = args.input_grads[1]) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = s[channel_of(i, layout)];
        (*gv)[channel_of(i, layout)] -= args.grad[i] * x[i] / (d * d);
      }
    }
  });
}

Var channel_mean(Var a) {
  const Tensor& x = a.value();
  if (x.rank() < 2) throw DimensionError("channel_mean: expected [B,C,...], got " + to_string(x.shape));
  const ChannelLayout layout{x.shape[1], x.row_size() / x.shape[1]};
  const double count = static_cast<double>(x.size() / layout.channels);
  Tensor m(Shape{layout.channels});
  for (std::size_t i = 0; i < x.size(); ++i) m[channel_of(i, layout)] += x[i];
  for (double& v : m.data) v /= count;
  const Var inputs[] = {a};
  return a.tape()->record("channel_mean", std::move(m), inputs, [layout, count](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += args.grad[channel_of(i, layout)] / count;
    }
  });
}

Var channel_variance(Var a) {
  const Tensor& x = a.value();
  if (x.rank() < 2) throw DimensionError("channel_variance: expected [B,C,...], got " + to_string(x.shape));
  const ChannelLayout layout{x.shape[1], x.row_size() / x.shape[1]};
  const double count = static_cast<double>(x.size() / layout.channels);
  std::vector<double> m(layout.channels, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) m[channel_of(i, layout)] += x[i];
  for (double& v : m) v /= count;
  Tensor var(Shape{layout.channels});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m[channel_of(i, layout)];
    var[channel_of(i, layout)] += d * d;
  }
  for (double& v : var.data) v /= count;
  const Var inputs[] = {a};
  return a.tape()->record("channel_variance", std::move(var), inputs,
                          [layout, count, m = std::move(m)](const BackwardArgs& args) {
                            if (Tensor* gx = args.input_grads[0]) {
                              const Tensor& x = *args.inputs[0];
                              for (std::size_t i = 0; i < x.size(); ++i) {
                                const std::size_t c = channel_of(i, layout);
                                (*gx)[i] += args.grad[c] * 2.0 * (x[i] - m[c]) / count;
                              }
                            }
                          });
}

Var conv2d(Var x, Var kernel, std::size_t stride) {
  Tape& tape = tape_of(x, kernel);
  const Tensor& in = x.value();
  const Tensor& k = kernel.value();
  if (in.rank() != 4 || k.rank() != 4 || in.shape[1] != k.shape[1]) {
    throw DimensionError("conv2d: input " + to_string(in.shape) + " vs kernel " + to_string(k.shape));
  }
  if (k.shape[2] > in.shape[2] || k.shape[3] > in.shape[3] || stride == 0) {
    throw DimensionError("conv2d: kernel " + to_string(k.shape) + " does not fit input " + to_string(in.shape));
  }
  const kernels::ConvGeometry g{in.shape[0], in.shape[1], in.shape[2], in.shape[3],
                                k.shape[0],  k.shape[2],  k.shape[3],  stride};
  Tensor y(Shape{g.batch, g.out_channels, g.out_h(), g.out_w()});
  kernels::conv2d_forward(g, in.values(), k.values(), y.values());
  const Var inputs[] = {x, kernel};
  return tape.record("conv2d", std::move(y), inputs, [g](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      kernels::conv2d_backward_input(g, args.grad.values(), args.inputs[1]->values(), gx->values());
    }
    if (Tensor* gk = args.input_grads[1]) {
      kernels::conv2d_backward_kernel(g, args.grad.values(), args.inputs[0]->values(), gk->values());
    }
  });
}

Var avg_pool(Var x, std::size_t window, std::size_t stride) {
  const Tensor& in = x.value();
  Tensor y = point::pool(in, interval::PoolKind::avg, window, stride);
  const std::size_t h = in.shape[2], w = in.shape[3], oh = y.shape[2], ow = y.shape[3];
  const std::size_t planes = in.shape[0] * in.shape[1];
  const Var inputs[] = {x};
  return x.tape()->record("avg_pool", std::move(y), inputs, [=](const BackwardArgs& args) {
    Tensor* gx = args.input_grads[0];
    if (!gx) return;
    const double inv = 1.0 / static_cast<double>(window * window);
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double gv = args.grad[(p * oh + oy) * ow + ox] * inv;
          for (std::size_t ky = 0; ky < window; ++ky)
            for (std::size_t kx = 0; kx < window; ++kx) (*gx)[(p * h + oy * stride + ky) * w + ox * stride + kx] += gv;
        }
      }
    }
  });
}

Var max_pool(Var x, std::size_t window, std::size_t stride) {
  const Tensor& in = x.value();
  Tensor y = point::pool(in, interval::PoolKind::max, window, stride);
  const std::size_t h = in.shape[2], w = in.shape[3], oh = y.shape[2], ow = y.shape[3];
  const std::size_t planes = in.shape[0] * in.shape[1];
  // First maximal element of each window receives the gradient.
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (p * h + oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < window; ++ky)
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = (p * h + oy * stride + ky) * w + ox * stride + kx;
            if (in[idx] > in[best]) best = idx;
          }
        argmax[(p * oh + oy) * ow + ox] = best;
      }
    }
  }
  const Var inputs[] = {x};
  return x.tape()->record("max_pool", std::move(y), inputs, [argmax = std::move(argmax)](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < argmax.size(); ++i) (*gx)[argmax[i]] += args.grad[i];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  const Var inputs[] = {a};
  return a.tape()->record("reshape", std::move(y), inputs, [](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += args.grad[i];
    }
  });
}

Var slice(Var a, std::size_t offset, Shape shape) {
  const std::size_t n = numel(shape);
  const Tensor& x = a.value();
  if (offset + n > x.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + n) +
                         ") exceeds " + std::to_string(x.size()) + " elements");
  }
  Tensor y(std::move(shape), std::vector<double>(x.data.begin() + static_cast<std::ptrdiff_t>(offset),
                                                 x.data.begin() + static_cast<std::ptrdiff_t>(offset + n)));
  const Var inputs[] = {a};
  return a.tape()->record("slice", std::move(y), inputs, [offset, n](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < n; ++i) (*gx)[offset + i] += args.grad[i];
    }
  });
}

Var concat_rows(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  if (x.rank() == 0 || x.rank() != z.rank() || !std::equal(x.shape.begin() + 1, x.shape.end(), z.shape.begin() + 1)) {
    throw DimensionError("concat_rows: " + to_string(x.shape) + " and " + to_string(z.shape));
  }
  Shape s = x.shape;
  s[0] += z.shape[0];
  std::vector<double> data = x.data;
  data.insert(data.end(), z.data.begin(), z.data.end());
  const std::size_t split = x.size();
  const Var inputs[] = {a, b};
  return tape.record("concat_rows", Tensor(std::move(s), std::move(data)), inputs, [split](const BackwardArgs& args) {
    if (Tensor* ga = args.input_grads[0]) {
      for (std::size_t i = 0; i < split; ++i) (*ga)[i] += args.grad[i];
    }
    if (Tensor* gb = args.input_grads[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += args.grad[split + i];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  Tensor y = ::shield::slice_rows(a.value(), begin, end);
  const std::size_t offset = begin * a.value().row_size();
  const Var inputs[] = {a};
  return a.tape()->record("slice_rows", std::move(y), inputs, [offset](const BackwardArgs& args) {
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < args.grad.size(); ++i) (*gx)[offset + i] += args.grad[i];
    }
  });
}

Var softmax(Var logits) {
  const Tensor& z = logits.value();
  if (z.rank() != 2) throw DimensionError("softmax expects [B, C], got " + to_string(z.shape));
  const std::size_t rows = z.shape[0], cols = z.shape[1];
  Tensor p(z.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data.data() + r * cols;
    double* pr = p.data.data() + r * cols;
    const double m = *std::max_element(zr, zr + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += (pr[c] = std::exp(zr[c] - m));
    for (std::size_t c = 0; c < cols; ++c) pr[c] /= s;
  }
  const Var inputs[] = {logits};
  return logits.tape()->record("softmax", std::move(p), inputs, [rows, cols](const BackwardArgs& args) {
    Tensor* gz = args.input_grads[0];
    if (!gz) return;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += args.grad[r * cols + c] * args.output[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const double pv = args.output[r * cols + c];
        (*gz)[r * cols + c] += pv * (args.grad[r * cols + c] - dot);
      }
    }
  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Tensor& z = logits.value();
  check_labels(labels, z.shape);
  const std::size_t rows = z.shape[0], cols = z.shape[1];
  Tensor probs(z.shape);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data.data() + r * cols;
    const double m = *std::max_element(zr, zr + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(zr[c] - m);
    const double lse = m + std::log(s);
    total += lse - zr[labels[r]];
    for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] = std::exp(zr[c] - lse);
  }
  std::vector<std::size_t> y(labels.begin(), labels.end());
  const Var inputs[] = {logits};
  return logits.tape()->record(
      "cross_entropy", Tensor::scalar(total / static_cast<double>(rows)), inputs,
      [rows, cols, probs = std::move(probs), y = std::move(y)](const BackwardArgs& args) {
        Tensor* gz = args.input_grads[0];
        if (!gz) return;
        const double g = args.grad[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const double target = c == y[r] ? 1.0 : 0.0;
            (*gz)[r * cols + c] += g * (probs[r * cols + c] - target);
          }
        }
      });
}

}  // namespace shield::ad

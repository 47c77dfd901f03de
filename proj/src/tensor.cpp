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

#include "shield/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "shield/errors.hpp"

namespace shield {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != numel(shape)) {
    throw DimensionError("tensor data size " + std::to_string(data.size()) +
                         " does not match shape " + to_string(shape));
  }
}

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= shape.size()) {
    throw DimensionError("dim " + std::to_string(i) + " out of range for shape " + to_string(shape));
  }
  return shape[i];
}

std::size_t Tensor::row_size() const {
  if (shape.empty()) return 1;
  return numel(Shape(shape.begin() + 1, shape.end()));
}

Tensor Tensor::reshaped(Shape s) const {
  if (numel(s) != data.size()) {
    throw DimensionError("cannot reshape " + to_string(shape) + " to " + to_string(s));
  }
  return Tensor(std::move(s), data);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape != b.shape) {
    throw DimensionError(std::string(what) + ": shape " + to_string(a.shape) + " vs " +
                         to_string(b.shape));
  }
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  if (t.rank() == 0 || begin > end || end > t.shape[0]) {
    throw DimensionError("row slice out of range for shape " + to_string(t.shape));
  }
  const std::size_t row = t.row_size();
  Shape s = t.shape;
  s[0] = end - begin;
  return Tensor(std::move(s), std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(begin * row),
                                                  t.data.begin() + static_cast<std::ptrdiff_t>(end * row)));
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  const std::size_t row = t.row_size();
  Shape s = t.shape;
  s[0] = rows.size();
  Tensor out(std::move(s));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.shape[0]) throw DimensionError("gather row out of range");
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(rows[i] * row), row,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * row));
  }
  return out;
}

}  // namespace shield

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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace shield {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major tensor of doubles. Batched tensors carry the batch as dim 0.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const;

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<double> values() { return data; }
  std::span<const double> values() const { return data; }

  /// Number of elements of one batch row (product of dims 1..rank-1).
  std::size_t row_size() const;

  /// Same data, new shape of equal element count.
  Tensor reshaped(Shape s) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

/// Throws DimensionError with `what` in the message if the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Rows [begin, end) of a batched tensor.
Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end);

/// Gathers the given batch rows into a new tensor.
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);

}  // namespace shield

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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shield/tensor.hpp"

namespace shield {

/// Labeled samples; `x` is [N, ...sample shape] with values in [0, 1].
struct Dataset {
  Tensor x;
  std::vector<std::size_t> y;
  std::size_t classes = 0;

  std::size_t size() const { return y.size(); }
  Shape sample_shape() const { return Shape(x.shape.begin() + 1, x.shape.end()); }
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset head(std::size_t count) const;
  /// Same data with a new per-sample shape of equal element count.
  Dataset reshaped(const Shape& sample_shape) const;
  void validate() const;
};

struct Task {
  std::string name;
  Dataset train;
  Dataset val;
  Dataset test;
  std::size_t classes = 0;
};

struct TaskSequence {
  std::vector<Task> tasks;

  std::size_t size() const { return tasks.size(); }
  Shape sample_shape() const;
  /// Class count shared by every task; throws when they differ.
  std::size_t classes() const;
};

/// Shuffles with `seed` and moves the last `fraction` of the rows to the
/// validation part. Returns (train, validation).
std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction, std::uint64_t seed);

// ---- IDX files ---------------------------------------------------------------

/// Reads an image file (magic 2051) and a label file (magic 2049); images
/// become [N, 1, rows, cols] scaled by 1/255. Class count is max label + 1.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
/// Inverse of load_idx for [N, 1, rows, cols] data, quantizing to round(255 v).
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels, const Dataset& data);

// ---- transforms --------------------------------------------------------------

/// Mean-pools [N, C, H, W] by `factor` in both spatial directions.
Dataset downsample(const Dataset& data, std::size_t factor);

/// Pixel permutation of task `task` (1-based); task 1 is the identity.
std::vector<std::size_t> task_permutation(std::size_t size, std::uint64_t seed, std::size_t task);
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);
/// out[i] = in[perm[i]] for every sample, flattened to [N, features].
Dataset apply_permutation(const Dataset& data, std::span<const std::size_t> perm);

enum class Interpolation { nearest, bilinear };
Interpolation parse_interpolation(std::string_view text);

/// Rotates one [H, W] image counter-clockwise by `degrees` about its center;
/// samples falling outside the canvas read as 0.
std::vector<double> rotate_image(std::span<const double> image, std::size_t height, std::size_t width,
                                 double degrees, Interpolation interp);
Dataset rotate(const Dataset& data, double degrees, Interpolation interp);

// ---- task builders -------------------------------------------------------------

struct TaskSplitConfig {
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
};

TaskSequence build_permuted_tasks(const Dataset& train, const Dataset& test, std::size_t tasks, std::uint64_t seed,
                                  std::size_t downsample_factor, const TaskSplitConfig& split);

TaskSequence build_rotated_tasks(const Dataset& train, const Dataset& test, std::span<const double> angles,
                                 Interpolation interp, const TaskSplitConfig& split);

struct BlobsConfig {
  std::size_t tasks = 3;
  std::size_t classes = 2;
  std::size_t dims = 2;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 100;
  /// Minimum distance between any two cluster centers, in units of `std`.
  double separation = 6.0;
  double std = 0.05;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;
};

/// Isotropic Gaussian clusters, one per class, with centers drawn in
/// [0.15, 0.85]^dims and kept apart across all tasks. Samples are clipped to [0, 1].
TaskSequence gen_blobs_tasks(const BlobsConfig& config);

struct Toy2D {
  Tensor points;  // [N, 2]
  std::vector<std::size_t> labels;
  /// Cross-class index pairs, closest first.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  Dataset dataset() const;
};

/// `per_class` points of each of two classes uniform in [0,1]^2, resampled
/// until opposite-class points are at least `min_gap` apart in the max norm,
/// plus the `pair_count` nearest cross-class pairs (Euclidean, greedy, points
/// may appear in several pairs).
Toy2D gen_toy2d(std::size_t per_class, std::uint64_t seed, std::size_t pair_count, double min_gap = 0.0);

/// Nearest cross-class pairs by Euclidean distance, ties broken by index.
std::vector<std::pair<std::size_t, std::size_t>> nearest_cross_pairs(const Tensor& points,
                                                                     std::span<const std::size_t> labels,
                                                                     std::size_t count);

/// Procedural handwritten-style digits 0-9 on a size x size canvas with random
/// stroke jitter, shift, scale and noise, quantized to multiples of 1/255.
Dataset gen_synthetic_digits(std::size_t count, std::uint64_t seed, std::size_t size = 16);

}  // namespace shield

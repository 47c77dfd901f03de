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

#include "shield/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw DataError(path.string() + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

unsigned char quantize(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  return idx;
}

Task make_task(std::string name, const Dataset& train, Dataset test, const TaskSplitConfig& split, std::size_t index) {
  auto [tr, val] = split_validation(train, split.val_fraction, derive_seed(split.seed, 0x5f1, index));
  Task task;
  task.name = std::move(name);
  task.classes = std::max(train.classes, test.classes);
  tr.classes = val.classes = test.classes = task.classes;
  task.train = std::move(tr);
  task.val = std::move(val);
  task.test = std::move(test);
  return task;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = gather_rows(x, rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(y.at(r));
  out.classes = classes;
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> rows(std::min(count, size()));
  std::iota(rows.begin(), rows.end(), 0);
  return subset(rows);
}

Dataset Dataset::reshaped(const Shape& sample_shape) const {
  Dataset out = *this;
  Shape full{size()};
  full.insert(full.end(), sample_shape.begin(), sample_shape.end());
  out.x = x.reshaped(full);
  return out;
}

void Dataset::validate() const {
  if (x.rank() < 2 || x.dim(0) != y.size()) throw DataError("dataset inputs and labels disagree in count");
  for (double v : x.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("dataset input outside [0, 1]");
  }
  for (std::size_t label : y) {
    if (label >= classes) throw DataError("label " + std::to_string(label) + " out of range");
  }
}

Shape TaskSequence::sample_shape() const {
  if (tasks.empty()) throw DataError("empty task sequence");
  return tasks.front().train.sample_shape();
}

std::size_t TaskSequence::classes() const {
  if (tasks.empty()) throw DataError("empty task sequence");
  for (const auto& t : tasks) {
    if (t.classes != tasks.front().classes) throw DataError("tasks with different class counts are not supported");
  }
  return tasks.front().classes;
}

std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DataError("validation fraction must lie in [0, 1)");
  const auto order = shuffled(data.size(), seed);
  const auto val_count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.size())));
  const std::size_t train_count = data.size() - val_count;
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(train_count)), data.subset(all.subspan(train_count))};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);
  if (read_u32(img, 0, images) != kImageMagic) throw DataError(images.string() + ": bad image magic");
  if (read_u32(lab, 0, labels) != kLabelMagic) throw DataError(labels.string() + ": bad label magic");
  const std::size_t n = read_u32(img, 4, images);
  const std::size_t rows = read_u32(img, 8, images);
  const std::size_t cols = read_u32(img, 12, images);
  const std::size_t nl = read_u32(lab, 4, labels);
  if (n != nl) throw DataError("image count " + std::to_string(n) + " does not match label count " + std::to_string(nl));
  if (img.size() < 16 + n * rows * cols) throw DataError(images.string() + ": truncated pixel data");
  if (lab.size() < 8 + n) throw DataError(labels.string() + ": truncated label data");
  Dataset d;
  d.x = Tensor(Shape{n, 1, rows, cols});
  for (std::size_t i = 0; i < d.x.size(); ++i) d.x[i] = static_cast<double>(img[16 + i]) / 255.0;
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = lab[8 + i];
    d.classes = std::max(d.classes, d.y[i] + 1);
  }
  return d;
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels, const Dataset& data) {
  if (data.x.rank() != 4 || data.x.dim(1) != 1) throw DimensionError("write_idx expects [N, 1, rows, cols]");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw DataError("cannot write idx files");
  put_u32(img, kImageMagic);
  put_u32(img, static_cast<std::uint32_t>(data.size()));
  put_u32(img, static_cast<std::uint32_t>(data.x.dim(2)));
  put_u32(img, static_cast<std::uint32_t>(data.x.dim(3)));
  for (double v : data.x.data) img.put(static_cast<char>(quantize(v)));
  put_u32(lab, kLabelMagic);
  put_u32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t label : data.y) {
    if (label > 255) throw DataError("idx labels must fit in one byte");
    lab.put(static_cast<char>(label));
  }
}

Dataset downsample(const Dataset& data, std::size_t factor) {
  if (factor <= 1) return data;
  if (data.x.rank() != 4) throw DimensionError("downsample expects [N, C, H, W]");
  const std::size_t n = data.x.dim(0), c = data.x.dim(1), h = data.x.dim(2), w = data.x.dim(3);
  if (h % factor || w % factor) throw DimensionError("downsample factor must divide the image size");
  const std::size_t oh = h / factor, ow = w / factor;
  Dataset out;
  out.y = data.y;
  out.classes = data.classes;
  out.x = Tensor(Shape{n, c, oh, ow});
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < factor; ++a) {
          for (std::size_t b = 0; b < factor; ++b) s += data.x[(p * h + i * factor + a) * w + j * factor + b];
        }
        out.x[(p * oh + i) * ow + j] = s * inv;
      }
    }
  }
  return out;
}

std::vector<std::size_t> task_permutation(std::size_t size, std::uint64_t seed, std::size_t task) {
  if (task == 0) throw ContractError("task ids start at 1");
  if (task == 1) {
    std::vector<std::size_t> id(size);
    std::iota(id.begin(), id.end(), 0);
    return id;
  }
  return shuffled(size, derive_seed(seed, 0x9e7, task));
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv.at(perm[i]) = i;
  return inv;
}

Dataset apply_permutation(const Dataset& data, std::span<const std::size_t> perm) {
  const std::size_t n = data.size();
  const std::size_t f = n ? data.x.size() / n : perm.size();
  if (perm.size() != f) throw DimensionError("permutation length does not match the sample size");
  Dataset out;
  out.y = data.y;
  out.classes = data.classes;
  out.x = Tensor(Shape{n, f});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < f; ++i) out.x[s * f + i] = data.x[s * f + perm[i]];
  }
  return out;
}

Interpolation parse_interpolation(std::string_view text) {
  if (text == "nearest") return Interpolation::nearest;
  if (text == "bilinear") return Interpolation::bilinear;
  throw ContractError("unknown interpolation '" + std::string(text) + "'");
}

std::vector<double> rotate_image(std::span<const double> image, std::size_t height, std::size_t width,
                                 double degrees, Interpolation interp) {
  if (image.size() != height * width) throw DimensionError("rotate_image size mismatch");
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  auto at = [&](long r, long c) -> double {
    if (r < 0 || c < 0 || r >= static_cast<long>(height) || c >= static_cast<long>(width)) return 0.0;
    return image[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)];
  };
  std::vector<double> out(image.size());
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      // y axis points up so that positive angles turn counter-clockwise on screen.
      const double dx = static_cast<double>(c) - cx;
      const double dy = cy - static_cast<double>(r);
      const double sc = cx + cs * dx + sn * dy;
      const double sr = cy - (-sn * dx + cs * dy);
      double v;
      if (interp == Interpolation::nearest) {
        v = at(std::lround(sr), std::lround(sc));
      } else {
        const double r0 = std::floor(sr), c0 = std::floor(sc);
        const double fr = sr - r0, fc = sc - c0;
        const long ir = static_cast<long>(r0), ic = static_cast<long>(c0);
        v = (1 - fr) * ((1 - fc) * at(ir, ic) + fc * at(ir, ic + 1)) +
            fr * ((1 - fc) * at(ir + 1, ic) + fc * at(ir + 1, ic + 1));
      }
      out[r * width + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Dataset rotate(const Dataset& data, double degrees, Interpolation interp) {
  if (data.x.rank() != 4) throw DimensionError("rotate expects [N, C, H, W]");
  const std::size_t h = data.x.dim(2), w = data.x.dim(3);
  Dataset out = data;
  const std::size_t planes = data.x.dim(0) * data.x.dim(1);
  for (std::size_t p = 0; p < planes; ++p) {
    std::span<const double> plane(data.x.data.data() + p * h * w, h * w);
    const auto rotated = rotate_image(plane, h, w, degrees, interp);
    std::copy(rotated.begin(), rotated.end(), out.x.data.begin() + static_cast<std::ptrdiff_t>(p * h * w));
  }
  return out;
}

TaskSequence build_permuted_tasks(const Dataset& train, const Dataset& test, std::size_t tasks, std::uint64_t seed,
                                  std::size_t downsample_factor, const TaskSplitConfig& split) {
  if (tasks == 0) throw ContractError("need at least one task");
  const Dataset tr = downsample(train, downsample_factor);
  const Dataset te = downsample(test, downsample_factor);
  const std::size_t features = tr.x.size() / std::max<std::size_t>(tr.size(), 1);
  TaskSequence seq;
  for (std::size_t t = 1; t <= tasks; ++t) {
    const auto perm = task_permutation(features, seed, t);
    seq.tasks.push_back(make_task("permuted-" + std::to_string(t), apply_permutation(tr, perm),
                                  apply_permutation(te, perm), split, t));
  }
  return seq;
}

TaskSequence build_rotated_tasks(const Dataset& train, const Dataset& test, std::span<const double> angles,
                                 Interpolation interp, const TaskSplitConfig& split) {
  if (angles.empty()) throw ContractError("rotated tasks need one angle per task");
  TaskSequence seq;
  for (std::size_t t = 0; t < angles.size(); ++t) {
    seq.tasks.push_back(make_task("rotated-" + std::to_string(t + 1), rotate(train, angles[t], interp),
                                  rotate(test, angles[t], interp), split, t + 1));
  }
  return seq;
}

TaskSequence gen_blobs_tasks(const BlobsConfig& config) {
  if (!(config.separation > 0.0)) throw ContractError("blob separation must be positive");
  if (config.tasks == 0 || config.classes == 0 || config.dims == 0) throw ContractError("empty blob configuration");
  Rng rng(config.seed);
  const std::size_t centers = config.tasks * config.classes;
  const double min_dist = config.separation * config.std;
  std::vector<std::vector<double>> means;
  std::size_t attempts = 0;
  while (means.size() < centers) {
    if (++attempts > 100000) throw DataError("cannot place blob centers with the requested separation");
    std::vector<double> m(config.dims);
    for (double& v : m) v = uniform(rng, 0.15, 0.85);
    const bool ok = std::all_of(means.begin(), means.end(), [&](const auto& other) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < config.dims; ++k) d2 += (m[k] - other[k]) * (m[k] - other[k]);
      return std::sqrt(d2) >= min_dist;
    });
    if (ok) means.push_back(std::move(m));
  }
  auto draw = [&](std::size_t task, std::size_t per_class, Rng& r) {
    Dataset d;
    d.classes = config.classes;
    d.x = Tensor(Shape{per_class * config.classes, config.dims});
    for (std::size_t i = 0; i < per_class * config.classes; ++i) {
      const std::size_t label = i % config.classes;
      const auto& mean = means[task * config.classes + label];
      for (std::size_t k = 0; k < config.dims; ++k) {
        d.x[i * config.dims + k] = std::clamp(mean[k] + config.std * normal(r), 0.0, 1.0);
      }
      d.y.push_back(label);
    }
    return d;
  };
  TaskSequence seq;
  const TaskSplitConfig split{config.val_fraction, config.seed};
  for (std::size_t t = 0; t < config.tasks; ++t) {
    Rng train_rng(derive_seed(config.seed, 0xb10b, 2 * t));
    Rng test_rng(derive_seed(config.seed, 0xb10b, 2 * t + 1));
    Dataset train = draw(t, config.train_per_class, train_rng);
    Dataset test = draw(t, config.test_per_class, test_rng);
    seq.tasks.push_back(make_task("blobs-" + std::to_string(t + 1), train, std::move(test), split, t + 1));
  }
  return seq;
}

Dataset Toy2D::dataset() const {
  Dataset d;
  d.x = points;
  d.y = labels;
  d.classes = 2;
  return d;
}

std::vector<std::pair<std::size_t, std::size_t>> nearest_cross_pairs(const Tensor& points,
                                                                     std::span<const std::size_t> labels,
                                                                     std::size_t count) {
  struct Candidate {
    double dist;
    std::size_t a, b;
  };
  std::vector<Candidate> all;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) continue;
      const double dx = points[2 * i] - points[2 * j], dy = points[2 * i + 1] - points[2 * j + 1];
      all.push_back({std::hypot(dx, dy), i, j});
    }
  }
  if (count > all.size()) {
    throw ContractError("requested " + std::to_string(count) + " pairs but only " + std::to_string(all.size()) +
                        " cross-class pairs exist");
  }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) { return x.dist < y.dist; });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < count; ++k) out.emplace_back(all[k].a, all[k].b);
  return out;
}

Toy2D gen_toy2d(std::size_t per_class, std::uint64_t seed, std::size_t pair_count, double min_gap) {
  if (per_class == 0) throw ContractError("toy needs at least one point per class");
  Rng rng(seed);
  Toy2D toy;
  toy.points = Tensor(Shape{2 * per_class, 2});
  std::size_t attempts = 0;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t label = i % 2;
    for (;;) {
      if (++attempts > 1000000) throw DataError("cannot place toy points with the requested gap");
      const double x = uniform01(rng), y = uniform01(rng);
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        if (toy.labels[j] == label) continue;
        ok = std::max(std::abs(x - toy.points[2 * j]), std::abs(y - toy.points[2 * j + 1])) >= min_gap;
      }
      if (!ok) continue;
      toy.points[2 * i] = x;
      toy.points[2 * i + 1] = y;
      break;
    }
    toy.labels.push_back(label);
  }
  toy.pairs = nearest_cross_pairs(toy.points, toy.labels, pair_count);
  return toy;
}

namespace {

struct Point {
  double x, y;
};
using Stroke = std::vector<Point>;

std::vector<Stroke> circle(double cx, double cy, double rx, double ry, int n = 12) {
  Stroke s;
  for (int k = 0; k <= n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return {s};
}

// Glyphs in a unit box, x to the right and y downwards.
const std::array<std::vector<Stroke>, 10>& glyphs() {
  static const std::array<std::vector<Stroke>, 10> g = [] {
    std::array<std::vector<Stroke>, 10> a;
    a[0] = circle(0.5, 0.5, 0.28, 0.4);
    a[1] = {{{0.35, 0.25}, {0.55, 0.1}, {0.55, 0.9}}};
    a[2] = {{{0.2, 0.3}, {0.35, 0.12}, {0.65, 0.12}, {0.8, 0.3}, {0.75, 0.45}, {0.2, 0.9}, {0.82, 0.9}}};
    a[3] = {{{0.2, 0.15}, {0.75, 0.15}, {0.5, 0.45}, {0.78, 0.6}, {0.75, 0.8}, {0.5, 0.9}, {0.2, 0.82}}};
    a[4] = {{{0.65, 0.9}, {0.65, 0.1}, {0.2, 0.65}, {0.85, 0.65}}};
    a[5] = {{{0.78, 0.1}, {0.28, 0.1}, {0.25, 0.45}, {0.6, 0.42}, {0.8, 0.62}, {0.7, 0.85}, {0.25, 0.88}}};
    a[6] = {{{0.7, 0.1}, {0.35, 0.35}, {0.22, 0.65}, {0.35, 0.9}, {0.68, 0.88}, {0.78, 0.68}, {0.6, 0.5},
             {0.25, 0.6}}};
    a[7] = {{{0.2, 0.1}, {0.8, 0.1}, {0.4, 0.9}}};
    a[8] = circle(0.5, 0.28, 0.2, 0.18);
    a[8].push_back(circle(0.5, 0.7, 0.25, 0.22)[0]);
    a[9] = {{{0.75, 0.4}, {0.4, 0.5}, {0.25, 0.3}, {0.4, 0.1}, {0.7, 0.12}, {0.75, 0.4}, {0.65, 0.9}}};
    return a;
  }();
  return g;
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy);
}

}  // namespace

Dataset gen_synthetic_digits(std::size_t count, std::uint64_t seed, std::size_t size) {
  if (size < 8) throw ContractError("synthetic digits need a canvas of at least 8 pixels");
  Dataset d;
  d.classes = 10;
  d.x = Tensor(Shape{count, 1, size, size});
  d.y.resize(count);
  const double canvas = static_cast<double>(size);
  for (std::size_t n = 0; n < count; ++n) {
    Rng rng(derive_seed(seed, 0xd161, n));
    const std::size_t label = n % 10;
    d.y[n] = label;
    const double angle = uniform(rng, -0.2, 0.2);
    const double shear = uniform(rng, -0.25, 0.25);
    const double sx = uniform(rng, 0.55, 0.75) * canvas, sy = uniform(rng, 0.6, 0.8) * canvas;
    const double tx = canvas / 2 + uniform(rng, -1.2, 1.2), ty = canvas / 2 + uniform(rng, -1.2, 1.2);
    const double width = uniform(rng, 0.55, 1.0) * canvas / 16.0;
    const double cs = std::cos(angle), sn = std::sin(angle);
    std::vector<Stroke> strokes = glyphs()[label];
    for (auto& stroke : strokes) {
      for (auto& p : stroke) {
        const double ux = p.x - 0.5 + 0.03 * normal(rng) + shear * (p.y - 0.5);
        const double uy = p.y - 0.5 + 0.03 * normal(rng);
        p = {tx + sx * (cs * ux - sn * uy), ty + sy * (sn * ux + cs * uy)};
      }
    }
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const Point px{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
        double dist = 1e9;
        for (const auto& stroke : strokes) {
          for (std::size_t k = 0; k + 1 < stroke.size(); ++k) dist = std::min(dist, segment_distance(px, stroke[k], stroke[k + 1]));
        }
        double v = std::clamp(1.0 - std::max(0.0, dist - width) / (0.75 * canvas / 16.0), 0.0, 1.0);
        v = std::clamp(v + 0.05 * normal(rng), 0.0, 1.0);
        d.x[(n * size + r) * size + c] = static_cast<double>(quantize(v)) / 255.0;
      }
    }
  }
  return d;
}

}  // namespace shield

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shield/autodiff.hpp"
#include "shield/errors.hpp"
#include "shield/random.hpp"

namespace shield::ad {

namespace {

double evaluate(const ScalarFn& f, const Tensor& params) {
  Tape tape;
  return f(tape, tape.constant(params)).item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const Tensor& params, double step, std::uint64_t seed,
                           std::size_t max_coords) {
  if (!(step > 0.0)) throw ContractError("grad_check step must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var p = tape.variable(params);
    Var out = f(tape, p);
    analytic = tape.backward(out).wrt(p);
  }
  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords > 0 && max_coords < coords.size()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_coords; ++i) std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);
    coords.resize(max_coords);
  }
  GradCheckReport report;
  Tensor probe = params;
  for (std::size_t c : coords) {
    const double saved = probe[c];
    probe[c] = saved + step;
    const double up = evaluate(f, probe);
    probe[c] = saved - step;
    const double down = evaluate(f, probe);
    probe[c] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[c];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
    if (err > report.max_relative_error || !std::isfinite(err)) {
      report.max_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      report.worst_index = c;
    }
    ++report.checked;
  }
  return report;
}

}  // namespace shield::ad

/*
 * Copyright 2026 The vfgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VFGNN_TESTS_TEST_UTIL_H_
#define VFGNN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "vfgnn/autodiff.h"
#include "vfgnn/rng.h"
#include "vfgnn/tensor.h"

namespace vfgnn::testing {

inline Tensor RandomTensor(size_t rows, size_t cols, Rng& rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = scale * (2.0 * UniformUnit(rng) - 1.0);
  return t;
}

inline double RelativeError(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, ref = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-8);
}

// Central differences of a scalar function of the leaves in `params`.
inline std::vector<Tensor> NumericGradient(const std::function<double()>& f,
                                           std::span<const ad::Var> params, double step) {
  std::vector<Tensor> out;
  for (ad::Var p : params) {
    Tensor g(p.rows(), p.cols());
    auto values = p.mutable_value().values();
    for (size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + step;
      const double up = f();
      values[i] = keep - step;
      const double down = f();
      values[i] = keep;
      g.values()[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Worst relative error between the recorded gradient of `loss_fn` and central
// differences, over all `params`.
inline double GradientCheck(const std::function<ad::Var()>& loss_fn,
                            std::span<const ad::Var> params, double step = 1e-5) {
  const std::vector<Tensor> analytic = ad::GradientValues(loss_fn(), params);
  const std::vector<Tensor> numeric = NumericGradient(
      [&] {
        ad::RecordingScope off(false);
        return loss_fn().value().item();
      },
      params, step);
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i)
    worst = std::max(worst, RelativeError(analytic[i].values(), numeric[i].values()));
  return worst;
}

}  // namespace vfgnn::testing

#endif  // VFGNN_TESTS_TEST_UTIL_H_

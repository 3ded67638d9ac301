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

#include "vfgnn/optim.h"

#include <cmath>

#include "vfgnn/errors.h"

namespace vfgnn {
namespace {

void CheckPairs(std::span<const ad::Var> params, std::span<const Tensor> grads,
                const char* op) {
  if (params.size() != grads.size()) {
    throw DimensionError(std::string(op) + ": parameter/gradient count mismatch");
  }
  for (size_t i = 0; i < params.size(); ++i)
    CheckSameShape(params[i].value(), grads[i], op);
}

}  // namespace

void SgdStep(std::span<const ad::Var> params, std::span<const Tensor> grads,
             double lr) {
  CheckPairs(params, grads, "sgd_step");
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = ad::Var(params[i]).mutable_value();
    for (size_t k = 0; k < p.size(); ++k) p[k] -= lr * grads[i][k];
  }
}

void AdamStep(std::span<const ad::Var> params, std::span<const Tensor> grads,
              AdamState& state, double lr) {
  CheckPairs(params, grads, "adam_step");
  if (state.first_moment.empty()) {
    for (const ad::Var& p : params) {
      state.first_moment.emplace_back(p.rows(), p.cols());
      state.second_moment.emplace_back(p.rows(), p.cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: state tracks a different parameter list");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = ad::Var(params[i]).mutable_value();
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const Tensor& g = grads[i];
    for (size_t k = 0; k < p.size(); ++k) {
      m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
      v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

}  // namespace vfgnn

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

#ifndef VFGNN_OPTIM_H_
#define VFGNN_OPTIM_H_

#include <span>
#include <vector>

#include "vfgnn/autodiff.h"

namespace vfgnn {

// p <- p - lr * g, in place on each parameter leaf.
void SgdStep(std::span<const ad::Var> params, std::span<const Tensor> grads,
             double lr);

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Bias-corrected Adam. The state is sized on first use and must keep
// seeing the same parameter list afterwards.
void AdamStep(std::span<const ad::Var> params, std::span<const Tensor> grads,
              AdamState& state, double lr);

}  // namespace vfgnn

#endif  // VFGNN_OPTIM_H_

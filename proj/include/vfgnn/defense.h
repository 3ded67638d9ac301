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

#ifndef VFGNN_DEFENSE_H_
#define VFGNN_DEFENSE_H_

#include <cstdint>
#include <string>

#include "vfgnn/rng.h"
#include "vfgnn/tensor.h"

namespace vfgnn {

enum class DefenseKind { kNone, kClip, kLaplace, kCompress };

std::string DefenseName(DefenseKind kind);
DefenseKind ParseDefense(const std::string& name);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  // Clip threshold, Laplace scale, or kept fraction, depending on `kind`.
  double parameter = 0.0;
  uint64_t seed = 0;

  // Throws ConfigError when the parameter is outside its domain.
  void Validate() const;
};

// Scales every row r by min(1, tau / ||r||).
Tensor ClipRows(const Tensor& g, double tau);

// Adds Laplace(0, b) noise drawn by inverse CDF from `rng`.
Tensor AddLaplaceNoise(const Tensor& g, double b, Rng& rng);
double SampleLaplace(double b, Rng& rng);

// Keeps the ceil(rho * size) entries of largest magnitude; ties keep the
// lower flat index.
Tensor CompressTopK(const Tensor& g, double rho);

// Applies the configured defense. `stream` selects an independent noise
// stream (the harness passes a per-epoch, per-client index).
Tensor ApplyDefense(const DefenseConfig& config, const Tensor& g, uint64_t stream);

}  // namespace vfgnn

#endif  // VFGNN_DEFENSE_H_

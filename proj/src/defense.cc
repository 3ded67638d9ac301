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

#include "vfgnn/defense.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "vfgnn/errors.h"

namespace vfgnn {

std::string DefenseName(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kClip: return "clip";
    case DefenseKind::kLaplace: return "laplace";
    case DefenseKind::kCompress: return "compress";
  }
  return "?";
}

DefenseKind ParseDefense(const std::string& name) {
  if (name == "none") return DefenseKind::kNone;
  if (name == "clip") return DefenseKind::kClip;
  if (name == "laplace") return DefenseKind::kLaplace;
  if (name == "compress") return DefenseKind::kCompress;
  throw ConfigError("unknown defense '" + name + "'");
}

void DefenseConfig::Validate() const {
  switch (kind) {
    case DefenseKind::kNone:
      return;
    case DefenseKind::kClip:
      if (!(parameter > 0.0)) throw ConfigError("clip threshold must be positive");
      return;
    case DefenseKind::kLaplace:
      if (!(parameter >= 0.0) || !std::isfinite(parameter))
        throw ConfigError("laplace scale must be finite and non-negative");
      return;
    case DefenseKind::kCompress:
      if (!(parameter > 0.0 && parameter <= 1.0))
        throw ConfigError("compression keep-fraction must lie in (0, 1]");
      return;
  }
}

Tensor ClipRows(const Tensor& g, double tau) {
  if (!(tau > 0.0)) throw ConfigError("clip threshold must be positive");
  Tensor out = g;
  for (size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double norm = kernels::L2Norm(row);
    if (norm <= tau * (1.0 + 8 * std::numeric_limits<double>::epsilon())) continue;
    const double s = tau / norm;
    for (double& v : row) v *= s;
  }
  return out;
}

double SampleLaplace(double b, Rng& rng) {
  const double u = UniformUnit(rng) - 0.5;  // [-0.5, 0.5)
  const double tail = std::max(1.0 - 2.0 * std::abs(u), 1e-300);
  return -b * (u < 0.0 ? -1.0 : 1.0) * std::log(tail);
}

Tensor AddLaplaceNoise(const Tensor& g, double b, Rng& rng) {
  if (!(b >= 0.0)) throw ConfigError("laplace scale must be non-negative");
  Tensor out = g;
  if (b == 0.0) return out;
  for (double& v : out.values()) v += SampleLaplace(b, rng);
  return out;
}

Tensor CompressTopK(const Tensor& g, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("compression keep-fraction must lie in (0, 1]");
  const size_t n = g.size();
  const auto keep = std::min<size_t>(
      n, static_cast<size_t>(std::ceil(rho * static_cast<double>(n) - 1e-12)));
  if (keep == n) return g;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto values = g.values();
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  Tensor out(g.rows(), g.cols());
  for (size_t k = 0; k < keep; ++k) out.values()[order[k]] = values[order[k]];
  return out;
}

Tensor ApplyDefense(const DefenseConfig& config, const Tensor& g, uint64_t stream) {
  switch (config.kind) {
    case DefenseKind::kNone:
      return g;
    case DefenseKind::kClip:
      return ClipRows(g, config.parameter);
    case DefenseKind::kLaplace: {
      Rng rng(DeriveSeed(DeriveSeed(config.seed, "laplace"), stream));
      return AddLaplaceNoise(g, config.parameter, rng);
    }
    case DefenseKind::kCompress:
      return CompressTopK(g, config.parameter);
  }
  return g;
}

}  // namespace vfgnn

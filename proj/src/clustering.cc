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

#include "vfgnn/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "vfgnn/errors.h"
#include "vfgnn/rng.h"

namespace vfgnn {
namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

size_t CountDistinctRows(const Tensor& points) {
  std::set<std::vector<double>> rows;
  for (size_t r = 0; r < points.rows(); ++r)
    rows.emplace(points.row(r).begin(), points.row(r).end());
  return rows.size();
}

}  // namespace

KMeansResult KMeans(const Tensor& points, size_t k, uint64_t seed, size_t max_iterations) {
  const size_t n = points.rows(), d = points.cols();
  if (k == 0 || k > n) throw EstimationError("k-means: k must lie in [1, n]");
  Rng rng(seed);
  KMeansResult res;
  res.centroids = Tensor(k, d);

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  size_t first = static_cast<size_t>(UniformUnit(rng) * static_cast<double>(n));
  std::copy(points.row(first).begin(), points.row(first).end(), res.centroids.row(0).begin());
  for (size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points.row(i), res.centroids.row(c - 1)));
      total += nearest[i];
    }
    size_t pick = n - 1;
    if (total > 0.0) {
      double target = UniformUnit(rng) * total;
      for (size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<size_t>(UniformUnit(rng) * static_cast<double>(n));
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), res.centroids.row(c).begin());
  }

  res.assignment.assign(n, 0);
  for (size_t it = 0; it < max_iterations; ++it) {
    bool changed = it == 0;
    res.inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < k; ++c) {
        const double dist = SquaredDistance(points.row(i), res.centroids.row(c));
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      changed |= res.assignment[i] != best;
      res.assignment[i] = best;
      res.inertia += best_d;
    }
    if (!changed) break;
    Tensor sums(k, d);
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      ++counts[res.assignment[i]];
      auto dst = sums.row(res.assignment[i]);
      for (size_t j = 0; j < d; ++j) dst[j] += points(i, j);
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep an empty cluster's centroid where it was
      auto dst = res.centroids.row(c);
      for (size_t j = 0; j < d; ++j) dst[j] = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return res;
}

double MeanSilhouette(const Tensor& points, const std::vector<size_t>& assignment, size_t k) {
  const size_t n = points.rows();
  std::vector<size_t> counts(k, 0);
  for (size_t a : assignment) ++counts[a];
  double total = 0.0;
  std::vector<double> sum_to(k);
  for (size_t i = 0; i < n; ++i) {
    if (counts[assignment[i]] <= 1) continue;
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (size_t j = 0; j < n; ++j)
      if (j != i) sum_to[assignment[j]] += std::sqrt(SquaredDistance(points.row(i), points.row(j)));
    const double a = sum_to[assignment[i]] / static_cast<double>(counts[assignment[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < k; ++c)
      if (c != assignment[i] && counts[c] > 0) b = std::min(b, sum_to[c] / static_cast<double>(counts[c]));
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

ClassCountEstimate EstimateNumClasses(const Tensor& embeddings, const EstimatorOptions& options) {
  if (options.k_min < 2 || options.k_max < options.k_min)
    throw ConfigError("class estimation needs 2 <= k_min <= k_max");
  const size_t distinct = CountDistinctRows(embeddings);
  if (distinct < 3) throw EstimationError("class estimation needs at least 3 distinct embeddings");

  Tensor points = embeddings;
  if (points.rows() > options.max_points) {
    std::vector<size_t> order(points.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(options.seed, "subsample"));
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(options.max_points);
    std::sort(order.begin(), order.end());
    points = Tensor(order.size(), embeddings.cols());
    for (size_t i = 0; i < order.size(); ++i)
      std::copy(embeddings.row(order[i]).begin(), embeddings.row(order[i]).end(),
                points.row(i).begin());
  }

  ClassCountEstimate est;
  double best = -std::numeric_limits<double>::infinity();
  const size_t k_max = std::min(options.k_max, std::min(distinct - 1, points.rows() - 1));
  for (size_t k = options.k_min; k <= options.k_max; ++k) {
    if (k > k_max) {
      est.silhouette.push_back(-1.0);
      continue;
    }
    KMeansResult best_fit;
    best_fit.inertia = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < options.restarts; ++r) {
      KMeansResult fit = KMeans(points, k, DeriveSeed(DeriveSeed(options.seed, k), r));
      if (fit.inertia < best_fit.inertia) best_fit = std::move(fit);
    }
    const double s = MeanSilhouette(points, best_fit.assignment, k);
    est.silhouette.push_back(s);
    if (s > best) {
      best = s;
      est.n_classes = k;
    }
  }
  return est;
}

}  // namespace vfgnn

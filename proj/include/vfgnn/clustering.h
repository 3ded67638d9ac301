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

#ifndef VFGNN_CLUSTERING_H_
#define VFGNN_CLUSTERING_H_

#include <cstdint>
#include <vector>

#include "vfgnn/tensor.h"

namespace vfgnn {

struct KMeansResult {
  std::vector<size_t> assignment;
  Tensor centroids;
  double inertia = 0.0;  // sum of squared distances to the assigned centroid
};

// Lloyd iterations from a k-means++ seeding drawn from `seed`.
KMeansResult KMeans(const Tensor& points, size_t k, uint64_t seed, size_t max_iterations = 100);

// Mean silhouette (Euclidean) of an assignment. Points in singleton
// clusters score 0.
double MeanSilhouette(const Tensor& points, const std::vector<size_t>& assignment, size_t k);

struct ClassCountEstimate {
  size_t n_classes = 0;
  std::vector<double> silhouette;  // indexed by k - k_min
};

struct EstimatorOptions {
  size_t k_min = 2;
  size_t k_max = 16;
  size_t restarts = 10;
  // Larger inputs are subsampled (seeded) to this many rows.
  size_t max_points = 3000;
  uint64_t seed = 0;
};

// k maximizing the mean silhouette of the best-of-`restarts` clustering.
// Throws EstimationError for fewer than 3 distinct rows.
ClassCountEstimate EstimateNumClasses(const Tensor& embeddings, const EstimatorOptions& options);

}  // namespace vfgnn

#endif  // VFGNN_CLUSTERING_H_

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

#ifndef VFGNN_GRAPH_H_
#define VFGNN_GRAPH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vfgnn/sparse.h"
#include "vfgnn/tensor.h"

namespace vfgnn {

using Edge = std::pair<size_t, size_t>;

// Undirected attributed graph for transductive node classification.
// Edges are stored once with first < second; self-loops are never stored.
struct Graph {
  size_t n_nodes = 0;
  std::vector<Edge> edges;
  Tensor features;  // n_nodes x d
  std::vector<int> labels;
  int n_classes = 0;
  std::vector<bool> train_mask;
  std::vector<bool> test_mask;
  std::vector<std::string> node_names;
  std::vector<std::string> class_names;

  size_t feature_dim() const { return features.cols(); }
  std::vector<size_t> TrainIndex() const;
  std::vector<size_t> TestIndex() const;
  // Throws DataError if any structural invariant is broken.
  void Validate() const;
};

struct LoadStats {
  size_t dropped_edges = 0;  // an endpoint missing from the content file
  size_t self_loops = 0;
  size_t duplicate_edges = 0;
};

// Reads the tab-separated content/cites pair. Content lines are
// "id<TAB>f_1 ... f_d<TAB>label"; a content file with no feature columns
// gets one-hot identity features. Masks are left empty for the caller.
Graph LoadPlanetoid(const std::string& content_path, const std::string& cites_path,
                    LoadStats* stats = nullptr);

void WritePlanetoid(const Graph& g, const std::string& content_path,
                    const std::string& cites_path);

// Seeded split assigning round(train_fraction * n) nodes to training and the
// rest to testing.
void AssignRandomSplit(Graph& g, double train_fraction, uint64_t seed);

// Marks the nodes listed (one node name per line) as training nodes and all
// other nodes as test nodes.
void AssignSplitFromFile(Graph& g, const std::string& path);

struct DatasetManifest {
  std::string name;
  std::string content;
  std::string cites;
  std::optional<std::string> train_mask;
};

// Paths inside the manifest are resolved against `base_dir` when relative.
DatasetManifest ReadManifest(const std::string& path);
Graph LoadDataset(const DatasetManifest& manifest, const std::string& base_dir,
                  uint64_t split_seed);

enum class AdjacencyScheme { kGcnSym, kRowMean };

struct NormalizedAdjacency {
  SparseMatrix matrix;
  AdjacencyScheme scheme = AdjacencyScheme::kGcnSym;
};

// Normalizes the partial graph made of `edge_subset` (indices into g.edges)
// plus a self-loop on every node. Degrees count the self-loop.
NormalizedAdjacency NormalizeAdjacency(const Graph& g, std::span<const size_t> edge_subset,
                                       AdjacencyScheme scheme);

// Directed (target, source) pairs for attention: both directions of every
// edge in the subset plus one self-loop per node, sorted by target.
std::vector<Edge> AttentionEdges(const Graph& g, std::span<const size_t> edge_subset);

struct VerticalPartition {
  size_t n_clients = 0;
  std::vector<std::vector<size_t>> feature_slices;
  std::vector<std::vector<size_t>> client_edges;
};

// Contiguous near-equal feature slices and a seeded uniform assignment of
// every edge to exactly one client.
VerticalPartition PartitionVertical(const Graph& g, size_t n_clients, uint64_t seed);

// Features of the given columns as a sparse matrix (bag-of-words features
// are mostly zero, and the first GNN layer consumes them through spmm).
SparseMatrix FeatureSlice(const Graph& g, std::span<const size_t> columns);

struct SbmParams {
  size_t n_nodes = 300;
  int n_classes = 3;
  double p_in = 0.1;
  double p_out = 0.01;
  size_t feature_dim = 16;
  uint64_t seed = 0;
  double train_fraction = 0.7;
};

// Stochastic block model with balanced classes and Gaussian features whose
// class-conditional mean is 1.0 on the columns j with j % n_classes == c.
Graph SynthSbm(const SbmParams& params);

}  // namespace vfgnn

#endif  // VFGNN_GRAPH_H_

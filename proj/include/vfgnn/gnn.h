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

#ifndef VFGNN_GNN_H_
#define VFGNN_GNN_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vfgnn/autodiff.h"
#include "vfgnn/graph.h"

namespace vfgnn {

enum class Arch { kGcn, kSage, kGat };

std::string ArchName(Arch arch);
Arch ParseArch(const std::string& name);

struct GnnConfig {
  Arch arch = Arch::kGcn;
  size_t n_layers = 2;
  size_t hidden_dim = 32;
  size_t n_heads = 1;

  // 2 layers of width 32 for GCN and GraphSAGE; 3 layers with 3 averaged
  // heads for GAT.
  static GnnConfig Defaults(Arch arch);
};

// What one client feeds its local model: its feature columns and its own
// partial graph, normalized for the architecture in use.
struct ClientGraph {
  size_t n_nodes = 0;
  SparseMatrix features;
  NormalizedAdjacency adjacency;
  std::vector<Edge> attention_edges;  // GAT only
};

ClientGraph MakeClientGraph(const Graph& g, std::span<const size_t> feature_columns,
                            std::span<const size_t> edge_subset, Arch arch);

struct GatHead {
  ad::Var weight;       // in x hidden
  ad::Var attn_target;  // hidden x 1, scores the receiving node
  ad::Var attn_source;  // hidden x 1, scores the neighbor
};

struct LocalLayer {
  ad::Var weight;  // GCN / GraphSAGE
  std::vector<GatHead> heads;
};

struct LocalModel {
  GnnConfig config;
  size_t input_dim = 0;
  uint64_t seed = 0;
  std::vector<LocalLayer> layers;

  // Parameter leaves in declaration order: per layer, either W or, per
  // head, (W, a_target, a_source).
  std::vector<ad::Var> Parameters() const;
  size_t ParameterCount() const;
  // Deep copy with fresh parameter leaves.
  LocalModel Clone() const;
};

// Glorot-uniform weights drawn in declaration order from `seed`.
LocalModel InitLocalModel(const GnnConfig& config, size_t input_dim, uint64_t seed);

// A layer consumes either raw sparse features (first layer) or the previous
// layer's output.
using LayerInput = std::variant<SparseMatrix, ad::Var>;

// adj * z * W, then ReLU when `activate`.
ad::Var GcnLayer(const LayerInput& z, const NormalizedAdjacency& adj, const ad::Var& weight,
                 bool activate);
// MEAN over the node and its neighbors, then W, then ReLU when `activate`.
ad::Var SageLayer(const LayerInput& z, const NormalizedAdjacency& adj, const ad::Var& weight,
                  bool activate);

struct GatHeadOutput {
  ad::Var output;     // n x hidden, before head averaging
  ad::Var attention;  // |edges| x 1, aligned with the edge list
};

GatHeadOutput GatHeadForward(const LayerInput& z, std::span<const Edge> edges, size_t n_nodes,
                             const GatHead& head);
// Head-averaged attention layer, then ELU when `activate`.
ad::Var GatLayer(const LayerInput& z, std::span<const Edge> edges, size_t n_nodes,
                 std::span<const GatHead> heads, bool activate);

// Embeddings H_i (n_nodes x hidden_dim). The last layer is not activated.
ad::Var LocalForward(const LocalModel& model, const ClientGraph& graph);

enum class Combine { kConcat, kMean };

std::string CombineName(Combine c);
Combine ParseCombine(const std::string& name);

ad::Var CombineEmbeddings(std::span<const ad::Var> parts, Combine strategy);

struct AffineLayer {
  ad::Var weight;  // in x out
  ad::Var bias;    // 1 x out
};

struct ServerModel {
  std::vector<AffineLayer> layers;

  size_t input_dim() const { return layers.front().weight.rows(); }
  size_t output_dim() const { return layers.back().weight.cols(); }
  std::vector<ad::Var> Parameters() const;
  ServerModel Clone() const;
};

// Widths of an n_layers classifier: hidden layers keep the input width and
// the last hidden layer halves it.
std::vector<size_t> ServerLayerWidths(size_t input_dim, size_t n_classes, size_t n_layers);

ServerModel InitServerModel(size_t input_dim, size_t n_classes, size_t n_layers, uint64_t seed);
ServerModel InitServerModel(std::span<const size_t> widths, uint64_t seed);

// Affine chain with ReLU between layers.
ad::Var Classify(const ServerModel& server, const ad::Var& h);

// Checkpoint: one line of JSON (kind, arch, shapes, seed), a newline, then the
// little-endian float64 payload of every parameter in declaration order.
void WriteCheckpoint(const std::string& path, const LocalModel& model);
LocalModel ReadLocalCheckpoint(const std::string& path);
void WriteCheckpoint(const std::string& path, const ServerModel& model);
ServerModel ReadServerCheckpoint(const std::string& path);

}  // namespace vfgnn

#endif  // VFGNN_GNN_H_

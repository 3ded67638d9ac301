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

#include "vfgnn/gnn.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "vfgnn/errors.h"
#include "vfgnn/ops.h"
#include "vfgnn/rng.h"
#include "byte_io.h"

namespace vfgnn {

using ad::Var;

namespace {

constexpr double kGatSlope = 0.2;

Tensor Glorot(size_t fan_in, size_t fan_out, size_t rows, size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(rows, cols);
  for (double& v : t.values()) v = (2.0 * UniformUnit(rng) - 1.0) * bound;
  return t;
}

Var Project(const LayerInput& z, const Var& weight) {
  if (const auto* s = std::get_if<SparseMatrix>(&z)) {
    if (s->cols() != weight.rows())
      throw DimensionError("layer: input width " + std::to_string(s->cols()) +
                           " != weight rows " + std::to_string(weight.rows()));
    return ad::Spmm(*s, weight);
  }
  return ad::Matmul(std::get<Var>(z), weight);
}

size_t InputRows(const LayerInput& z) {
  if (const auto* s = std::get_if<SparseMatrix>(&z)) return s->rows();
  return std::get<Var>(z).rows();
}

Var Propagate(const LayerInput& z, const NormalizedAdjacency& adj, const Var& weight,
              bool activate) {
  if (adj.matrix.cols() != InputRows(z))
    throw DimensionError("layer: adjacency size != input rows");
  // adj * (z * W) equals (adj * z) * W and keeps the sparse input on the spmm path.
  Var out = ad::Spmm(adj.matrix, Project(z, weight));
  return activate ? ad::Relu(out) : out;
}

void WritePayload(const std::string& path, const nlohmann::json& header,
                  const std::vector<Var>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path);
  os << header.dump() << '\n';
  for (const Var& p : params)
    for (double v : p.value().values()) byte_io::WriteF64(os, v);
  if (!os) throw DataError("failed writing checkpoint " + path);
}

struct RawCheckpoint {
  nlohmann::json header;
  std::vector<Tensor> tensors;
};

RawCheckpoint ReadPayload(const std::string& path, const char* kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("checkpoint: missing header", 0);
  RawCheckpoint raw;
  try {
    raw.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what(), 0);
  }
  if (raw.header.value("kind", "") != kind)
    throw FormatError(std::string("checkpoint: expected kind ") + kind, 0);
  uint64_t offset = line.size() + 1;
  for (const auto& shape : raw.header.at("shapes")) {
    const size_t r = shape.at(0).get<size_t>();
    const size_t c = shape.at(1).get<size_t>();
    Tensor t(r, c);
    for (double& v : t.values()) v = byte_io::ReadF64(is, offset, "checkpoint payload");
    raw.tensors.push_back(std::move(t));
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError("checkpoint: trailing bytes", offset);
  return raw;
}

nlohmann::json Shapes(const std::vector<Var>& params) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const Var& p : params) shapes.push_back({p.rows(), p.cols()});
  return shapes;
}

}  // namespace

std::string ArchName(Arch arch) {
  switch (arch) {
    case Arch::kGcn: return "gcn";
    case Arch::kSage: return "sage";
    case Arch::kGat: return "gat";
  }
  return "?";
}

Arch ParseArch(const std::string& name) {
  if (name == "gcn") return Arch::kGcn;
  if (name == "sage" || name == "graphsage") return Arch::kSage;
  if (name == "gat") return Arch::kGat;
  throw ConfigError("unknown architecture '" + name + "'");
}

GnnConfig GnnConfig::Defaults(Arch arch) {
  GnnConfig c;
  c.arch = arch;
  c.hidden_dim = 32;
  if (arch == Arch::kGat) {
    c.n_layers = 3;
    c.n_heads = 3;
  } else {
    c.n_layers = 2;
    c.n_heads = 1;
  }
  return c;
}

ClientGraph MakeClientGraph(const Graph& g, std::span<const size_t> feature_columns,
                            std::span<const size_t> edge_subset, Arch arch) {
  ClientGraph cg;
  cg.n_nodes = g.n_nodes;
  cg.features = FeatureSlice(g, feature_columns);
  if (arch == Arch::kGat) {
    cg.attention_edges = AttentionEdges(g, edge_subset);
  } else {
    cg.adjacency = NormalizeAdjacency(
        g, edge_subset, arch == Arch::kGcn ? AdjacencyScheme::kGcnSym : AdjacencyScheme::kRowMean);
  }
  return cg;
}

std::vector<Var> LocalModel::Parameters() const {
  std::vector<Var> out;
  for (const LocalLayer& layer : layers) {
    if (config.arch == Arch::kGat) {
      for (const GatHead& h : layer.heads) {
        out.push_back(h.weight);
        out.push_back(h.attn_target);
        out.push_back(h.attn_source);
      }
    } else {
      out.push_back(layer.weight);
    }
  }
  return out;
}

size_t LocalModel::ParameterCount() const {
  size_t n = 0;
  for (const Var& p : Parameters()) n += p.value().size();
  return n;
}

LocalModel LocalModel::Clone() const {
  LocalModel copy = *this;
  for (LocalLayer& layer : copy.layers) {
    if (layer.weight.defined()) layer.weight = Var::Parameter(layer.weight.value());
    for (GatHead& h : layer.heads) {
      h.weight = Var::Parameter(h.weight.value());
      h.attn_target = Var::Parameter(h.attn_target.value());
      h.attn_source = Var::Parameter(h.attn_source.value());
    }
  }
  return copy;
}

LocalModel InitLocalModel(const GnnConfig& config, size_t input_dim, uint64_t seed) {
  if (config.n_layers == 0 || config.hidden_dim == 0)
    throw ConfigError("local model needs at least one layer of positive width");
  if (config.arch == Arch::kGat && config.n_heads == 0)
    throw ConfigError("attention model needs at least one head");
  LocalModel m;
  m.config = config;
  m.input_dim = input_dim;
  m.seed = seed;
  Rng rng(seed);
  size_t in = input_dim;
  for (size_t k = 0; k < config.n_layers; ++k) {
    const size_t out = config.hidden_dim;
    LocalLayer layer;
    if (config.arch == Arch::kGat) {
      for (size_t p = 0; p < config.n_heads; ++p) {
        GatHead h;
        h.weight = Var::Parameter(Glorot(in, out, in, out, rng));
        h.attn_target = Var::Parameter(Glorot(2 * out, 1, out, 1, rng));
        h.attn_source = Var::Parameter(Glorot(2 * out, 1, out, 1, rng));
        layer.heads.push_back(std::move(h));
      }
    } else {
      layer.weight = Var::Parameter(Glorot(in, out, in, out, rng));
    }
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

Var GcnLayer(const LayerInput& z, const NormalizedAdjacency& adj, const Var& weight,
             bool activate) {
  if (adj.scheme != AdjacencyScheme::kGcnSym)
    throw ConfigError("gcn layer needs symmetric-normalized adjacency");
  return Propagate(z, adj, weight, activate);
}

Var SageLayer(const LayerInput& z, const NormalizedAdjacency& adj, const Var& weight,
              bool activate) {
  if (adj.scheme != AdjacencyScheme::kRowMean)
    throw ConfigError("sage layer needs row-mean adjacency");
  return Propagate(z, adj, weight, activate);
}

GatHeadOutput GatHeadForward(const LayerInput& z, std::span<const Edge> edges, size_t n_nodes,
                             const GatHead& head) {
  if (InputRows(z) != n_nodes) throw DimensionError("gat: input rows != node count");
  std::vector<size_t> targets(edges.size()), sources(edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    targets[e] = edges[e].first;
    sources[e] = edges[e].second;
    if (targets[e] >= n_nodes || sources[e] >= n_nodes)
      throw DimensionError("gat: edge endpoint out of range");
  }
  const Var wh = Project(z, head.weight);
  const Var score_t = ad::Matmul(wh, head.attn_target);
  const Var score_s = ad::Matmul(wh, head.attn_source);
  const Var scores = ad::LeakyRelu(
      ad::Add(ad::GatherRows(score_t, targets), ad::GatherRows(score_s, sources)), kGatSlope);

  // Per-target max shift; a constant, so it does not change the softmax.
  std::vector<double> row_max(n_nodes, -std::numeric_limits<double>::infinity());
  for (size_t e = 0; e < edges.size(); ++e)
    row_max[targets[e]] = std::max(row_max[targets[e]], scores.value()(e, 0));
  Tensor shift(edges.size(), 1);
  for (size_t e = 0; e < edges.size(); ++e) shift(e, 0) = row_max[targets[e]];

  const Var ex = ad::Exp(ad::Sub(scores, Var::Constant(std::move(shift))));
  const Var denom = ad::ScatterAddRows(ex, targets, n_nodes);
  const Var alpha = ad::Mul(ex, ad::Reciprocal(ad::GatherRows(denom, targets)));
  const Var messages =
      ad::Mul(ad::BroadcastCols(alpha, wh.cols()), ad::GatherRows(wh, sources));
  return {ad::ScatterAddRows(messages, targets, n_nodes), alpha};
}

Var GatLayer(const LayerInput& z, std::span<const Edge> edges, size_t n_nodes,
             std::span<const GatHead> heads, bool activate) {
  if (heads.empty()) throw ConfigError("gat layer without heads");
  Var sum;
  for (const GatHead& h : heads) {
    Var out = GatHeadForward(z, edges, n_nodes, h).output;
    sum = sum.defined() ? ad::Add(sum, out) : out;
  }
  Var mean = heads.size() == 1 ? sum : ad::Scale(sum, 1.0 / static_cast<double>(heads.size()));
  return activate ? ad::Elu(mean) : mean;
}

Var LocalForward(const LocalModel& model, const ClientGraph& graph) {
  if (model.input_dim != graph.features.cols())
    throw DimensionError("local model input width " + std::to_string(model.input_dim) +
                         " != feature slice width " + std::to_string(graph.features.cols()));
  LayerInput z = graph.features;
  const size_t n_layers = model.layers.size();
  for (size_t k = 0; k < n_layers; ++k) {
    const bool activate = k + 1 < n_layers;
    const LocalLayer& layer = model.layers[k];
    switch (model.config.arch) {
      case Arch::kGcn:
        z = GcnLayer(z, graph.adjacency, layer.weight, activate);
        break;
      case Arch::kSage:
        z = SageLayer(z, graph.adjacency, layer.weight, activate);
        break;
      case Arch::kGat:
        z = GatLayer(z, graph.attention_edges, graph.n_nodes, layer.heads, activate);
        break;
    }
  }
  return std::get<Var>(z);
}

std::string CombineName(Combine c) { return c == Combine::kConcat ? "concat" : "mean"; }

Combine ParseCombine(const std::string& name) {
  if (name == "concat") return Combine::kConcat;
  if (name == "mean") return Combine::kMean;
  throw ConfigError("unknown combine strategy '" + name + "'");
}

Var CombineEmbeddings(std::span<const Var> parts, Combine strategy) {
  if (parts.empty()) throw DimensionError("combine: no embeddings");
  for (const Var& p : parts)
    if (p.rows() != parts[0].rows()) throw DimensionError("combine: unequal node counts");
  if (parts.size() == 1) return parts[0];
  if (strategy == Combine::kConcat) return ad::ConcatCols(parts);
  Var sum = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].cols() != parts[0].cols())
      throw DimensionError("combine: mean needs equal embedding widths");
    sum = ad::Add(sum, parts[i]);
  }
  return ad::Scale(sum, 1.0 / static_cast<double>(parts.size()));
}

std::vector<Var> ServerModel::Parameters() const {
  std::vector<Var> out;
  for (const AffineLayer& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

ServerModel ServerModel::Clone() const {
  ServerModel copy;
  for (const AffineLayer& l : layers)
    copy.layers.push_back({Var::Parameter(l.weight.value()), Var::Parameter(l.bias.value())});
  return copy;
}

std::vector<size_t> ServerLayerWidths(size_t input_dim, size_t n_classes, size_t n_layers) {
  if (n_layers == 0) throw ConfigError("server model needs at least one layer");
  std::vector<size_t> widths{input_dim};
  for (size_t k = 0; k + 1 < n_layers; ++k) {
    const bool last_hidden = k + 2 == n_layers;
    widths.push_back(last_hidden ? std::max<size_t>(1, input_dim / 2) : input_dim);
  }
  widths.push_back(n_classes);
  return widths;
}

ServerModel InitServerModel(std::span<const size_t> widths, uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("server model needs at least one layer");
  ServerModel s;
  Rng rng(seed);
  for (size_t k = 0; k + 1 < widths.size(); ++k) {
    const size_t in = widths[k], out = widths[k + 1];
    s.layers.push_back({Var::Parameter(Glorot(in, out, in, out, rng)),
                        Var::Parameter(Tensor(1, out, 0.0))});
  }
  return s;
}

ServerModel InitServerModel(size_t input_dim, size_t n_classes, size_t n_layers, uint64_t seed) {
  const std::vector<size_t> widths = ServerLayerWidths(input_dim, n_classes, n_layers);
  return InitServerModel(widths, seed);
}

Var Classify(const ServerModel& server, const Var& h) {
  if (server.layers.empty()) throw ConfigError("server model has no layers");
  if (h.cols() != server.input_dim())
    throw DimensionError("classify: embedding width " + std::to_string(h.cols()) +
                         " != server input width " + std::to_string(server.input_dim()));
  Var x = h;
  for (size_t k = 0; k < server.layers.size(); ++k) {
    x = ad::AddRowVector(ad::Matmul(x, server.layers[k].weight), server.layers[k].bias);
    if (k + 1 < server.layers.size()) x = ad::Relu(x);
  }
  return x;
}

void WriteCheckpoint(const std::string& path, const LocalModel& model) {
  const std::vector<Var> params = model.Parameters();
  nlohmann::json header = {{"kind", "local"},
                           {"arch", ArchName(model.config.arch)},
                           {"n_layers", model.config.n_layers},
                           {"hidden_dim", model.config.hidden_dim},
                           {"n_heads", model.config.n_heads},
                           {"input_dim", model.input_dim},
                           {"seed", model.seed},
                           {"shapes", Shapes(params)}};
  WritePayload(path, header, params);
}

LocalModel ReadLocalCheckpoint(const std::string& path) {
  RawCheckpoint raw = ReadPayload(path, "local");
  GnnConfig cfg;
  cfg.arch = ParseArch(raw.header.at("arch").get<std::string>());
  cfg.n_layers = raw.header.at("n_layers").get<size_t>();
  cfg.hidden_dim = raw.header.at("hidden_dim").get<size_t>();
  cfg.n_heads = raw.header.at("n_heads").get<size_t>();
  LocalModel m = InitLocalModel(cfg, raw.header.at("input_dim").get<size_t>(),
                                raw.header.at("seed").get<uint64_t>());
  std::vector<Var> params = m.Parameters();
  if (params.size() != raw.tensors.size())
    throw FormatError("checkpoint: parameter count mismatch", 0);
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value().SameShape(raw.tensors[i]))
      throw FormatError("checkpoint: parameter shape mismatch", 0);
    params[i].mutable_value() = raw.tensors[i];
  }
  return m;
}

void WriteCheckpoint(const std::string& path, const ServerModel& model) {
  const std::vector<Var> params = model.Parameters();
  nlohmann::json header = {{"kind", "server"}, {"shapes", Shapes(params)}};
  WritePayload(path, header, params);
}

ServerModel ReadServerCheckpoint(const std::string& path) {
  RawCheckpoint raw = ReadPayload(path, "server");
  if (raw.tensors.empty() || raw.tensors.size() % 2 != 0)
    throw FormatError("checkpoint: server parameters must come in weight/bias pairs", 0);
  ServerModel s;
  for (size_t i = 0; i < raw.tensors.size(); i += 2)
    s.layers.push_back(
        {Var::Parameter(std::move(raw.tensors[i])), Var::Parameter(std::move(raw.tensors[i + 1]))});
  return s;
}

}  // namespace vfgnn

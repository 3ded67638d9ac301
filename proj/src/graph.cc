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

#include "vfgnn/graph.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "vfgnn/errors.h"
#include "vfgnn/rng.h"

namespace vfgnn {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, '\t')) out.push_back(field);
  return out;
}

std::string StripCr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::vector<size_t> MaskIndex(const std::vector<bool>& mask) {
  std::vector<size_t> out;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

}  // namespace

std::vector<size_t> Graph::TrainIndex() const { return MaskIndex(train_mask); }
std::vector<size_t> Graph::TestIndex() const { return MaskIndex(test_mask); }

void Graph::Validate() const {
  if (features.rows() != n_nodes) throw DataError("graph: feature rows != node count");
  if (labels.size() != n_nodes) throw DataError("graph: label count != node count");
  for (int y : labels)
    if (y < 0 || y >= n_classes) throw DataError("graph: label outside [0, n_classes)");
  std::set<Edge> seen;
  for (const Edge& e : edges) {
    if (e.first >= n_nodes || e.second >= n_nodes) throw DataError("graph: edge endpoint out of range");
    if (e.first == e.second) throw DataError("graph: stored self-loop");
    Edge key = std::minmax(e.first, e.second);
    if (!seen.insert(key).second) throw DataError("graph: duplicate undirected edge");
  }
  if (!train_mask.empty() || !test_mask.empty()) {
    if (train_mask.size() != n_nodes || test_mask.size() != n_nodes)
      throw DataError("graph: mask length != node count");
    for (size_t i = 0; i < n_nodes; ++i)
      if (train_mask[i] && test_mask[i]) throw DataError("graph: train and test masks overlap");
  }
}

Graph LoadPlanetoid(const std::string& content_path, const std::string& cites_path,
                    LoadStats* stats) {
  std::ifstream content(content_path);
  if (!content) throw DataError("cannot open content file " + content_path);

  Graph g;
  std::unordered_map<std::string, size_t> node_index;
  std::unordered_map<std::string, int> class_index;
  std::vector<std::vector<double>> rows;
  std::optional<size_t> width;
  std::string line;
  size_t line_no = 0;
  while (std::getline(content, line)) {
    ++line_no;
    line = StripCr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() < 2) throw ParseError(content_path + ": expected id, features, label", line_no);
    const size_t d = fields.size() - 2;
    if (width && *width != d) throw ParseError(content_path + ": inconsistent feature count", line_no);
    width = d;
    std::vector<double> row(d);
    for (size_t j = 0; j < d; ++j) {
      const std::string& f = fields[j + 1];
      char* end = nullptr;
      row[j] = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size())
        throw ParseError(content_path + ": bad feature value '" + f + "'", line_no);
    }
    if (!node_index.emplace(fields.front(), g.n_nodes).second)
      throw ParseError(content_path + ": duplicate node id " + fields.front(), line_no);
    auto [cls, inserted] = class_index.emplace(fields.back(), static_cast<int>(class_index.size()));
    if (inserted) g.class_names.push_back(fields.back());
    g.labels.push_back(cls->second);
    g.node_names.push_back(fields.front());
    rows.push_back(std::move(row));
    ++g.n_nodes;
  }
  if (g.n_nodes == 0) throw DataError("content file has no nodes: " + content_path);
  g.n_classes = static_cast<int>(class_index.size());

  if (*width == 0) {
    g.features = Tensor::Identity(g.n_nodes);
  } else {
    g.features = Tensor(g.n_nodes, *width);
    for (size_t i = 0; i < g.n_nodes; ++i)
      std::copy(rows[i].begin(), rows[i].end(), g.features.row(i).begin());
  }

  std::ifstream cites(cites_path);
  if (!cites) throw DataError("cannot open cites file " + cites_path);
  LoadStats local;
  std::set<Edge> seen;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    line = StripCr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2) throw ParseError(cites_path + ": expected two node ids", line_no);
    auto a = node_index.find(fields[0]);
    auto b = node_index.find(fields[1]);
    if (a == node_index.end() || b == node_index.end()) {
      ++local.dropped_edges;
      continue;
    }
    if (a->second == b->second) {
      ++local.self_loops;
      continue;
    }
    Edge key = std::minmax(a->second, b->second);
    if (!seen.insert(key).second) {
      ++local.duplicate_edges;
      continue;
    }
    g.edges.push_back(key);
  }
  if (stats) *stats = local;
  g.Validate();
  return g;
}

void WritePlanetoid(const Graph& g, const std::string& content_path,
                    const std::string& cites_path) {
  std::ofstream content(content_path);
  if (!content) throw DataError("cannot write " + content_path);
  content << std::setprecision(17);
  auto name = [&g](size_t i) { return g.node_names.empty() ? std::to_string(i) : g.node_names[i]; };
  auto cls = [&g](int c) {
    return g.class_names.empty() ? "c" + std::to_string(c) : g.class_names[static_cast<size_t>(c)];
  };
  for (size_t i = 0; i < g.n_nodes; ++i) {
    content << name(i);
    for (double v : g.features.row(i)) content << '\t' << v;
    content << '\t' << cls(g.labels[i]) << '\n';
  }
  std::ofstream cites(cites_path);
  if (!cites) throw DataError("cannot write " + cites_path);
  for (const Edge& e : g.edges) cites << name(e.first) << '\t' << name(e.second) << '\n';
}

void AssignRandomSplit(Graph& g, double train_fraction, uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<size_t> order(g.n_nodes);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(g.n_nodes)));
  g.train_mask.assign(g.n_nodes, false);
  g.test_mask.assign(g.n_nodes, false);
  for (size_t i = 0; i < g.n_nodes; ++i) (i < n_train ? g.train_mask : g.test_mask)[order[i]] = true;
}

void AssignSplitFromFile(Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file " + path);
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < g.n_nodes; ++i)
    index.emplace(g.node_names.empty() ? std::to_string(i) : g.node_names[i], i);
  g.train_mask.assign(g.n_nodes, false);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = StripCr(line);
    if (line.empty()) continue;
    auto it = index.find(line);
    if (it == index.end()) throw ParseError(path + ": unknown node id " + line, line_no);
    g.train_mask[it->second] = true;
  }
  g.test_mask.assign(g.n_nodes, false);
  for (size_t i = 0; i < g.n_nodes; ++i) g.test_mask[i] = !g.train_mask[i];
}

DatasetManifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.content = j.at("content").get<std::string>();
    m.cites = j.at("cites").get<std::string>();
    if (j.contains("train_mask") && !j["train_mask"].is_null())
      m.train_mask = j["train_mask"].get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path + ": " + e.what());
  }
}

Graph LoadDataset(const DatasetManifest& manifest, const std::string& base_dir,
                  uint64_t split_seed) {
  namespace fs = std::filesystem;
  auto resolve = [&base_dir](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.string() : (fs::path(base_dir) / path).string();
  };
  Graph g = LoadPlanetoid(resolve(manifest.content), resolve(manifest.cites));
  if (manifest.train_mask) {
    AssignSplitFromFile(g, resolve(*manifest.train_mask));
  } else {
    AssignRandomSplit(g, 0.7, split_seed);
  }
  return g;
}

NormalizedAdjacency NormalizeAdjacency(const Graph& g, std::span<const size_t> edge_subset,
                                       AdjacencyScheme scheme) {
  std::vector<double> degree(g.n_nodes, 1.0);
  for (size_t k : edge_subset) {
    const Edge& e = g.edges.at(k);
    degree[e.first] += 1.0;
    degree[e.second] += 1.0;
  }
  auto weight = [&](size_t v, size_t u) {
    return scheme == AdjacencyScheme::kGcnSym ? 1.0 / std::sqrt(degree[v] * degree[u])
                                              : 1.0 / degree[v];
  };
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(g.n_nodes + 2 * edge_subset.size());
  for (size_t v = 0; v < g.n_nodes; ++v) entries.push_back({v, v, weight(v, v)});
  for (size_t k : edge_subset) {
    const auto [a, b] = g.edges[k];
    entries.push_back({a, b, weight(a, b)});
    entries.push_back({b, a, weight(b, a)});
  }
  return {SparseMatrix(g.n_nodes, g.n_nodes, std::move(entries)), scheme};
}

std::vector<Edge> AttentionEdges(const Graph& g, std::span<const size_t> edge_subset) {
  std::vector<Edge> out;
  out.reserve(g.n_nodes + 2 * edge_subset.size());
  for (size_t v = 0; v < g.n_nodes; ++v) out.emplace_back(v, v);
  for (size_t k : edge_subset) {
    const auto [a, b] = g.edges.at(k);
    out.emplace_back(a, b);
    out.emplace_back(b, a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

VerticalPartition PartitionVertical(const Graph& g, size_t n_clients, uint64_t seed) {
  const size_t d = g.feature_dim();
  if (n_clients < 2) throw ConfigError("vertical partition needs at least 2 clients");
  if (n_clients > d) {
    throw ConfigError("vertical partition: " + std::to_string(n_clients) +
                      " clients but only " + std::to_string(d) + " feature columns");
  }
  VerticalPartition p;
  p.n_clients = n_clients;
  p.feature_slices.resize(n_clients);
  p.client_edges.resize(n_clients);
  const size_t base = d / n_clients, extra = d % n_clients;
  size_t col = 0;
  for (size_t c = 0; c < n_clients; ++c) {
    const size_t width = base + (c < extra ? 1 : 0);
    for (size_t j = 0; j < width; ++j) p.feature_slices[c].push_back(col++);
  }
  Rng rng(DeriveSeed(seed, "edge-partition"));
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const auto owner = static_cast<size_t>(UniformUnit(rng) * static_cast<double>(n_clients));
    p.client_edges[std::min(owner, n_clients - 1)].push_back(k);
  }
  return p;
}

SparseMatrix FeatureSlice(const Graph& g, std::span<const size_t> columns) {
  std::vector<SparseMatrix::Entry> entries;
  for (size_t i = 0; i < g.n_nodes; ++i)
    for (size_t j = 0; j < columns.size(); ++j) {
      const double v = g.features(i, columns[j]);
      if (v != 0.0) entries.push_back({i, j, v});
    }
  return SparseMatrix(g.n_nodes, columns.size(), std::move(entries));
}

Graph SynthSbm(const SbmParams& params) {
  if (!(params.p_out >= 0.0 && params.p_out < params.p_in && params.p_in <= 1.0))
    throw ConfigError("synth_sbm: need 0 <= p_out < p_in <= 1");
  if (params.n_classes < 1 || params.n_nodes < static_cast<size_t>(params.n_classes))
    throw ConfigError("synth_sbm: need at least one node per class");
  if (params.feature_dim == 0) throw ConfigError("synth_sbm: feature_dim must be positive");

  Graph g;
  g.n_nodes = params.n_nodes;
  g.n_classes = params.n_classes;
  const auto k = static_cast<size_t>(params.n_classes);
  g.labels.resize(g.n_nodes);
  for (size_t i = 0; i < g.n_nodes; ++i) g.labels[i] = static_cast<int>(i * k / g.n_nodes);
  for (int c = 0; c < params.n_classes; ++c) g.class_names.push_back("class" + std::to_string(c));
  for (size_t i = 0; i < g.n_nodes; ++i) g.node_names.push_back("n" + std::to_string(i));

  Rng edge_rng(DeriveSeed(params.seed, "sbm-edges"));
  for (size_t u = 0; u < g.n_nodes; ++u)
    for (size_t v = u + 1; v < g.n_nodes; ++v) {
      const double p = g.labels[u] == g.labels[v] ? params.p_in : params.p_out;
      if (UniformUnit(edge_rng) < p) g.edges.emplace_back(u, v);
    }

  Rng feature_rng(DeriveSeed(params.seed, "sbm-features"));
  g.features = Tensor(g.n_nodes, params.feature_dim);
  for (size_t i = 0; i < g.n_nodes; ++i)
    for (size_t j = 0; j < params.feature_dim; ++j) {
      const double mean = (j % k == static_cast<size_t>(g.labels[i])) ? 1.0 : 0.0;
      g.features(i, j) = mean + StandardNormal(feature_rng);
    }
  AssignRandomSplit(g, params.train_fraction, params.seed);
  g.Validate();
  return g;
}

}  // namespace vfgnn

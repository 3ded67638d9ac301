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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "vfgnn/errors.h"
#include "vfgnn/graph.h"
#include "vfgnn/rng.h"

namespace vfgnn {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("vfgnn_graph_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string File(const std::string& name) const { return (path_ / name).string(); }
  void Write(const std::string& name, const std::string& text) const {
    std::ofstream(File(name)) << text;
  }

 private:
  fs::path path_;
};

Graph PathGraph(size_t n) {
  Graph g;
  g.n_nodes = n;
  g.features = Tensor(n, 4, 1.0);
  g.labels.assign(n, 0);
  g.n_classes = 1;
  for (size_t i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

std::vector<size_t> AllEdges(const Graph& g) {
  std::vector<size_t> idx(g.edges.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

TEST(LoadPlanetoidTest, TwoNodeToy) {
  TempDir dir;
  dir.Write("toy.content", "a\t1\t0\tx\nb\t0\t1\ty\n");
  dir.Write("toy.cites", "a\tb\n");
  const Graph g = LoadPlanetoid(dir.File("toy.content"), dir.File("toy.cites"));
  EXPECT_EQ(g.n_nodes, 2u);
  EXPECT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.feature_dim(), 2u);
  EXPECT_EQ(g.n_classes, 2);
  EXPECT_EQ(g.labels, (std::vector<int>{0, 1}));
}

TEST(LoadPlanetoidTest, DropsUnknownEndpointsAndDuplicates) {
  TempDir dir;
  dir.Write("g.content", "a\t1\tx\nb\t2\tx\nc\t3\ty\n");
  dir.Write("g.cites", "a\tb\nb\ta\nc\tzz\nc\tc\nb\tc\n");
  LoadStats stats;
  const Graph g = LoadPlanetoid(dir.File("g.content"), dir.File("g.cites"), &stats);
  EXPECT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(stats.dropped_edges, 1u);
  EXPECT_EQ(stats.self_loops, 1u);
  EXPECT_EQ(stats.duplicate_edges, 1u);
}

TEST(LoadPlanetoidTest, LabelsFollowFirstAppearance) {
  TempDir dir;
  dir.Write("g.content", "a\t1\tzeta\nb\t2\talpha\nc\t3\tzeta\n");
  dir.Write("g.cites", "");
  const Graph g = LoadPlanetoid(dir.File("g.content"), dir.File("g.cites"));
  EXPECT_EQ(g.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(g.class_names, (std::vector<std::string>{"zeta", "alpha"}));
}

TEST(LoadPlanetoidTest, MissingFeatureColumnsGiveIdentityFeatures) {
  TempDir dir;
  dir.Write("g.content", "a\tx\nb\ty\nc\tx\n");
  dir.Write("g.cites", "a\tc\n");
  const Graph g = LoadPlanetoid(dir.File("g.content"), dir.File("g.cites"));
  EXPECT_EQ(g.features, Tensor::Identity(3));
}

TEST(LoadPlanetoidTest, MalformedLineReportsLineNumber) {
  TempDir dir;
  dir.Write("g.content", "a\t1\tx\nb\tnot-a-number\tx\n");
  dir.Write("g.cites", "");
  try {
    LoadPlanetoid(dir.File("g.content"), dir.File("g.cites"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  dir.Write("h.content", "a\t1\tx\n");
  dir.Write("h.cites", "a\n");
  EXPECT_THROW(LoadPlanetoid(dir.File("h.content"), dir.File("h.cites")), ParseError);
}

TEST(LoadPlanetoidTest, EmptyFileIsDataError) {
  TempDir dir;
  dir.Write("g.content", "");
  dir.Write("g.cites", "");
  EXPECT_THROW(LoadPlanetoid(dir.File("g.content"), dir.File("g.cites")), DataError);
}

TEST(LoadPlanetoidTest, RoundTripIsIsomorphic) {
  SbmParams params;
  params.n_nodes = 40;
  params.feature_dim = 5;
  params.seed = 3;
  const Graph g = SynthSbm(params);
  TempDir dir;
  WritePlanetoid(g, dir.File("g.content"), dir.File("g.cites"));
  const Graph h = LoadPlanetoid(dir.File("g.content"), dir.File("g.cites"));
  ASSERT_EQ(h.n_nodes, g.n_nodes);
  EXPECT_EQ(h.features, g.features);
  EXPECT_EQ(h.node_names, g.node_names);
  std::set<Edge> ge(g.edges.begin(), g.edges.end()), he(h.edges.begin(), h.edges.end());
  EXPECT_EQ(ge, he);
  for (size_t i = 0; i < g.n_nodes; ++i)
    EXPECT_EQ(h.class_names[h.labels[i]], g.class_names[g.labels[i]]);
}

TEST(ManifestTest, ResolvesRelativePathsAndSplitFile) {
  TempDir dir;
  dir.Write("g.content", "a\t1\tx\nb\t2\ty\nc\t3\tx\n");
  dir.Write("g.cites", "a\tb\n");
  dir.Write("g.train", "a\nc\n");
  dir.Write("m.json", R"({"name": "toy", "content": "g.content", "cites": "g.cites", "train_mask": "g.train"})");
  const DatasetManifest m = ReadManifest(dir.File("m.json"));
  EXPECT_EQ(m.name, "toy");
  const Graph g = LoadDataset(m, fs::path(dir.File("m.json")).parent_path().string(), 0);
  EXPECT_EQ(g.TrainIndex(), (std::vector<size_t>{0, 2}));
  EXPECT_EQ(g.TestIndex(), (std::vector<size_t>{1}));
}

TEST(ManifestTest, MissingFieldIsConfigError) {
  TempDir dir;
  dir.Write("m.json", R"({"name": "toy"})");
  EXPECT_THROW(ReadManifest(dir.File("m.json")), ConfigError);
}

TEST(SplitTest, RandomSplitIsSeededAndDisjoint) {
  Graph a = PathGraph(100), b = PathGraph(100);
  AssignRandomSplit(a, 0.7, 9);
  AssignRandomSplit(b, 0.7, 9);
  EXPECT_EQ(a.train_mask, b.train_mask);
  EXPECT_EQ(a.TrainIndex().size(), 70u);
  EXPECT_EQ(a.TestIndex().size(), 30u);
  a.Validate();
}

TEST(NormalizeTest, IsolatedNodeHasUnitDiagonal) {
  const Graph g = PathGraph(1);
  const NormalizedAdjacency adj = NormalizeAdjacency(g, {}, AdjacencyScheme::kGcnSym);
  EXPECT_DOUBLE_EQ(adj.matrix.At(0, 0), 1.0);
}

TEST(NormalizeTest, TwoConnectedNodesGetOneHalf) {
  const Graph g = PathGraph(2);
  const NormalizedAdjacency adj = NormalizeAdjacency(g, AllEdges(g), AdjacencyScheme::kGcnSym);
  EXPECT_EQ(adj.matrix.ToDense(), Tensor(2, 2, 0.5));
}

TEST(NormalizeTest, DegreesComeFromTheSubsetOnly) {
  const Graph g = PathGraph(3);
  const std::vector<size_t> subset{0};
  const Tensor dense = NormalizeAdjacency(g, subset, AdjacencyScheme::kGcnSym).matrix.ToDense();
  EXPECT_DOUBLE_EQ(dense(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(dense(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(dense(1, 2), 0.0);
}

TEST(NormalizeTest, PropertiesOnRandomGraphs) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    SbmParams params;
    params.n_nodes = 30;
    params.p_in = 0.3;
    params.p_out = 0.05;
    params.seed = seed;
    const Graph g = SynthSbm(params);
    const Tensor sym = NormalizeAdjacency(g, AllEdges(g), AdjacencyScheme::kGcnSym).matrix.ToDense();
    const Tensor mean = NormalizeAdjacency(g, AllEdges(g), AdjacencyScheme::kRowMean).matrix.ToDense();
    std::vector<double> degree(g.n_nodes, 1.0);
    for (const Edge& e : g.edges) {
      degree[e.first] += 1;
      degree[e.second] += 1;
    }
    for (size_t v = 0; v < g.n_nodes; ++v) {
      double row = 0.0;
      for (size_t u = 0; u < g.n_nodes; ++u) {
        EXPECT_EQ(sym(v, u), sym(u, v));
        if (sym(v, u) != 0.0) EXPECT_NEAR(sym(v, u), 1.0 / std::sqrt(degree[v] * degree[u]), 1e-15);
        row += mean(v, u);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST(AttentionEdgesTest, BothDirectionsPlusSelfLoops) {
  const Graph g = PathGraph(3);
  const std::vector<Edge> edges = AttentionEdges(g, AllEdges(g));
  const std::vector<Edge> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}, {2, 1}, {2, 2}};
  EXPECT_EQ(edges, expected);
}

TEST(PartitionTest, ContiguousSlices) {
  const Graph g = PathGraph(5);
  const VerticalPartition p = PartitionVertical(g, 2, 0);
  EXPECT_EQ(p.feature_slices[0], (std::vector<size_t>{0, 1}));
  EXPECT_EQ(p.feature_slices[1], (std::vector<size_t>{2, 3}));
}

TEST(PartitionTest, DeterministicUnderSeed) {
  const Graph g = PathGraph(50);
  const VerticalPartition a = PartitionVertical(g, 2, 4);
  const VerticalPartition b = PartitionVertical(g, 2, 4);
  EXPECT_EQ(a.client_edges, b.client_edges);
  EXPECT_EQ(a.feature_slices, b.feature_slices);
}

TEST(PartitionTest, InvalidClientCounts) {
  const Graph g = PathGraph(5);
  EXPECT_THROW(PartitionVertical(g, 1, 0), ConfigError);
  EXPECT_THROW(PartitionVertical(g, 5, 0), ConfigError);
}

TEST(PartitionTest, DisjointCoverForAllClientCounts) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SbmParams params;
    params.n_nodes = 40;
    params.feature_dim = 8 + rng() % 9;
    params.p_in = 0.3;
    params.seed = rng();
    const Graph g = SynthSbm(params);
    for (size_t c = 2; c <= 8; ++c) {
      const VerticalPartition p = PartitionVertical(g, c, rng());
      std::vector<int> col_owner(g.feature_dim(), 0), edge_owner(g.edges.size(), 0);
      size_t smallest = g.feature_dim(), largest = 0;
      for (size_t k = 0; k < c; ++k) {
        for (size_t j : p.feature_slices[k]) ++col_owner[j];
        for (size_t e : p.client_edges[k]) ++edge_owner[e];
        smallest = std::min(smallest, p.feature_slices[k].size());
        largest = std::max(largest, p.feature_slices[k].size());
      }
      EXPECT_TRUE(std::all_of(col_owner.begin(), col_owner.end(), [](int n) { return n == 1; }));
      EXPECT_TRUE(std::all_of(edge_owner.begin(), edge_owner.end(), [](int n) { return n == 1; }));
      EXPECT_LE(largest - smallest, 1u);
    }
  }
}

TEST(FeatureSliceTest, SelectsColumns) {
  Graph g = PathGraph(2);
  g.features = Tensor::FromRows({{1, 0, 3}, {0, 5, 6}});
  const std::vector<size_t> cols{1, 2};
  EXPECT_EQ(FeatureSlice(g, cols).ToDense(), Tensor::FromRows({{0, 3}, {5, 6}}));
}

TEST(SynthSbmTest, CliquesWhenPOutIsZero) {
  SbmParams params;
  params.n_nodes = 10;
  params.n_classes = 2;
  params.p_in = 1.0;
  params.p_out = 0.0;
  const Graph g = SynthSbm(params);
  EXPECT_EQ(g.edges.size(), 2u * (5 * 4 / 2));
  for (const Edge& e : g.edges) EXPECT_EQ(g.labels[e.first], g.labels[e.second]);
}

TEST(SynthSbmTest, BalancedClassesAndSplit) {
  const Graph g = SynthSbm(SbmParams{});
  std::vector<int> count(3, 0);
  for (int y : g.labels) ++count[y];
  EXPECT_EQ(count, (std::vector<int>{100, 100, 100}));
  EXPECT_EQ(g.TrainIndex().size(), 210u);
  EXPECT_EQ(g.TestIndex().size(), 90u);
}

TEST(SynthSbmTest, InvalidProbabilities) {
  SbmParams params;
  params.p_in = 0.1;
  params.p_out = 0.2;
  EXPECT_THROW(SynthSbm(params), ConfigError);
  params.p_in = 1.5;
  params.p_out = 0.0;
  EXPECT_THROW(SynthSbm(params), ConfigError);
}

}  // namespace
}  // namespace vfgnn

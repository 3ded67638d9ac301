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

#ifndef VFGNN_HARNESS_H_
#define VFGNN_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vfgnn/attack.h"
#include "vfgnn/defense.h"
#include "vfgnn/gnn.h"
#include "vfgnn/graph.h"
#include "vfgnn/vfl.h"

namespace vfgnn {

// Name of the environment variable holding the dataset root. A dataset
// called "cora" resolves to <root>/cora/manifest.json.
inline constexpr const char* kDataDirEnv = "VFGNN_DATA_DIR";

enum class RunMode { kOnline, kOffline };

std::string RunModeName(RunMode m);
RunMode ParseRunMode(const std::string& name);

struct SynthSpec {
  size_t n_nodes = 300;
  int n_classes = 3;
  double p_in = 0.1;
  double p_out = 0.01;
  size_t feature_dim = 16;
};

struct ExperimentConfig {
  std::string name;
  // Exactly one of the two is set.
  std::optional<std::string> dataset;  // name under the data root, or a manifest path
  std::optional<SynthSpec> synth;
  GnnConfig gnn = GnnConfig::Defaults(Arch::kGcn);
  size_t n_clients = 2;
  Combine combine = Combine::kConcat;
  size_t server_layers = 1;
  size_t epochs = 200;
  double main_lr = 0.01;
  AttackConfig attack;
  DefenseConfig defense;
  uint64_t seed = 0;
  // Independent runs averaged into one result row.
  size_t repeats = 3;
  RunMode mode = RunMode::kOnline;
  std::optional<std::string> trace;  // offline input, or where online mode records

  // Unknown keys and invalid enums are ConfigErrors. Relative paths resolve
  // against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j, const std::string& base_dir = ".");
  static ExperimentConfig Load(const std::string& path);
  nlohmann::json ToJson() const;
  void Validate() const;

  // Hex digest of every field that affects results; name, seed, mode and the
  // trace path are excluded.
  std::string Digest() const;
  // Seed of repeat `k`: derived from the global seed and the digest.
  uint64_t RunSeed(size_t k) const;
};

// One CSV row. Metrics are means over the repeats; main accuracy is absent
// in offline mode.
struct ResultRow {
  std::string name;
  std::string digest;
  std::string dataset;
  std::string arch;
  std::string knowledge;
  std::string strategy;
  std::string defense;
  double defense_parameter = 0.0;
  std::string ablation;
  std::string mode;
  size_t repeats = 0;
  std::optional<double> main_test_accuracy;
  double attack_top1 = 0.0, attack_top3 = 0.0, attack_top5 = 0.0;
  double early_stop_top1 = 0.0, early_stop_top3 = 0.0, early_stop_top5 = 0.0;
  double early_stop_epoch = 0.0;
  double estimated_n_classes = 0.0;
  double wall_time_s = 0.0;
  std::string series;  // series file of the first repeat, relative to the output dir

  bool SameResults(const ResultRow& other) const;  // ignores wall time
};

const std::vector<std::string>& CsvColumns();
std::string CsvHeader();
std::string ToCsvLine(const ResultRow& row);

struct RunOptions {
  std::string out_dir;   // series, reports and traces go under here; empty writes nothing
  std::string data_dir;  // defaults to $VFGNN_DATA_DIR
};

// Full artifacts of one repeat.
struct RepeatResult {
  uint64_t seed = 0;
  AttackReport report;
  std::vector<EpochMetrics> main_metrics;   // empty offline
  std::optional<double> final_main_accuracy;  // absent offline
  GradientTrace trace;                        // empty offline
  Tensor embeddings;  // attacker's local embeddings after training; empty offline
};

struct RunResult {
  ResultRow row;
  std::vector<RepeatResult> repeats;
};

// Loads or synthesizes the graph for `config` under `seed`.
Graph BuildGraph(const ExperimentConfig& config, const std::string& data_dir, uint64_t seed);

// True when the named dataset (or manifest path) exists under `data_dir`.
bool DatasetAvailable(const std::string& dataset, const std::string& data_dir);
std::string DefaultDataDir();

// Builds the pipeline, runs every repeat and writes, per repeat k,
// series/<stem>.jsonl and reports/<stem>.json under the output directory,
// plus traces/<stem>.bin and embeddings/<stem>.txt (the attacker's final
// local embeddings) online. <stem> is <digest>_s<seed>_r<k>_<run seed
// prefix>. Library errors are rethrown with the digest prepended, keeping
// their type for ConfigError, NumericError and DataError.
RunResult Run(const ExperimentConfig& config, const RunOptions& options = {});

// One JSON object per epoch: epoch, main_acc (null offline), attack_acc,
// top3, top5, mean_abs_grad and D (reported candidate; null before the
// attack starts).
std::vector<nlohmann::json> SeriesLines(const RepeatResult& repeat, size_t epochs);

// Grid file: {"base": {...}, "grid": {"<json pointer>": [values, ...]},
// "configs": [{...}, ...]}. The grid expands to the cartesian product in
// key order, last key fastest, followed by the explicit configs (each
// merged over the base).
std::vector<ExperimentConfig> ExpandGrid(const nlohmann::json& grid, const std::string& base_dir = ".");

struct SweepOptions {
  std::string out_dir;
  std::string data_dir;
  size_t jobs = 1;
};

// Runs every config (up to `jobs` at a time), checkpoints each finished row
// under <out>/rows/ and skips rows already checkpointed, then writes
// <out>/results.csv in config order and <out>/metadata.json.
std::vector<ResultRow> Sweep(const std::vector<ExperimentConfig>& configs, const SweepOptions& options);

nlohmann::json RowToJson(const ResultRow& row);
ResultRow RowFromJson(const nlohmann::json& j);

// Whitespace- or comma-separated numeric matrix, one row per line.
Tensor ReadMatrixText(const std::string& path);
void WriteMatrixText(const Tensor& t, const std::string& path);

}  // namespace vfgnn

#endif  // VFGNN_HARNESS_H_

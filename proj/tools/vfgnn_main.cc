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

// Command-line front end: run, sweep and estimate-classes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vfgnn/clustering.h"
#include "vfgnn/errors.h"
#include "vfgnn/harness.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

nlohmann::json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vfgnn::ConfigError("cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw vfgnn::ConfigError(path + ": " + e.what());
  }
}

std::string ParentDir(const std::string& path) {
  const std::string parent = std::filesystem::path(path).parent_path().string();
  return parent.empty() ? "." : parent;
}

int RunCommand(const std::string& config_path, const std::string& out, const std::string& mode,
               const std::string& trace, const std::string& data_dir) {
  nlohmann::json j = ReadJson(config_path);
  if (!mode.empty()) j["mode"] = mode;
  if (!trace.empty()) j["trace"] = std::filesystem::absolute(trace).string();
  const vfgnn::ExperimentConfig config =
      vfgnn::ExperimentConfig::FromJson(j, ParentDir(config_path));
  const vfgnn::RunResult r = vfgnn::Run(config, {out, data_dir});
  std::cout << vfgnn::CsvHeader() << "\n" << vfgnn::ToCsvLine(r.row) << "\n";
  return 0;
}

int SweepCommand(const std::string& grid_path, const std::string& out, size_t jobs,
                 const std::string& data_dir) {
  const auto configs = vfgnn::ExpandGrid(ReadJson(grid_path), ParentDir(grid_path));
  const auto rows = vfgnn::Sweep(configs, {out, data_dir, jobs});
  std::cerr << rows.size() << " rows written to " << out << "/results.csv\n";
  return 0;
}

int EstimateCommand(const std::string& path, uint64_t seed, size_t k_max) {
  vfgnn::EstimatorOptions options;
  options.seed = seed;
  options.k_max = k_max;
  const vfgnn::ClassCountEstimate e =
      vfgnn::EstimateNumClasses(vfgnn::ReadMatrixText(path), options);
  nlohmann::json silhouette = nlohmann::json::array();
  for (size_t i = 0; i < e.silhouette.size(); ++i)
    silhouette.push_back({{"k", options.k_min + i}, {"score", e.silhouette[i]}});
  std::cout << nlohmann::json{{"n_classes", e.n_classes}, {"silhouette", silhouette}}.dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical federated GNN simulator with a gradient-matching label inference attack"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data-dir", data_dir,
                 std::string("Dataset root (default: $") + vfgnn::kDataDirEnv + ")");

  std::string config_path, out, mode, trace;
  CLI::App* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Directory for series, reports and traces");
  run->add_option("--mode", mode, "online or offline")->check(CLI::IsMember({"online", "offline"}));
  run->add_option("--trace", trace, "Gradient trace to record (online) or replay (offline)");

  std::string grid_path, sweep_out;
  size_t jobs = 1;
  CLI::App* sweep = app.add_subcommand("sweep", "Run every config of a grid file");
  sweep->add_option("--grid", grid_path, "Grid JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Configs run in parallel")->check(CLI::PositiveNumber);

  std::string embeddings_path;
  uint64_t seed = 0;
  size_t k_max = 16;
  CLI::App* estimate = app.add_subcommand("estimate-classes", "Estimate the class count of embeddings");
  estimate->add_option("--trace-embeddings", embeddings_path, "Embedding matrix, one row per line")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--seed", seed, "Clustering seed");
  estimate->add_option("--k-max", k_max, "Largest cluster count tried")->check(CLI::Range(2, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return RunCommand(config_path, out, mode, trace, data_dir);
    if (*sweep) return SweepCommand(grid_path, sweep_out, jobs, data_dir);
    if (*estimate) return EstimateCommand(embeddings_path, seed, k_max);
  } catch (const vfgnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vfgnn::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

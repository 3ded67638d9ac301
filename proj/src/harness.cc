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

#include "vfgnn/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "vfgnn/errors.h"
#include "vfgnn/rng.h"

namespace vfgnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kTopKeys{
    "name",      "dataset", "synth",  "arch",    "n_layers", "hidden_dim", "n_heads",
    "n_clients", "combine", "server_layers", "epochs", "main_lr", "attack", "defense",
    "seed",      "repeats", "mode",   "trace"};
const std::set<std::string> kAttackKeys{"knowledge",     "strategy",      "lr",
                                        "iterations",    "early_stop_lag", "warmup_epochs",
                                        "n_candidates",  "ablations"};
const std::set<std::string> kAblationKeys{"freeze_clone", "no_softmax", "no_onehot"};
const std::set<std::string> kDefenseKeys{"kind", "parameter"};
const std::set<std::string> kSynthKeys{"n_nodes", "n_classes", "p_in", "p_out", "feature_dim"};

void CheckKeys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

bool LooksLikePath(const std::string& s) {
  return s.find('/') != std::string::npos || fs::path(s).extension() == ".json";
}

std::string ResolvePath(const std::string& p, const std::string& base_dir) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

std::string Hex64(uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string Fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string AblationName(const Ablations& a) {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(a.freeze_clone, "freeze_clone");
  add(a.no_softmax, "no_softmax");
  add(a.no_onehot, "no_onehot");
  return out.empty() ? "none" : out;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void WriteText(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
    if (!os) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string FileStem(const ExperimentConfig& config, uint64_t seed, size_t repeat) {
  return config.Digest() + "_s" + std::to_string(config.seed) + "_r" + std::to_string(repeat) +
         "_" + Hex64(seed).substr(0, 8);
}

[[noreturn]] void RethrowWithDigest(const std::string& digest) {
  const std::string prefix = "[config " + digest + "] ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

RepeatResult RunRepeat(const ExperimentConfig& config, const std::string& data_dir, size_t k) {
  RepeatResult out;
  out.seed = config.RunSeed(k);
  const Graph g = BuildGraph(config, data_dir, out.seed);
  const VerticalPartition partition =
      PartitionVertical(g, config.n_clients, DeriveSeed(out.seed, "partition"));
  VflConfig vc;
  vc.gnn = config.gnn;
  vc.server_layers = config.server_layers;
  vc.combine = config.combine;
  vc.main_lr = config.main_lr;
  vc.defense = config.defense;
  vc.defense.seed = DeriveSeed(out.seed, "defense");
  VflSystem system(g, partition, vc, DeriveSeed(out.seed, "system"));

  AttackConfig ac = config.attack;
  ac.seed = DeriveSeed(out.seed, "attack");
  const size_t known_classes =
      ac.knowledge == KnowledgeLevel::kNone ? 0 : static_cast<size_t>(g.n_classes);
  const AttackPrior prior = MakePrior(system, known_classes);

  if (config.mode == RunMode::kOnline) {
    OnlineResult r = RunOnline(system, ac, prior, config.epochs, g.labels);
    out.report = std::move(r.report);
    out.main_metrics = std::move(r.main_metrics);
    out.trace = std::move(r.trace);
    out.final_main_accuracy = system.Evaluate(g.TestIndex());
    ad::RecordingScope off(false);
    out.embeddings = LocalForward(system.client(0).model(), system.client(0).graph()).value();
    if (config.trace) out.trace.Write(*config.trace);
  } else {
    const GradientTrace trace = GradientTrace::Read(*config.trace);
    out.report = RunOffline(trace, system.client(0).model(), system.client(0).graph(),
                            g.TrainIndex(), config.main_lr, ac, prior, g.labels);
  }
  return out;
}

}  // namespace

std::string RunModeName(RunMode m) { return m == RunMode::kOnline ? "online" : "offline"; }

RunMode ParseRunMode(const std::string& name) {
  if (name == "online") return RunMode::kOnline;
  if (name == "offline") return RunMode::kOffline;
  throw ConfigError("unknown mode \"" + name + "\" (expected online or offline)");
}

ExperimentConfig ExperimentConfig::FromJson(const json& j, const std::string& base_dir) {
  CheckKeys(j, kTopKeys, "experiment config");
  ExperimentConfig c;
  try {
    c.name = j.value("name", "");
    if (j.contains("dataset") && !j["dataset"].is_null()) {
      const std::string d = j["dataset"].get<std::string>();
      c.dataset = LooksLikePath(d) ? ResolvePath(d, base_dir) : d;
    }
    if (j.contains("synth") && !j["synth"].is_null()) {
      const json& s = j["synth"];
      CheckKeys(s, kSynthKeys, "synth");
      SynthSpec spec;
      spec.n_nodes = s.value("n_nodes", spec.n_nodes);
      spec.n_classes = s.value("n_classes", spec.n_classes);
      spec.p_in = s.value("p_in", spec.p_in);
      spec.p_out = s.value("p_out", spec.p_out);
      spec.feature_dim = s.value("feature_dim", spec.feature_dim);
      c.synth = spec;
    }
    c.gnn = GnnConfig::Defaults(ParseArch(j.value("arch", "gcn")));
    c.gnn.n_layers = j.value("n_layers", c.gnn.n_layers);
    c.gnn.hidden_dim = j.value("hidden_dim", c.gnn.hidden_dim);
    c.gnn.n_heads = j.value("n_heads", c.gnn.n_heads);
    c.n_clients = j.value("n_clients", c.n_clients);
    c.combine = ParseCombine(j.value("combine", "concat"));
    c.server_layers = j.value("server_layers", c.server_layers);
    c.epochs = j.value("epochs", c.epochs);
    c.main_lr = j.value("main_lr", c.main_lr);
    if (j.contains("attack")) {
      const json& a = j["attack"];
      CheckKeys(a, kAttackKeys, "attack");
      c.attack.knowledge = ParseKnowledge(a.value("knowledge", "full"));
      c.attack.strategy = ParseStrategy(a.value("strategy", "static"));
      if (a.contains("lr") && !a["lr"].is_null()) c.attack.lr = a["lr"].get<double>();
      c.attack.iterations = a.value("iterations", c.attack.iterations);
      c.attack.early_stop_lag = a.value("early_stop_lag", c.attack.early_stop_lag);
      c.attack.warmup_epochs = a.value("warmup_epochs", c.attack.warmup_epochs);
      c.attack.n_candidates = a.value("n_candidates", c.attack.n_candidates);
      if (a.contains("ablations")) {
        const json& ab = a["ablations"];
        CheckKeys(ab, kAblationKeys, "attack.ablations");
        c.attack.ablations.freeze_clone = ab.value("freeze_clone", false);
        c.attack.ablations.no_softmax = ab.value("no_softmax", false);
        c.attack.ablations.no_onehot = ab.value("no_onehot", false);
      }
    }
    if (j.contains("defense")) {
      const json& d = j["defense"];
      CheckKeys(d, kDefenseKeys, "defense");
      c.defense.kind = ParseDefense(d.value("kind", "none"));
      c.defense.parameter = d.value("parameter", 0.0);
    }
    c.seed = j.value("seed", c.seed);
    c.repeats = j.value("repeats", c.repeats);
    c.mode = ParseRunMode(j.value("mode", "online"));
    if (j.contains("trace") && !j["trace"].is_null())
      c.trace = ResolvePath(j["trace"].get<std::string>(), base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return FromJson(j, fs::path(path).parent_path().string().empty()
                         ? "."
                         : fs::path(path).parent_path().string());
}

json ExperimentConfig::ToJson() const {
  json j;
  j["name"] = name;
  j["dataset"] = dataset ? json(*dataset) : json(nullptr);
  if (synth) {
    j["synth"] = {{"n_nodes", synth->n_nodes},
                  {"n_classes", synth->n_classes},
                  {"p_in", synth->p_in},
                  {"p_out", synth->p_out},
                  {"feature_dim", synth->feature_dim}};
  } else {
    j["synth"] = nullptr;
  }
  j["arch"] = ArchName(gnn.arch);
  j["n_layers"] = gnn.n_layers;
  j["hidden_dim"] = gnn.hidden_dim;
  j["n_heads"] = gnn.n_heads;
  j["n_clients"] = n_clients;
  j["combine"] = CombineName(combine);
  j["server_layers"] = server_layers;
  j["epochs"] = epochs;
  j["main_lr"] = main_lr;
  json attack_json = AttackConfigJson(attack);
  attack_json.erase("seed");
  attack_json.erase("attack_lr");
  attack_json["lr"] = attack.LearningRate();
  attack_json["iterations"] = attack_json["attack_iterations"];
  attack_json.erase("attack_iterations");
  j["attack"] = attack_json;
  j["defense"] = {{"kind", DefenseName(defense.kind)}, {"parameter", defense.parameter}};
  j["seed"] = seed;
  j["repeats"] = repeats;
  j["mode"] = RunModeName(mode);
  j["trace"] = trace ? json(*trace) : json(nullptr);
  return j;
}

void ExperimentConfig::Validate() const {
  if (dataset.has_value() == synth.has_value())
    throw ConfigError("experiment config needs exactly one of \"dataset\" and \"synth\"");
  if (n_clients < 2) throw ConfigError("n_clients must be at least 2");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (repeats == 0) throw ConfigError("repeats must be positive");
  if (!(main_lr > 0.0) || !std::isfinite(main_lr)) throw ConfigError("main_lr must be positive");
  if (server_layers == 0) throw ConfigError("server_layers must be positive");
  if (gnn.n_layers == 0 || gnn.hidden_dim == 0 || gnn.n_heads == 0)
    throw ConfigError("GNN layers, hidden width and heads must be positive");
  if (synth) {
    if (synth->n_classes < 2 || synth->n_nodes < static_cast<size_t>(synth->n_classes))
      throw ConfigError("synth graph needs at least 2 classes and one node per class");
    if (!(synth->p_out >= 0.0 && synth->p_out < synth->p_in && synth->p_in <= 1.0))
      throw ConfigError("synth graph needs 0 <= p_out < p_in <= 1");
  }
  attack.Validate();
  defense.Validate();
  if (mode == RunMode::kOffline) {
    if (!trace) throw ConfigError("offline mode needs a trace file");
    if (repeats != 1) throw ConfigError("offline mode replays one trace; set repeats to 1");
    if (!fs::exists(*trace)) throw ConfigError("trace file " + *trace + " does not exist");
  }
  if (mode == RunMode::kOnline && trace && repeats != 1)
    throw ConfigError("recording a trace needs repeats = 1");
}

std::string ExperimentConfig::Digest() const {
  json j = ToJson();
  for (const char* key : {"name", "seed", "mode", "trace"}) j.erase(key);
  return Hex64(HashString(j.dump()));
}

uint64_t ExperimentConfig::RunSeed(size_t k) const {
  return DeriveSeed(DeriveSeed(seed, std::string_view(Digest())), static_cast<uint64_t>(k));
}

bool ResultRow::SameResults(const ResultRow& other) const {
  json a = RowToJson(*this), b = RowToJson(other);
  a.erase("wall_time_s");
  b.erase("wall_time_s");
  return a == b;
}

const std::vector<std::string>& CsvColumns() {
  static const std::vector<std::string> columns{
      "name",           "digest",          "dataset",         "arch",
      "knowledge",      "strategy",        "defense",         "defense_parameter",
      "ablation",       "mode",            "repeats",         "main_test_accuracy",
      "attack_top1",    "attack_top3",     "attack_top5",     "early_stop_top1",
      "early_stop_top3", "early_stop_top5", "early_stop_epoch", "estimated_n_classes",
      "wall_time_s",    "series"};
  return columns;
}

std::string CsvHeader() {
  std::string out;
  for (const std::string& c : CsvColumns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string ToCsvLine(const ResultRow& r) {
  const std::vector<std::string> fields{
      CsvField(r.name),
      r.digest,
      CsvField(r.dataset),
      r.arch,
      r.knowledge,
      r.strategy,
      r.defense,
      Fixed(r.defense_parameter, 10),
      r.ablation,
      r.mode,
      std::to_string(r.repeats),
      r.main_test_accuracy ? Fixed(*r.main_test_accuracy, 6) : "",
      Fixed(r.attack_top1, 6),
      Fixed(r.attack_top3, 6),
      Fixed(r.attack_top5, 6),
      Fixed(r.early_stop_top1, 6),
      Fixed(r.early_stop_top3, 6),
      Fixed(r.early_stop_top5, 6),
      Fixed(r.early_stop_epoch, 3),
      Fixed(r.estimated_n_classes, 3),
      Fixed(r.wall_time_s, 3),
      CsvField(r.series)};
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
  return out;
}

std::string DefaultDataDir() {
  const char* env = std::getenv(kDataDirEnv);
  return env ? std::string(env) : std::string();
}

bool DatasetAvailable(const std::string& dataset, const std::string& data_dir) {
  if (LooksLikePath(dataset)) return fs::exists(dataset);
  return !data_dir.empty() && fs::exists(fs::path(data_dir) / dataset / "manifest.json");
}

Graph BuildGraph(const ExperimentConfig& config, const std::string& data_dir, uint64_t seed) {
  if (config.synth) {
    SbmParams p;
    p.n_nodes = config.synth->n_nodes;
    p.n_classes = config.synth->n_classes;
    p.p_in = config.synth->p_in;
    p.p_out = config.synth->p_out;
    p.feature_dim = config.synth->feature_dim;
    p.seed = DeriveSeed(seed, "graph");
    return SynthSbm(p);
  }
  const std::string& d = *config.dataset;
  fs::path manifest_path;
  if (LooksLikePath(d)) {
    manifest_path = d;
  } else {
    if (data_dir.empty())
      throw ConfigError("dataset \"" + d + "\" needs a data root; set " + kDataDirEnv);
    manifest_path = fs::path(data_dir) / d / "manifest.json";
  }
  if (!fs::exists(manifest_path))
    throw ConfigError("dataset manifest " + manifest_path.string() + " not found");
  const DatasetManifest m = ReadManifest(manifest_path.string());
  return LoadDataset(m, manifest_path.parent_path().string(), DeriveSeed(seed, "split"));
}

std::vector<json> SeriesLines(const RepeatResult& repeat, size_t epochs) {
  std::vector<json> lines;
  size_t next = 0;
  const auto& attack = repeat.report.epochs;
  const size_t reported = repeat.report.reported_candidate;
  for (size_t e = 0; e < epochs; ++e) {
    json line;
    line["epoch"] = e;
    line["main_acc"] = e < repeat.main_metrics.size() ? json(repeat.main_metrics[e].test_accuracy)
                                                      : json(nullptr);
    if (next < attack.size() && attack[next].epoch == e) {
      const EpochSummary& s = attack[next++];
      line["attack_acc"] = s.top1;
      line["top3"] = s.top3;
      line["top5"] = s.top5;
      line["mean_abs_grad"] = s.mean_abs_grad;
      line["D"] = s.losses.at(reported);
    } else {
      for (const char* key : {"attack_acc", "top3", "top5", "mean_abs_grad", "D"})
        line[key] = nullptr;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

RunResult Run(const ExperimentConfig& config, const RunOptions& options) {
  const std::string digest = config.Digest();
  const std::string data_dir = options.data_dir.empty() ? DefaultDataDir() : options.data_dir;
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  try {
    config.Validate();
    for (size_t k = 0; k < config.repeats; ++k)
      result.repeats.push_back(RunRepeat(config, data_dir, k));
  } catch (...) {
    RethrowWithDigest(digest);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ResultRow& row = result.row;
  row.name = config.name;
  row.digest = digest;
  row.dataset = config.dataset ? *config.dataset
                               : "synth_sbm(" + std::to_string(config.synth->n_nodes) + "," +
                                     std::to_string(config.synth->n_classes) + ")";
  row.arch = ArchName(config.gnn.arch);
  row.knowledge = KnowledgeName(config.attack.knowledge);
  row.strategy = StrategyName(config.attack.strategy);
  row.defense = DefenseName(config.defense.kind);
  row.defense_parameter = config.defense.parameter;
  row.ablation = AblationName(config.attack.ablations);
  row.mode = RunModeName(config.mode);
  row.repeats = config.repeats;
  row.wall_time_s = wall;
  const double n = static_cast<double>(config.repeats);
  double main_sum = 0.0;
  for (const RepeatResult& r : result.repeats) {
    const AttackReport& rep = r.report;
    row.attack_top1 += rep.epochs.back().top1 / n;
    row.attack_top3 += rep.epochs.back().top3 / n;
    row.attack_top5 += rep.epochs.back().top5 / n;
    row.early_stop_top1 += rep.early_stop_accuracy / n;
    row.early_stop_top3 += rep.early_stop_top3 / n;
    row.early_stop_top5 += rep.early_stop_top5 / n;
    row.early_stop_epoch += static_cast<double>(rep.early_stop_epoch) / n;
    row.estimated_n_classes += static_cast<double>(rep.estimated_n_classes) / n;
    if (r.final_main_accuracy) main_sum += *r.final_main_accuracy / n;
  }
  if (config.mode == RunMode::kOnline) row.main_test_accuracy = main_sum;

  if (!options.out_dir.empty()) {
    const fs::path out(options.out_dir);
    for (size_t k = 0; k < result.repeats.size(); ++k) {
      const RepeatResult& r = result.repeats[k];
      const std::string stem = FileStem(config, r.seed, k);
      const size_t epochs =
          config.mode == RunMode::kOnline ? config.epochs : r.report.epochs.back().epoch + 1;
      std::string series;
      for (const json& line : SeriesLines(r, epochs)) series += line.dump() + "\n";
      const std::string series_rel = "series/" + stem + ".jsonl";
      WriteText(out / series_rel, series);
      if (k == 0) row.series = series_rel;
      json report = r.report.ToJson();
      report["experiment"] = config.ToJson();
      report["digest"] = digest;
      report["run_seed"] = r.seed;
      WriteText(out / "reports" / (stem + ".json"), report.dump(2) + "\n");
      if (!r.trace.empty()) {
        fs::create_directories(out / "traces");
        r.trace.Write((out / "traces" / (stem + ".bin")).string());
      }
      if (r.embeddings.size() > 0)
        WriteMatrixText(r.embeddings, (out / "embeddings" / (stem + ".txt")).string());
    }
  }
  return result;
}

std::vector<ExperimentConfig> ExpandGrid(const json& grid, const std::string& base_dir) {
  CheckKeys(grid, {"base", "grid", "configs"}, "grid file");
  const json base = grid.value("base", json::object());
  if (!base.is_object()) throw ConfigError("grid \"base\" must be an object");
  std::vector<json> expanded;
  if (grid.contains("grid")) {
    const json& axes = grid["grid"];
    if (!axes.is_object()) throw ConfigError("grid \"grid\" must be an object");
    expanded.push_back(base);
    for (const auto& [key, values] : axes.items()) {
      if (!values.is_array() || values.empty())
        throw ConfigError("grid axis \"" + key + "\" needs a non-empty array");
      json::json_pointer ptr;
      try {
        ptr = json::json_pointer(key.starts_with("/") ? key : "/" + key);
      } catch (const json::exception& e) {
        throw ConfigError("grid axis \"" + key + "\": " + e.what());
      }
      std::vector<json> next;
      for (const json& partial : expanded)
        for (const json& v : values) {
          json c = partial;
          c[ptr] = v;
          next.push_back(std::move(c));
        }
      expanded = std::move(next);
    }
  }
  if (grid.contains("configs")) {
    if (!grid["configs"].is_array()) throw ConfigError("grid \"configs\" must be an array");
    for (const json& c : grid["configs"]) {
      json merged = base;
      merged.merge_patch(c);
      expanded.push_back(std::move(merged));
    }
  }
  if (expanded.empty()) throw ConfigError("grid file defines no configs");
  std::vector<ExperimentConfig> out;
  for (const json& j : expanded) out.push_back(ExperimentConfig::FromJson(j, base_dir));
  return out;
}

json RowToJson(const ResultRow& r) {
  return {{"name", r.name},
          {"digest", r.digest},
          {"dataset", r.dataset},
          {"arch", r.arch},
          {"knowledge", r.knowledge},
          {"strategy", r.strategy},
          {"defense", r.defense},
          {"defense_parameter", r.defense_parameter},
          {"ablation", r.ablation},
          {"mode", r.mode},
          {"repeats", r.repeats},
          {"main_test_accuracy", r.main_test_accuracy ? json(*r.main_test_accuracy) : json(nullptr)},
          {"attack_top1", r.attack_top1},
          {"attack_top3", r.attack_top3},
          {"attack_top5", r.attack_top5},
          {"early_stop_top1", r.early_stop_top1},
          {"early_stop_top3", r.early_stop_top3},
          {"early_stop_top5", r.early_stop_top5},
          {"early_stop_epoch", r.early_stop_epoch},
          {"estimated_n_classes", r.estimated_n_classes},
          {"wall_time_s", r.wall_time_s},
          {"series", r.series}};
}

ResultRow RowFromJson(const json& j) {
  try {
    ResultRow r;
    r.name = j.at("name").get<std::string>();
    r.digest = j.at("digest").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.arch = j.at("arch").get<std::string>();
    r.knowledge = j.at("knowledge").get<std::string>();
    r.strategy = j.at("strategy").get<std::string>();
    r.defense = j.at("defense").get<std::string>();
    r.defense_parameter = j.at("defense_parameter").get<double>();
    r.ablation = j.at("ablation").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.repeats = j.at("repeats").get<size_t>();
    if (!j.at("main_test_accuracy").is_null())
      r.main_test_accuracy = j["main_test_accuracy"].get<double>();
    r.attack_top1 = j.at("attack_top1").get<double>();
    r.attack_top3 = j.at("attack_top3").get<double>();
    r.attack_top5 = j.at("attack_top5").get<double>();
    r.early_stop_top1 = j.at("early_stop_top1").get<double>();
    r.early_stop_top3 = j.at("early_stop_top3").get<double>();
    r.early_stop_top5 = j.at("early_stop_top5").get<double>();
    r.early_stop_epoch = j.at("early_stop_epoch").get<double>();
    r.estimated_n_classes = j.at("estimated_n_classes").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.series = j.at("series").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("result row: ") + e.what(), 0);
  }
}

std::vector<ResultRow> Sweep(const std::vector<ExperimentConfig>& configs,
                             const SweepOptions& options) {
  if (options.out_dir.empty()) throw ConfigError("sweep needs an output directory");
  const fs::path out(options.out_dir);
  fs::create_directories(out / "rows");
  std::vector<std::optional<ResultRow>> rows(configs.size());
  auto checkpoint = [&](size_t i) {
    return out / "rows" / (std::to_string(i) + "_" + configs[i].Digest() + "_s" +
                           std::to_string(configs[i].seed) + ".json");
  };
  for (size_t i = 0; i < configs.size(); ++i) {
    const fs::path p = checkpoint(i);
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    json j;
    try {
      in >> j;
      rows[i] = RowFromJson(j);
    } catch (const std::exception&) {
      rows[i].reset();
    }
  }

  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  RunOptions run_options{options.out_dir, options.data_dir};
  auto worker = [&] {
    for (size_t i = next++; i < configs.size(); i = next++) {
      if (rows[i]) continue;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        ResultRow row = Run(configs[i], run_options).row;
        WriteText(checkpoint(i), RowToJson(row).dump(2) + "\n");
        rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const size_t jobs = std::max<size_t>(1, std::min(options.jobs, configs.size()));
  std::vector<std::thread> threads;
  for (size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ResultRow> result;
  std::string csv = CsvHeader() + "\n";
  size_t max_repeats = 0;
  for (const auto& r : rows) {
    csv += ToCsvLine(*r) + "\n";
    max_repeats = std::max(max_repeats, r->repeats);
    result.push_back(*r);
  }
  WriteText(out / "results.csv", csv);
  const json metadata = {
      {"columns", CsvColumns()},
      {"rows", result.size()},
      {"aggregation", "each row is the mean over its `repeats` seeded runs"},
      {"note", max_repeats > 1
                   ? "reference results are single runs without seeds or variance; rows here "
                     "average several seeds, so values are not directly comparable"
                   : "single-seed rows"},
      {"data_dir_env", kDataDirEnv}};
  WriteText(out / "metadata.json", metadata.dump(2) + "\n");
  return result;
}

Tensor ReadMatrixText(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file " + path);
  std::vector<double> values;
  size_t rows = 0, cols = 0;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("matrix file " + path + ": bad number \"" + tok + "\"", line_no);
      }
    }
    if (row.empty()) continue;
    if (cols == 0) cols = row.size();
    if (row.size() != cols)
      throw ParseError("matrix file " + path + ": ragged row", line_no);
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw ParseError("matrix file " + path + " is empty", line_no);
  return Tensor(rows, cols, std::move(values));
}

void WriteMatrixText(const Tensor& t, const std::string& path) {
  std::string text;
  char buf[32];
  for (size_t r = 0; r < t.rows(); ++r) {
    for (size_t c = 0; c < t.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t(r, c));
      text += (c ? " " : "") + std::string(buf);
    }
    text += "\n";
  }
  WriteText(path, text);
}

}  // namespace vfgnn

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

#ifndef VFGNN_ATTACK_H_
#define VFGNN_ATTACK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vfgnn/autodiff.h"
#include "vfgnn/gnn.h"
#include "vfgnn/tensor.h"
#include "vfgnn/vfl.h"

namespace vfgnn {

enum class KnowledgeLevel { kFull, kPartial, kNone };
enum class Strategy { kStatic, kLowestMatchingLoss, kEnsemble };

std::string KnowledgeName(KnowledgeLevel k);
KnowledgeLevel ParseKnowledge(const std::string& name);
std::string StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct Ablations {
  bool freeze_clone = false;  // never update the clone parameters
  bool no_softmax = false;    // use SynLabels as raw targets in the adversarial loss
  bool no_onehot = false;     // skip the per-epoch one-hot projection
};

struct AttackConfig {
  KnowledgeLevel knowledge = KnowledgeLevel::kFull;
  Strategy strategy = Strategy::kStatic;
  std::optional<double> lr;  // defaults: full 0.1, partial 0.5, none 1.0
  size_t iterations = 10;
  size_t early_stop_lag = 2;
  size_t warmup_epochs = 20;  // no-knowledge only
  size_t n_candidates = 4;    // depths 1..n for the multi-candidate strategies
  Ablations ablations;
  uint64_t seed = 0;

  double LearningRate() const;
  void Validate() const;
};

// What the attacker knows about the federation before training starts: the
// layout of the server input, the class count and server depth when its
// knowledge level grants them, and the shared initialization the server
// classifier was drawn from (it fixes the label coordinate system).
struct AttackPrior {
  size_t server_input_dim = 0;
  size_t own_offset = 0;  // first column of the attacker's block in the server input
  size_t n_classes = 0;
  size_t server_layers = 1;
  // Empty when the class count is unknown; the attack then draws it from
  // `server_seed` once it has an estimate.
  ServerModel initial_server;
  uint64_t server_seed = 0;
};

// Everything the attack may read in one round. Implementations hand out the
// attacker client's own data only.
class AttackerView {
 public:
  virtual ~AttackerView() = default;
  virtual size_t Epoch() const = 0;
  virtual const ClientGraph& OwnGraph() const = 0;
  // Local parameters that produced this round's embeddings.
  virtual const LocalModel& OwnModel() const = 0;
  // dl/dW for the own local model, in parameter declaration order.
  virtual std::span<const Tensor> OwnGradients() const = 0;
  // Node ids whose embedding gradients were released this round.
  virtual std::span<const size_t> ReleasedRows() const = 0;
};

// A view over the attacker client's round inside a live VflSystem.
class RoundView : public AttackerView {
 public:
  explicit RoundView(const ClientRound& round) : round_(round) {}
  size_t Epoch() const override { return round_.epoch; }
  const ClientGraph& OwnGraph() const override { return *round_.graph; }
  const LocalModel& OwnModel() const override { return *round_.model; }
  std::span<const Tensor> OwnGradients() const override { return *round_.local_gradients; }
  std::span<const size_t> ReleasedRows() const override { return round_.packet->rows; }

 private:
  const ClientRound& round_;
};

// Every entry 1 / n_est.
Tensor InitSynLabels(size_t n_rows, size_t n_est);

// Each row becomes the basis vector at its argmax (ties to the lower index).
Tensor OneHotProject(const Tensor& syn_labels);

// Row-wise argmax, ties to the lower index.
std::vector<int> ArgmaxRows(const Tensor& scores);

// || flatten(a) - flatten(b) ||_2 as a recorded scalar.
ad::Var MatchingLoss(std::span<const ad::Var> observed, std::span<const ad::Var> adversarial);

// Adversarial loss of one clone: CE(softmax(clone(H)), softmax(syn)), or
// CE(softmax(clone(H)), syn) with `raw_targets`.
ad::Var AdversarialLoss(const ServerModel& clone, const ad::Var& padded_embeddings,
                        const ad::Var& syn_labels, bool raw_targets);

// dl'/dW for the frozen local parameters, recorded for a second
// differentiation with respect to the clone and the SynLabels.
std::vector<ad::Var> AdversarialGradients(const ad::Var& loss,
                                          std::span<const ad::Var> frozen_params);

// Clone of depth `n_layers` that computes the same function as `initial`
// (a one-layer classifier) when n_out equals its output width: hidden
// layers carry [x, -x] through ReLU. Output columns are dropped or
// zero-padded to `n_out`.
ServerModel ExpandClassifier(const ServerModel& initial, size_t n_layers, size_t n_out);

// Fraction of rows whose label is among the k largest scores (ties to the
// lower class index).
double TopKAccuracy(const Tensor& scores, std::span<const int> labels, size_t k);

// Index into `mean_abs_history` of the snapshot to keep: the argmax of the
// history minus `lag`, floored at 0. Throws Error on an empty history.
size_t EarlyStopIndex(std::span<const double> mean_abs_history, size_t lag);

struct CandidateState {
  size_t n_layers = 0;
  ServerModel clone;
  ad::Var syn_labels;  // per candidate for static / lowest; shared for ensemble
  std::vector<double> losses;  // D per attack epoch
  double MeanLoss() const;
};

struct AttackEpochRecord {
  size_t epoch = 0;
  std::vector<double> losses;  // D per candidate
  double mean_abs_grad = 0.0;
  std::vector<Tensor> scores;  // per candidate, SynLabels before projection
};

// Attack state and the per-round update. Feed it one AttackerView per
// training round, in order.
class LabelInferenceAttack {
 public:
  LabelInferenceAttack(const AttackConfig& config, AttackPrior prior);

  // Runs one attack epoch for the round (or the warm-up bookkeeping of the
  // no-knowledge level). Throws NumericError on a non-finite matching loss;
  // the state keeps the last good snapshot.
  void Observe(const AttackerView& view);

  const AttackConfig& config() const { return config_; }
  bool started() const { return started_; }
  size_t n_est() const { return n_est_; }
  std::span<const size_t> rows() const { return rows_; }
  const std::vector<CandidateState>& candidates() const { return candidates_; }
  const std::vector<AttackEpochRecord>& history() const { return history_; }
  // Candidate whose SynLabels are reported.
  size_t ReportedCandidate() const;
  const std::vector<double>& silhouette() const { return silhouette_; }

 private:
  void Start(const AttackerView& view);
  void AttackEpoch(const AttackerView& view);

  AttackConfig config_;
  AttackPrior prior_;
  bool started_ = false;
  size_t n_est_ = 0;
  std::vector<size_t> rows_;
  std::vector<CandidateState> candidates_;
  std::vector<AttackEpochRecord> history_;
  std::vector<double> silhouette_;
};

struct EpochSummary {
  size_t epoch = 0;
  std::vector<double> losses;
  double mean_abs_grad = 0.0;
  double top1 = 0.0, top3 = 0.0, top5 = 0.0;
};

struct AttackReport {
  nlohmann::json config;
  std::vector<EpochSummary> epochs;
  size_t early_stop_epoch = 0;
  double early_stop_accuracy = 0.0;
  double final_accuracy = 0.0;
  double early_stop_top3 = 0.0, early_stop_top5 = 0.0;
  size_t estimated_n_classes = 0;
  size_t reported_candidate = 0;
  std::vector<double> candidate_mean_loss;

  nlohmann::json ToJson() const;
  bool operator==(const AttackReport& other) const;
};

nlohmann::json AttackConfigJson(const AttackConfig& config);

// Scores the attack against the true labels (evaluation only; the attack
// never sees them).
AttackReport BuildReport(const LabelInferenceAttack& attack, std::span<const int> true_labels);

// Online mode: trains the federation for `epochs` rounds and attacks each
// round as it happens. The attacker is client 0.
struct OnlineResult {
  AttackReport report;
  std::vector<EpochMetrics> main_metrics;
  GradientTrace trace;
};

OnlineResult RunOnline(VflSystem& system, const AttackConfig& config, const AttackPrior& prior,
                       size_t epochs, std::span<const int> true_labels);

// Offline mode: replays a recorded gradient trace. Each epoch's local
// parameters are rebuilt from `initial_model` by applying the client's own
// optimizer to the recorded gradients. `rows` are the released node ids.
AttackReport RunOffline(const GradientTrace& trace, const LocalModel& initial_model,
                        const ClientGraph& graph, std::span<const size_t> rows, double main_lr,
                        const AttackConfig& config, const AttackPrior& prior,
                        std::span<const int> true_labels);

// Prior for client 0 of `system`; `n_classes` 0 means the class count is
// unknown to the attacker.
AttackPrior MakePrior(const VflSystem& system, size_t n_classes);

}  // namespace vfgnn

#endif  // VFGNN_ATTACK_H_

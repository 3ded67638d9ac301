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

#include "vfgnn/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vfgnn/clustering.h"
#include "vfgnn/errors.h"
#include "vfgnn/ops.h"
#include "vfgnn/optim.h"
#include "vfgnn/rng.h"

namespace vfgnn {

using ad::Var;

namespace {

// Replayed round for the offline mode.
class ReplayView : public AttackerView {
 public:
  ReplayView(size_t epoch, const ClientGraph& graph, const LocalModel& model,
             std::span<const Tensor> gradients, std::span<const size_t> rows)
      : epoch_(epoch), graph_(graph), model_(model), gradients_(gradients), rows_(rows) {}
  size_t Epoch() const override { return epoch_; }
  const ClientGraph& OwnGraph() const override { return graph_; }
  const LocalModel& OwnModel() const override { return model_; }
  std::span<const Tensor> OwnGradients() const override { return gradients_; }
  std::span<const size_t> ReleasedRows() const override { return rows_; }

 private:
  size_t epoch_;
  const ClientGraph& graph_;
  const LocalModel& model_;
  std::span<const Tensor> gradients_;
  std::span<const size_t> rows_;
};

Tensor AdjustColumns(const Tensor& t, size_t n_out) {
  Tensor out(t.rows(), n_out);
  const size_t n = std::min(n_out, t.cols());
  for (size_t r = 0; r < t.rows(); ++r)
    for (size_t c = 0; c < n; ++c) out(r, c) = t(r, c);
  return out;
}

// [a, -a] side by side.
Tensor Mirror(const Tensor& a) {
  Tensor out(a.rows(), 2 * a.cols());
  for (size_t r = 0; r < a.rows(); ++r)
    for (size_t c = 0; c < a.cols(); ++c) {
      out(r, c) = a(r, c);
      out(r, a.cols() + c) = -a(r, c);
    }
  return out;
}

// [[a, -a], [-a, a]].
Tensor MirrorBlock(const Tensor& a) {
  const Tensor top = Mirror(a);
  Tensor out(2 * a.rows(), top.cols());
  for (size_t r = 0; r < a.rows(); ++r)
    for (size_t c = 0; c < top.cols(); ++c) {
      out(r, c) = top(r, c);
      out(a.rows() + r, c) = -top(r, c);
    }
  return out;
}

// [I; -I].
Tensor Fold(size_t n) {
  Tensor out(2 * n, n);
  for (size_t i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    out(n + i, i) = -1.0;
  }
  return out;
}

AffineLayer Layer(Tensor w, Tensor b) {
  return {Var::Parameter(std::move(w)), Var::Parameter(std::move(b))};
}

}  // namespace

std::string KnowledgeName(KnowledgeLevel k) {
  switch (k) {
    case KnowledgeLevel::kFull: return "full";
    case KnowledgeLevel::kPartial: return "partial";
    case KnowledgeLevel::kNone: return "none";
  }
  return "?";
}

KnowledgeLevel ParseKnowledge(const std::string& name) {
  if (name == "full") return KnowledgeLevel::kFull;
  if (name == "partial") return KnowledgeLevel::kPartial;
  if (name == "none") return KnowledgeLevel::kNone;
  throw ConfigError("unknown knowledge level '" + name + "'");
}

std::string StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kStatic: return "static";
    case Strategy::kLowestMatchingLoss: return "lowest_matching_loss";
    case Strategy::kEnsemble: return "ensemble";
  }
  return "?";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "static") return Strategy::kStatic;
  if (name == "lowest_matching_loss" || name == "lowest") return Strategy::kLowestMatchingLoss;
  if (name == "ensemble") return Strategy::kEnsemble;
  throw ConfigError("unknown attack strategy '" + name + "'");
}

double AttackConfig::LearningRate() const {
  if (lr) return *lr;
  switch (knowledge) {
    case KnowledgeLevel::kFull: return 0.1;
    case KnowledgeLevel::kPartial: return 0.5;
    case KnowledgeLevel::kNone: return 1.0;
  }
  return 0.1;
}

void AttackConfig::Validate() const {
  if (lr && !(*lr > 0.0)) throw ConfigError("attack learning rate must be positive");
  if (iterations == 0) throw ConfigError("attack needs at least one iteration per epoch");
  if (n_candidates == 0) throw ConfigError("attack needs at least one candidate");
}

Tensor InitSynLabels(size_t n_rows, size_t n_est) {
  if (n_est == 0) throw ConfigError("SynLabels need at least one class");
  return Tensor(n_rows, n_est, 1.0 / static_cast<double>(n_est));
}

std::vector<int> ArgmaxRows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  for (size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor OneHotProject(const Tensor& syn_labels) {
  Tensor out(syn_labels.rows(), syn_labels.cols());
  const std::vector<int> best = ArgmaxRows(syn_labels);
  for (size_t r = 0; r < out.rows(); ++r) out(r, static_cast<size_t>(best[r])) = 1.0;
  return out;
}

Var MatchingLoss(std::span<const Var> observed, std::span<const Var> adversarial) {
  if (observed.size() != adversarial.size())
    throw DimensionError("matching loss: gradient lists differ in length");
  for (size_t i = 0; i < observed.size(); ++i)
    if (!observed[i].value().SameShape(adversarial[i].value()))
      throw DimensionError("matching loss: gradient shapes differ");
  return ad::L2Norm(ad::Sub(ad::FlattenConcat(observed), ad::FlattenConcat(adversarial)));
}

Var AdversarialLoss(const ServerModel& clone, const Var& padded_embeddings, const Var& syn_labels,
                    bool raw_targets) {
  const Var preds = ad::SoftmaxRows(Classify(clone, padded_embeddings));
  if (preds.cols() != syn_labels.cols())
    throw DimensionError("adversarial loss: clone outputs " + std::to_string(preds.cols()) +
                         " classes but SynLabels have " + std::to_string(syn_labels.cols()));
  return ad::CrossEntropySoft(preds, raw_targets ? syn_labels : ad::SoftmaxRows(syn_labels));
}

std::vector<Var> AdversarialGradients(const Var& loss, std::span<const Var> frozen_params) {
  return ad::Backward(loss, frozen_params, /*higher_order=*/true);
}

ServerModel ExpandClassifier(const ServerModel& initial, size_t n_layers, size_t n_out) {
  if (initial.layers.size() != 1)
    throw ConfigError("classifier expansion starts from a one-layer classifier");
  if (n_layers == 0 || n_out == 0) throw ConfigError("classifier expansion needs a positive shape");
  const Tensor w = AdjustColumns(initial.layers[0].weight.value(), n_out);
  const Tensor b = AdjustColumns(initial.layers[0].bias.value(), n_out);
  const size_t d = w.rows();
  ServerModel out;
  if (n_layers == 1) {
    out.layers.push_back(Layer(w, b));
    return out;
  }
  if (n_layers == 2) {
    out.layers.push_back(Layer(Mirror(w), Mirror(b)));
  } else {
    out.layers.push_back(Layer(Mirror(Tensor::Identity(d)), Tensor(1, 2 * d)));
    for (size_t k = 0; k + 3 < n_layers; ++k)
      out.layers.push_back(Layer(MirrorBlock(Tensor::Identity(d)), Tensor(1, 2 * d)));
    out.layers.push_back(Layer(MirrorBlock(w), Mirror(b)));
  }
  out.layers.push_back(Layer(Fold(n_out), Tensor(1, n_out)));
  return out;
}

double TopKAccuracy(const Tensor& scores, std::span<const int> labels, size_t k) {
  if (labels.size() != scores.rows()) throw DimensionError("top-k: label count != score rows");
  if (scores.rows() == 0) return 0.0;
  size_t hits = 0;
  for (size_t r = 0; r < scores.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<size_t>(y) >= scores.cols()) continue;
    const auto row = scores.row(r);
    const double s = row[static_cast<size_t>(y)];
    size_t rank = 0;
    for (size_t c = 0; c < row.size(); ++c)
      if (row[c] > s || (row[c] == s && c < static_cast<size_t>(y))) ++rank;
    hits += rank < k ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

size_t EarlyStopIndex(std::span<const double> mean_abs_history, size_t lag) {
  if (mean_abs_history.empty()) throw Error("early stop: empty gradient history");
  const auto peak = static_cast<size_t>(
      std::max_element(mean_abs_history.begin(), mean_abs_history.end()) - mean_abs_history.begin());
  return peak >= lag ? peak - lag : 0;
}

double CandidateState::MeanLoss() const {
  if (losses.empty()) return std::numeric_limits<double>::infinity();
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

LabelInferenceAttack::LabelInferenceAttack(const AttackConfig& config, AttackPrior prior)
    : config_(config), prior_(std::move(prior)) {
  config_.Validate();
  if (config_.knowledge != KnowledgeLevel::kNone) {
    if (prior_.n_classes == 0) throw ConfigError("attack prior lacks the class count");
    if (prior_.initial_server.layers.empty())
      throw ConfigError("attack prior lacks the initial classifier");
    n_est_ = prior_.n_classes;
  }
}

void LabelInferenceAttack::Start(const AttackerView& view) {
  rows_.assign(view.ReleasedRows().begin(), view.ReleasedRows().end());
  if (rows_.empty()) throw ProtocolError("attack: no released gradient rows");
  if (config_.knowledge == KnowledgeLevel::kNone) {
    Tensor h;
    {
      ad::RecordingScope off(false);
      h = LocalForward(view.OwnModel(), view.OwnGraph()).value();
    }
    EstimatorOptions opts;
    opts.seed = DeriveSeed(config_.seed, "class-estimate");
    const ClassCountEstimate est = EstimateNumClasses(h, opts);
    n_est_ = est.n_classes;
    silhouette_ = est.silhouette;
    if (prior_.initial_server.layers.empty())
      prior_.initial_server = InitServerModel(
          ServerLayerWidths(prior_.server_input_dim, n_est_, prior_.server_layers),
          prior_.server_seed);
  }

  std::vector<size_t> depths;
  if (config_.strategy == Strategy::kStatic) {
    const size_t depth = prior_.server_layers + (config_.knowledge == KnowledgeLevel::kFull ? 0 : 1);
    depths.push_back(depth);
  } else {
    for (size_t k = 1; k <= config_.n_candidates; ++k) depths.push_back(k);
  }

  const Var shared = Var::Parameter(InitSynLabels(rows_.size(), n_est_));
  for (size_t depth : depths) {
    CandidateState c;
    c.n_layers = depth;
    if (prior_.initial_server.layers.size() == 1) {
      c.clone = ExpandClassifier(prior_.initial_server, depth, n_est_);
    } else if (depth == prior_.initial_server.layers.size() &&
               n_est_ == prior_.initial_server.output_dim()) {
      c.clone = prior_.initial_server.Clone();
    } else {
      c.clone = InitServerModel(prior_.server_input_dim, n_est_, depth,
                                DeriveSeed(DeriveSeed(config_.seed, "clone"), depth));
    }
    if (c.clone.input_dim() != prior_.server_input_dim)
      throw DimensionError("attack: clone input width != server input width");
    c.syn_labels = config_.strategy == Strategy::kEnsemble
                       ? shared
                       : Var::Parameter(InitSynLabels(rows_.size(), n_est_));
    candidates_.push_back(std::move(c));
  }
  started_ = true;
}

void LabelInferenceAttack::Observe(const AttackerView& view) {
  if (!started_) {
    if (config_.knowledge == KnowledgeLevel::kNone && view.Epoch() < config_.warmup_epochs) return;
    Start(view);
  }
  AttackEpoch(view);
}

void LabelInferenceAttack::AttackEpoch(const AttackerView& view) {
  ad::RecordingScope on(true);
  const std::span<const size_t> released = view.ReleasedRows();
  if (!std::equal(released.begin(), released.end(), rows_.begin(), rows_.end()))
    throw ProtocolError("attack: released rows changed between rounds");

  const LocalModel frozen = view.OwnModel().Clone();
  const std::vector<Var> params = frozen.Parameters();
  const std::span<const Tensor> observed_values = view.OwnGradients();
  if (observed_values.size() != params.size())
    throw DimensionError("attack: gradient count does not match the local model");
  std::vector<Var> observed;
  for (size_t i = 0; i < params.size(); ++i) {
    if (!observed_values[i].SameShape(params[i].value()))
      throw DimensionError("attack: gradient shape does not match the local model");
    observed.push_back(Var::Constant(observed_values[i]));
  }
  const Var embeddings = LocalForward(frozen, view.OwnGraph());
  const Var padded = ad::PadCols(ad::GatherRows(embeddings, rows_), prior_.own_offset,
                                 prior_.server_input_dim);

  const double lr = config_.LearningRate();
  const bool ensemble = config_.strategy == Strategy::kEnsemble;
  const bool raw = config_.ablations.no_softmax;
  std::vector<double> last_d(candidates_.size(), 0.0);

  auto step = [&](const Var& d, std::vector<Var> clones, const Var& syn) {
    if (!std::isfinite(d.value().item()))
      throw NumericError("attack: non-finite matching loss at epoch " + std::to_string(view.Epoch()));
    std::vector<Var> wrt;
    if (!config_.ablations.freeze_clone) wrt = std::move(clones);
    wrt.push_back(syn);
    const std::vector<Tensor> grads = ad::GradientValues(d, wrt);
    SgdStep(wrt, grads, lr);
  };

  for (size_t it = 0; it < config_.iterations; ++it) {
    if (ensemble) {
      Var total;
      std::vector<Var> clone_params;
      for (const CandidateState& c : candidates_) {
        const Var l = AdversarialLoss(c.clone, padded, c.syn_labels, raw);
        total = total.defined() ? ad::Add(total, l) : l;
        const std::vector<Var> p = c.clone.Parameters();
        clone_params.insert(clone_params.end(), p.begin(), p.end());
      }
      total = ad::Scale(total, 1.0 / static_cast<double>(candidates_.size()));
      const Var d = MatchingLoss(observed, AdversarialGradients(total, params));
      std::fill(last_d.begin(), last_d.end(), d.value().item());
      step(d, std::move(clone_params), candidates_.front().syn_labels);
    } else {
      for (size_t k = 0; k < candidates_.size(); ++k) {
        CandidateState& c = candidates_[k];
        const Var l = AdversarialLoss(c.clone, padded, c.syn_labels, raw);
        const Var d = MatchingLoss(observed, AdversarialGradients(l, params));
        last_d[k] = d.value().item();
        step(d, c.clone.Parameters(), c.syn_labels);
      }
    }
  }

  AttackEpochRecord record;
  record.epoch = view.Epoch();
  record.losses = last_d;
  record.mean_abs_grad = kernels::MeanAbs(Flatten(observed_values));
  for (size_t k = 0; k < candidates_.size(); ++k) {
    candidates_[k].losses.push_back(last_d[k]);
    record.scores.push_back(candidates_[k].syn_labels.value());
  }
  if (!config_.ablations.no_onehot) {
    for (size_t k = 0; k < candidates_.size(); ++k) {
      if (ensemble && k > 0) break;
      Var syn = candidates_[k].syn_labels;
      syn.mutable_value() = OneHotProject(syn.value());
    }
  }
  history_.push_back(std::move(record));
}

size_t LabelInferenceAttack::ReportedCandidate() const {
  if (config_.strategy != Strategy::kLowestMatchingLoss) return 0;
  size_t best = 0;
  for (size_t k = 1; k < candidates_.size(); ++k)
    if (candidates_[k].MeanLoss() < candidates_[best].MeanLoss()) best = k;
  return best;
}

nlohmann::json AttackConfigJson(const AttackConfig& config) {
  return {{"knowledge", KnowledgeName(config.knowledge)},
          {"strategy", StrategyName(config.strategy)},
          {"attack_lr", config.LearningRate()},
          {"attack_iterations", config.iterations},
          {"early_stop_lag", config.early_stop_lag},
          {"warmup_epochs", config.warmup_epochs},
          {"n_candidates", config.n_candidates},
          {"ablations",
           {{"freeze_clone", config.ablations.freeze_clone},
            {"no_softmax", config.ablations.no_softmax},
            {"no_onehot", config.ablations.no_onehot}}},
          {"seed", config.seed}};
}

AttackReport BuildReport(const LabelInferenceAttack& attack, std::span<const int> true_labels) {
  const auto& history = attack.history();
  if (history.empty()) throw Error("attack report: the attack never ran");
  std::vector<int> labels;
  for (size_t v : attack.rows()) labels.push_back(true_labels[v]);

  AttackReport rep;
  rep.config = AttackConfigJson(attack.config());
  rep.estimated_n_classes = attack.n_est();
  rep.reported_candidate = attack.ReportedCandidate();
  for (const CandidateState& c : attack.candidates()) rep.candidate_mean_loss.push_back(c.MeanLoss());

  std::vector<double> mean_abs;
  for (const AttackEpochRecord& r : history) {
    const Tensor& scores = r.scores[rep.reported_candidate];
    EpochSummary s;
    s.epoch = r.epoch;
    s.losses = r.losses;
    s.mean_abs_grad = r.mean_abs_grad;
    s.top1 = TopKAccuracy(scores, labels, 1);
    s.top3 = TopKAccuracy(scores, labels, 3);
    s.top5 = TopKAccuracy(scores, labels, 5);
    rep.epochs.push_back(std::move(s));
    mean_abs.push_back(r.mean_abs_grad);
  }
  const size_t stop = EarlyStopIndex(mean_abs, attack.config().early_stop_lag);
  rep.early_stop_epoch = rep.epochs[stop].epoch;
  rep.early_stop_accuracy = rep.epochs[stop].top1;
  rep.early_stop_top3 = rep.epochs[stop].top3;
  rep.early_stop_top5 = rep.epochs[stop].top5;
  rep.final_accuracy = rep.epochs.back().top1;
  return rep;
}

nlohmann::json AttackReport::ToJson() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const EpochSummary& s : epochs)
    epochs_json.push_back({{"epoch", s.epoch},
                           {"D", s.losses},
                           {"mean_abs_grad", s.mean_abs_grad},
                           {"top1", s.top1},
                           {"top3", s.top3},
                           {"top5", s.top5}});
  return {{"config", config},
          {"epochs", epochs_json},
          {"early_stop_epoch", early_stop_epoch},
          {"early_stop_accuracy", early_stop_accuracy},
          {"early_stop_top3", early_stop_top3},
          {"early_stop_top5", early_stop_top5},
          {"final_accuracy", final_accuracy},
          {"estimated_n_classes", estimated_n_classes},
          {"reported_candidate", reported_candidate},
          {"candidate_mean_loss", candidate_mean_loss}};
}

bool AttackReport::operator==(const AttackReport& other) const {
  return ToJson() == other.ToJson();
}

AttackPrior MakePrior(const VflSystem& system, size_t n_classes) {
  AttackPrior prior;
  prior.server_input_dim = system.server().input_dim();
  prior.own_offset = 0;
  prior.n_classes = n_classes;
  prior.server_layers = system.config().server_layers;
  prior.server_seed = system.server_seed();
  if (n_classes > 0)
    prior.initial_server = InitServerModel(
        ServerLayerWidths(prior.server_input_dim, n_classes, prior.server_layers),
        prior.server_seed);
  return prior;
}

OnlineResult RunOnline(VflSystem& system, const AttackConfig& config, const AttackPrior& prior,
                       size_t epochs, std::span<const int> true_labels) {
  LabelInferenceAttack attack(config, prior);
  OnlineResult out;
  out.trace = GradientTrace(system.client(0).model().ParameterCount());
  for (size_t e = 0; e < epochs; ++e) {
    EpochResult r = system.TrainEpoch([&](const ClientRound& round) {
      if (round.client != 0) return;
      out.trace.Append(round.epoch, *round.local_gradients);
      attack.Observe(RoundView(round));
    });
    out.main_metrics.push_back(r.metrics);
  }
  out.report = BuildReport(attack, true_labels);
  return out;
}

AttackReport RunOffline(const GradientTrace& trace, const LocalModel& initial_model,
                        const ClientGraph& graph, std::span<const size_t> rows, double main_lr,
                        const AttackConfig& config, const AttackPrior& prior,
                        std::span<const int> true_labels) {
  if (trace.empty()) throw Error("offline attack: empty gradient trace");
  LocalModel model = initial_model.Clone();
  const std::vector<Var> params = model.Parameters();
  if (trace.length() != model.ParameterCount())
    throw DimensionError("offline attack: trace length " + std::to_string(trace.length()) +
                         " != local parameter count " + std::to_string(model.ParameterCount()));
  LabelInferenceAttack attack(config, prior);
  AdamState optimizer;
  for (size_t k = 0; k < trace.size(); ++k) {
    const TraceRecord& rec = trace[k];
    if (rec.epoch != k) throw DataError("offline attack: trace epochs must run 0, 1, 2, ...");
    const std::vector<Tensor> grads = Unflatten(rec.values, params);
    attack.Observe(ReplayView(rec.epoch, graph, model, grads, rows));
    AdamStep(params, grads, optimizer, main_lr);
  }
  return BuildReport(attack, true_labels);
}

}  // namespace vfgnn

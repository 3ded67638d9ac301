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

#ifndef VFGNN_VFL_H_
#define VFGNN_VFL_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vfgnn/autodiff.h"
#include "vfgnn/defense.h"
#include "vfgnn/gnn.h"
#include "vfgnn/graph.h"
#include "vfgnn/optim.h"

namespace vfgnn {

// The embedding gradient the server returns to one client. Only
// training rows are released; the rest are zero under full-batch training.
struct GradientPacket {
  size_t epoch = 0;
  std::vector<size_t> rows;  // node ids, ascending
  Tensor gradient;           // rows.size() x hidden_dim
};

// Cross entropy between softmax(logits) and softmax(one-hot labels) over
// the `rows` of the logits. Throws ConfigError for an empty row set.
ad::Var MainLoss(const ad::Var& logits, std::span<const int> labels, std::span<const size_t> rows,
                 int n_classes);

// Fraction of `rows` whose argmax logit equals the label (ties go to the
// lower class index).
double Accuracy(const Tensor& logits, std::span<const int> labels, std::span<const size_t> rows);

// One passive party: its local model, its own data, and its optimizer.
class Client {
 public:
  Client(LocalModel model, ClientGraph graph);

  // Local embeddings H_i for `epoch`; the forward record is kept until the
  // matching packet arrives.
  Tensor Forward(size_t epoch);
  // dl/dW for every local parameter, in declaration order, obtained by
  // backpropagating the released embedding gradient. Throws ProtocolError
  // when the packet does not belong to the last forward pass.
  std::vector<Tensor> LocalGradients(const GradientPacket& packet);
  void ApplyUpdate(std::span<const Tensor> gradients, double lr);

  const LocalModel& model() const { return model_; }
  const ClientGraph& graph() const { return graph_; }

 private:
  LocalModel model_;
  ClientGraph graph_;
  AdamState optimizer_;
  ad::Var embeddings_;
  size_t forward_epoch_ = 0;
  bool has_forward_ = false;
};

struct EpochMetrics {
  size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// What one client sees in a round, before it updates its model.
struct ClientRound {
  size_t epoch = 0;
  size_t client = 0;
  const GradientPacket* packet = nullptr;
  const std::vector<Tensor>* local_gradients = nullptr;
  const LocalModel* model = nullptr;  // parameters that produced this round's embeddings
  const ClientGraph* graph = nullptr;
};

using RoundObserver = std::function<void(const ClientRound&)>;

struct EpochResult {
  std::vector<GradientPacket> packets;  // as released, one per client
  EpochMetrics metrics;
};

struct VflConfig {
  GnnConfig gnn;
  size_t server_layers = 1;
  Combine combine = Combine::kConcat;
  double main_lr = 0.01;
  DefenseConfig defense;
};

class VflSystem {
 public:
  // Builds one client per partition slice. Local models and the server are
  // initialized from streams derived from `seed`.
  VflSystem(const Graph& graph, const VerticalPartition& partition, const VflConfig& config,
            uint64_t seed);

  // One full-batch round: forward, combine, classify, loss, server backward,
  // defense on the released gradients, server update, client backward and
  // client update. `observer` is called for every client after it computes
  // its local gradients and before it applies them.
  EpochResult TrainEpoch(const RoundObserver& observer = nullptr);

  // Main-task logits with recording off.
  Tensor Logits() const;
  double Evaluate(std::span<const size_t> rows) const;

  size_t epoch() const { return epoch_; }
  size_t n_clients() const { return clients_.size(); }
  const Client& client(size_t i) const { return clients_.at(i); }
  const ServerModel& server() const { return server_; }
  const VflConfig& config() const { return config_; }
  // Seed the server model was initialized from.
  uint64_t server_seed() const { return server_seed_; }

  static uint64_t ClientSeed(uint64_t seed, size_t client);
  static uint64_t ServerSeed(uint64_t seed);

 private:
  VflConfig config_;
  std::vector<Client> clients_;
  ServerModel server_;
  AdamState server_optimizer_;
  uint64_t server_seed_;
  std::vector<int> labels_;
  int n_classes_;
  std::vector<size_t> train_rows_;
  std::vector<size_t> test_rows_;
  size_t epoch_ = 0;
};

// Per-epoch history of one client's flattened local gradient.
struct TraceRecord {
  uint64_t epoch = 0;
  double mean_abs = 0.0;
  std::vector<double> values;
};

class GradientTrace {
 public:
  GradientTrace() = default;
  explicit GradientTrace(size_t length) : length_(length) {}

  // Throws DimensionError when the flattened length differs from earlier
  // records.
  void Append(uint64_t epoch, std::vector<double> values);
  void Append(uint64_t epoch, std::span<const Tensor> gradients);

  size_t length() const { return length_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TraceRecord& operator[](size_t i) const { return records_.at(i); }
  const std::vector<TraceRecord>& records() const { return records_; }

  // Little-endian "BSTRACE1" file; see README for the layout.
  void Write(const std::string& path) const;
  // Throws FormatError with the byte offset of the first inconsistency.
  static GradientTrace Read(const std::string& path);

  bool operator==(const GradientTrace& other) const;

 private:
  size_t length_ = 0;
  std::vector<TraceRecord> records_;
};

std::vector<double> Flatten(std::span<const Tensor> tensors);
// Splits a flattened gradient back into tensors shaped like `params`.
std::vector<Tensor> Unflatten(std::span<const double> flat, std::span<const ad::Var> params);

}  // namespace vfgnn

#endif  // VFGNN_VFL_H_

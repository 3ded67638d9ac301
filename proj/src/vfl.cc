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

#include "vfgnn/vfl.h"

#include <algorithm>
#include <fstream>

#include "byte_io.h"
#include "vfgnn/errors.h"
#include "vfgnn/ops.h"
#include "vfgnn/rng.h"

namespace vfgnn {

using ad::Var;

namespace {

constexpr char kTraceMagic[8] = {'B', 'S', 'T', 'R', 'A', 'C', 'E', '1'};

std::vector<size_t> RowsOf(const std::vector<bool>& mask) {
  std::vector<size_t> out;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

}  // namespace

Var MainLoss(const Var& logits, std::span<const int> labels, std::span<const size_t> rows,
             int n_classes) {
  if (rows.empty()) throw ConfigError("main loss: empty training mask");
  if (logits.cols() != static_cast<size_t>(n_classes))
    throw DimensionError("main loss: logits width != class count");
  Tensor onehot(rows.size(), static_cast<size_t>(n_classes));
  for (size_t i = 0; i < rows.size(); ++i) {
    const int y = labels[rows[i]];
    if (y < 0 || y >= n_classes) throw DataError("main loss: label out of range");
    onehot(i, static_cast<size_t>(y)) = 1.0;
  }
  const Var preds = ad::SoftmaxRows(ad::GatherRows(logits, rows));
  const Var targets = Var::Constant(kernels::SoftmaxRows(onehot));
  return ad::CrossEntropySoft(preds, targets);
}

double Accuracy(const Tensor& logits, std::span<const int> labels, std::span<const size_t> rows) {
  if (rows.empty()) return 0.0;
  size_t correct = 0;
  for (size_t v : rows) {
    const auto row = logits.row(v);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == labels[v] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

Client::Client(LocalModel model, ClientGraph graph)
    : model_(std::move(model)), graph_(std::move(graph)) {}

Tensor Client::Forward(size_t epoch) {
  ad::RecordingScope on(true);
  embeddings_ = LocalForward(model_, graph_);
  forward_epoch_ = epoch;
  has_forward_ = true;
  return embeddings_.value();
}

std::vector<Tensor> Client::LocalGradients(const GradientPacket& packet) {
  if (!has_forward_ || packet.epoch != forward_epoch_)
    throw ProtocolError("client: packet for epoch " + std::to_string(packet.epoch) +
                        " does not match the current forward pass");
  if (packet.gradient.rows() != packet.rows.size() ||
      packet.gradient.cols() != embeddings_.cols())
    throw DimensionError("client: packet shape " + packet.gradient.ShapeString() +
                         " does not match the embeddings");
  ad::RecordingScope on(true);
  const Var surrogate = ad::Sum(ad::Mul(ad::GatherRows(embeddings_, packet.rows),
                                        Var::Constant(packet.gradient)));
  const std::vector<Var> params = model_.Parameters();
  std::vector<Tensor> grads = ad::GradientValues(surrogate, params);
  embeddings_ = Var();
  has_forward_ = false;
  return grads;
}

void Client::ApplyUpdate(std::span<const Tensor> gradients, double lr) {
  const std::vector<Var> params = model_.Parameters();
  AdamStep(params, gradients, optimizer_, lr);
}

uint64_t VflSystem::ClientSeed(uint64_t seed, size_t client) {
  return DeriveSeed(DeriveSeed(seed, "client"), client);
}

uint64_t VflSystem::ServerSeed(uint64_t seed) { return DeriveSeed(seed, "server"); }

VflSystem::VflSystem(const Graph& graph, const VerticalPartition& partition,
                     const VflConfig& config, uint64_t seed)
    : config_(config),
      server_seed_(ServerSeed(seed)),
      labels_(graph.labels),
      n_classes_(graph.n_classes),
      train_rows_(RowsOf(graph.train_mask)),
      test_rows_(RowsOf(graph.test_mask)) {
  config_.defense.Validate();
  if (partition.n_clients < 1) throw ConfigError("federation needs at least one client");
  if (train_rows_.empty()) throw ConfigError("federation: empty training mask");
  for (size_t i = 0; i < partition.n_clients; ++i) {
    const auto& cols = partition.feature_slices[i];
    clients_.emplace_back(InitLocalModel(config.gnn, cols.size(), ClientSeed(seed, i)),
                          MakeClientGraph(graph, cols, partition.client_edges[i], config.gnn.arch));
  }
  const size_t width = config.combine == Combine::kConcat
                           ? partition.n_clients * config.gnn.hidden_dim
                           : config.gnn.hidden_dim;
  server_ = InitServerModel(width, static_cast<size_t>(n_classes_), config.server_layers,
                            server_seed_);
}

EpochResult VflSystem::TrainEpoch(const RoundObserver& observer) {
  ad::RecordingScope on(true);
  const size_t epoch = epoch_;
  const size_t n = clients_.size();

  std::vector<Var> embeddings;
  for (Client& c : clients_) embeddings.push_back(Var::Parameter(c.Forward(epoch)));

  const Var logits = Classify(server_, CombineEmbeddings(embeddings, config_.combine));
  const Var loss = MainLoss(logits, labels_, train_rows_, n_classes_);

  std::vector<Var> wrt = embeddings;
  const std::vector<Var> server_params = server_.Parameters();
  wrt.insert(wrt.end(), server_params.begin(), server_params.end());
  const std::vector<Tensor> grads = ad::GradientValues(loss, wrt);

  EpochResult result;
  result.metrics.epoch = epoch;
  result.metrics.loss = loss.value().item();
  result.metrics.train_accuracy = Accuracy(logits.value(), labels_, train_rows_);
  result.metrics.test_accuracy = Accuracy(logits.value(), labels_, test_rows_);

  for (size_t i = 0; i < n; ++i) {
    GradientPacket packet;
    packet.epoch = epoch;
    packet.rows = train_rows_;
    Tensor rows(train_rows_.size(), grads[i].cols());
    for (size_t k = 0; k < train_rows_.size(); ++k) {
      const auto src = grads[i].row(train_rows_[k]);
      std::copy(src.begin(), src.end(), rows.row(k).begin());
    }
    packet.gradient = ApplyDefense(config_.defense, rows, epoch * n + i);
    result.packets.push_back(std::move(packet));
  }

  AdamStep(server_params, std::span<const Tensor>(grads).subspan(n), server_optimizer_,
           config_.main_lr);

  for (size_t i = 0; i < n; ++i) {
    const std::vector<Tensor> local = clients_[i].LocalGradients(result.packets[i]);
    if (observer) {
      ClientRound round;
      round.epoch = epoch;
      round.client = i;
      round.packet = &result.packets[i];
      round.local_gradients = &local;
      round.model = &clients_[i].model();
      round.graph = &clients_[i].graph();
      observer(round);
    }
    clients_[i].ApplyUpdate(local, config_.main_lr);
  }
  ++epoch_;
  return result;
}

Tensor VflSystem::Logits() const {
  ad::RecordingScope off(false);
  std::vector<Var> embeddings;
  for (const Client& c : clients_) embeddings.push_back(LocalForward(c.model(), c.graph()));
  return Classify(server_, CombineEmbeddings(embeddings, config_.combine)).value();
}

double VflSystem::Evaluate(std::span<const size_t> rows) const {
  return Accuracy(Logits(), labels_, rows);
}

std::vector<double> Flatten(std::span<const Tensor> tensors) {
  std::vector<double> out;
  for (const Tensor& t : tensors) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

std::vector<Tensor> Unflatten(std::span<const double> flat, std::span<const Var> params) {
  std::vector<Tensor> out;
  size_t offset = 0;
  for (const Var& p : params) {
    if (offset + p.value().size() > flat.size())
      throw DimensionError("unflatten: gradient shorter than the parameters");
    Tensor t(p.rows(), p.cols());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.values().begin());
    offset += t.size();
    out.push_back(std::move(t));
  }
  if (offset != flat.size()) throw DimensionError("unflatten: gradient longer than the parameters");
  return out;
}

void GradientTrace::Append(uint64_t epoch, std::vector<double> values) {
  if (records_.empty() && length_ == 0) length_ = values.size();
  if (values.size() != length_)
    throw DimensionError("trace: gradient length " + std::to_string(values.size()) +
                         " != trace length " + std::to_string(length_));
  TraceRecord r;
  r.epoch = epoch;
  r.mean_abs = kernels::MeanAbs(values);
  r.values = std::move(values);
  records_.push_back(std::move(r));
}

void GradientTrace::Append(uint64_t epoch, std::span<const Tensor> gradients) {
  Append(epoch, Flatten(gradients));
}

void GradientTrace::Write(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write trace " + path);
  os.write(kTraceMagic, sizeof(kTraceMagic));
  byte_io::WriteU64(os, length_);
  byte_io::WriteU64(os, records_.size());
  for (const TraceRecord& r : records_) {
    byte_io::WriteU64(os, r.epoch);
    byte_io::WriteF64(os, r.mean_abs);
    for (double v : r.values) byte_io::WriteF64(os, v);
  }
  if (!os) throw DataError("failed writing trace " + path);
}

GradientTrace GradientTrace::Read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open trace " + path);
  char magic[8];
  if (!is.read(magic, 8)) throw FormatError("trace: missing magic", 0);
  if (!std::equal(magic, magic + 8, kTraceMagic)) throw FormatError("trace: bad magic", 0);
  uint64_t offset = 8;
  GradientTrace trace;
  trace.length_ = byte_io::ReadU64(is, offset, "trace length");
  const uint64_t count = byte_io::ReadU64(is, offset, "trace epoch count");
  for (uint64_t k = 0; k < count; ++k) {
    TraceRecord r;
    const uint64_t record_start = offset;
    r.epoch = byte_io::ReadU64(is, offset, "trace epoch index");
    r.mean_abs = byte_io::ReadF64(is, offset, "trace summary");
    r.values.resize(trace.length_);
    for (double& v : r.values) v = byte_io::ReadF64(is, offset, "trace gradient");
    if (!trace.records_.empty() && r.epoch <= trace.records_.back().epoch)
      throw FormatError("trace: epoch indices not increasing", record_start);
    trace.records_.push_back(std::move(r));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trace: trailing bytes", offset);
  return trace;
}

bool GradientTrace::operator==(const GradientTrace& other) const {
  if (length_ != other.length_ || records_.size() != other.records_.size()) return false;
  for (size_t i = 0; i < records_.size(); ++i) {
    const TraceRecord& a = records_[i];
    const TraceRecord& b = other.records_[i];
    if (a.epoch != b.epoch || a.mean_abs != b.mean_abs || a.values != b.values) return false;
  }
  return true;
}

}  // namespace vfgnn

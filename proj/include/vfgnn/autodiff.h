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

#ifndef VFGNN_AUTODIFF_H_
#define VFGNN_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "vfgnn/tensor.h"

namespace vfgnn::ad {

class Var;

// Vector-Jacobian product of one recorded op. Receives the upstream gradient
// of the op's output and a per-input flag saying which input gradients are
// wanted; returns one entry per input (undefined Vars where not wanted).
// The body is written with the differentiable ops themselves, so running it
// while recording yields gradients that can be differentiated again.
using VjpFn = std::function<std::vector<Var>(const Var& upstream,
                                             const std::vector<bool>& wanted)>;

struct Node {
  Tensor value;
  std::vector<Var> inputs;
  VjpFn vjp;
  bool requires_grad = false;
  const char* op = "leaf";
  uint64_t id = 0;
};

// Handle to a value in the computation record. Copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var Constant(Tensor value) { return Var(std::move(value), false); }
  static Var Parameter(Tensor value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Only leaves may be mutated; optimizers update parameters through this.
  Tensor& mutable_value();

  size_t rows() const { return node_->value.rows(); }
  size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_->inputs.empty(); }
  uint64_t id() const { return node_->id; }
  const char* op() const { return node_->op; }
  Node* node() const { return node_.get(); }

 private:
  friend Var MakeOp(const char*, Tensor, std::vector<Var>, VjpFn);
  std::shared_ptr<Node> node_;
};

// Recording is on by default and scoped per thread.
bool IsRecording();

class RecordingScope {
 public:
  explicit RecordingScope(bool enabled);
  ~RecordingScope();
  RecordingScope(const RecordingScope&) = delete;
  RecordingScope& operator=(const RecordingScope&) = delete;

 private:
  bool previous_;
};

// Builds an op node. When recording is off, or no input requires a
// gradient, the result is a constant leaf and `vjp` is dropped.
Var MakeOp(const char* op, Tensor value, std::vector<Var> inputs, VjpFn vjp);

// Topologically ordered view of the ops that a value depends on.
struct ComputationRecord {
  std::vector<const Node*> nodes;  // inputs precede the nodes that use them
  bool higher_order = false;
};

ComputationRecord CollectRecord(const Var& output);

// Gradients of a scalar `loss` with respect to each of `wrt`. With
// `higher_order` the backward sweep is itself recorded, so the returned Vars
// can be fed into further ops and differentiated again.
// Throws DimensionError for a non-scalar loss and GraphError when a `wrt`
// entry is not a differentiable ancestor of the loss.
std::vector<Var> Backward(const Var& loss, std::span<const Var> wrt,
                          bool higher_order = false);

// First-order gradient values, for callers that do not need the record.
std::vector<Tensor> GradientValues(const Var& loss, std::span<const Var> wrt);

}  // namespace vfgnn::ad

#endif  // VFGNN_AUTODIFF_H_

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

#include "vfgnn/autodiff.h"

#include <atomic>
#include <unordered_map>
#include <unordered_set>

#include "vfgnn/errors.h"
#include "vfgnn/ops.h"

namespace vfgnn::ad {
namespace {

thread_local bool recording = true;
std::atomic<uint64_t> next_id{1};

}  // namespace

Var::Var(Tensor value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->id = next_id.fetch_add(1, std::memory_order_relaxed);
}

Tensor& Var::mutable_value() {
  if (!is_leaf()) throw GraphError("mutable_value on a non-leaf node");
  return node_->value;
}

bool IsRecording() { return recording; }

RecordingScope::RecordingScope(bool enabled) : previous_(recording) {
  recording = enabled;
}
RecordingScope::~RecordingScope() { recording = previous_; }

Var MakeOp(const char* op, Tensor value, std::vector<Var> inputs, VjpFn vjp) {
  bool any = false;
  for (const Var& in : inputs) any = any || in.requires_grad();
  Var out(std::move(value), false);
  out.node_->op = op;
  if (recording && any) {
    out.node_->requires_grad = true;
    out.node_->inputs = std::move(inputs);
    out.node_->vjp = std::move(vjp);
  }
  return out;
}

ComputationRecord CollectRecord(const Var& output) {
  ComputationRecord record;
  if (!output.defined() || !output.requires_grad()) return record;
  std::unordered_set<const Node*> visited;
  // Iterative post-order DFS; deep GNN records would overflow recursion.
  std::vector<std::pair<const Node*, size_t>> stack;
  stack.emplace_back(output.node(), 0);
  visited.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const Node* child = node->inputs[next++].node();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      record.nodes.push_back(node);
      stack.pop_back();
    }
  }
  return record;
}

std::vector<Var> Backward(const Var& loss, std::span<const Var> wrt,
                          bool higher_order) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw DimensionError("backward: loss must be a scalar");
  }
  ComputationRecord record = CollectRecord(loss);
  record.higher_order = higher_order;

  std::unordered_set<const Node*> targets;
  for (const Var& w : wrt) {
    if (!w.defined() || !w.requires_grad()) {
      throw GraphError("backward: target does not require a gradient");
    }
    targets.insert(w.node());
  }

  // A node is on a gradient path when it is a target or feeds one.
  std::unordered_map<const Node*, bool> on_path;
  on_path.reserve(record.nodes.size());
  for (const Node* n : record.nodes) {
    bool flag = targets.count(n) > 0;
    for (const Var& in : n->inputs) flag = flag || on_path[in.node()];
    on_path[n] = flag;
  }
  for (const Var& w : wrt) {
    auto it = on_path.find(w.node());
    if (it == on_path.end()) {
      throw GraphError("backward: target is unreachable from the loss");
    }
  }

  RecordingScope scope(higher_order);
  std::unordered_map<const Node*, Var> grads;
  grads[loss.node()] = Var::Constant(Tensor(1, 1, 1.0));
  for (auto it = record.nodes.rbegin(); it != record.nodes.rend(); ++it) {
    const Node* node = *it;
    auto g = grads.find(node);
    if (g == grads.end() || !on_path[node] || node->inputs.empty()) continue;
    std::vector<bool> wanted(node->inputs.size());
    bool any = false;
    for (size_t i = 0; i < node->inputs.size(); ++i) {
      wanted[i] = node->inputs[i].requires_grad() && on_path[node->inputs[i].node()];
      any = any || wanted[i];
    }
    if (!any) continue;
    Var upstream = g->second;
    if (!targets.count(node)) grads.erase(g);
    std::vector<Var> input_grads = node->vjp(upstream, wanted);
    for (size_t i = 0; i < node->inputs.size(); ++i) {
      if (!wanted[i] || !input_grads[i].defined()) continue;
      const Node* in = node->inputs[i].node();
      auto existing = grads.find(in);
      if (existing == grads.end()) {
        grads.emplace(in, input_grads[i]);
      } else {
        existing->second = Add(existing->second, input_grads[i]);
      }
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    auto it = grads.find(w.node());
    out.push_back(it != grads.end()
                      ? it->second
                      : Var::Constant(Tensor(w.rows(), w.cols())));
  }
  return out;
}

std::vector<Tensor> GradientValues(const Var& loss, std::span<const Var> wrt) {
  std::vector<Var> grads = Backward(loss, wrt, false);
  std::vector<Tensor> out;
  out.reserve(grads.size());
  for (const Var& g : grads) out.push_back(g.value());
  return out;
}

}  // namespace vfgnn::ad

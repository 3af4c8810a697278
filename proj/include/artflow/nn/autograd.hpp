// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "artflow/nn/tensor.hpp"

namespace artflow::nn {

/// One vertex of the reverse-mode tape. A node owns its forward value, the
/// accumulated gradient and a closure that pushes its gradient to parents.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
  void zero_grad() {
    if (!grad.empty()) grad.zero();
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }
  static Var leaf(Tensor<T> value, bool requires_grad = true) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const std::vector<int>& shape() const { return node_->value.shape(); }
  int dim(int i) const { return node_->value.dim(i); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  /// Gradient accumulated by the last backward pass (zeros if none reached).
  const Tensor<T>& grad() const { return node_->grad_buffer(); }

  Var detach() const { return constant(node_->value); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }
  T item() const { return node_->value[0]; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Builds a result node. When no parent requires a gradient the closure and
/// parent links are dropped so frozen forward passes keep no tape.
template <typename T>
Var<T> make_result(Tensor<T> value, std::initializer_list<Var<T>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) n->requires_grad = true;
  }
  if (n->requires_grad) {
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Var<T>(std::move(n));
}

/// Runs reverse accumulation from `root`, seeding its gradient with `seed`
/// (ones when omitted). Gradients accumulate into every reachable node.
template <typename T>
void backward(const Var<T>& root, const Tensor<T>* seed = nullptr) {
  if (!root.requires_grad()) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  Node<T>* r = root.node().get();
  Tensor<T>& g = r->grad_buffer();
  if (seed) {
    if (seed->shape() != g.shape()) throw std::invalid_argument("backward seed shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (*seed)[i];
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += T(1);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

/// A named trainable tensor whose node persists across forward passes.
template <typename T>
struct Parameter {
  std::string name;
  std::shared_ptr<Node<T>> node;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> init) : name(std::move(n)), node(std::make_shared<Node<T>>()) {
    node->value = std::move(init);
    node->requires_grad = true;
  }
  Var<T> var() const { return Var<T>(node); }
  Tensor<T>& value() { return node->value; }
  const Tensor<T>& value() const { return node->value; }
  Tensor<T>& grad() { return node->grad_buffer(); }
};

}  // namespace artflow::nn

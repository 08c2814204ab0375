#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grainnet/kernels.hpp"
#include "grainnet/tensor.hpp"

namespace grainnet {

// A learnable tensor living outside any tape. Gradients accumulate here
// after each backward pass; the optimizer and checkpointing work on Params.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<T>(value.shape())) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over a static per-batch graph. Nodes are appended in
// topological order during the forward pass and visited in reverse during
// backward(); the tape is discarded and rebuilt for every batch.
template <typename T>
class Tape {
 public:
  Tape() { nodes_.reserve(128); }

  Var<T> input(Tensor<T> value, bool requires_grad = false) {
    return alloc(std::move(value), requires_grad);
  }

  // Leaf bound to an external parameter; after backward() the node's gradient
  // is added onto p.grad. The value is copied so the tape stays self-contained.
  Var<T> param(Param<T>& p, bool with_grad = true) {
    Var<T> v = alloc(p.value, with_grad && p.trainable);
    nodes_[static_cast<std::size_t>(v.idx)].bound = &p;
    return v;
  }

  Var<T> alloc(Tensor<T> value, bool requires_grad) {
    debug_check_finite(value, "tape node value");
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, nullptr, {}});
    return Var<T>{static_cast<int>(nodes_.size()) - 1};
  }

  // Backward functions are only retained when the node requires a gradient,
  // so inference-mode graphs carry no closures.
  void set_backward(Var<T> v, std::function<void(Tape&)> fn) {
    Node& n = node(v);
    if (n.requires_grad) n.backward = std::move(fn);
  }

  const Tensor<T>& val(Var<T> v) const { return node(v).value; }
  Tensor<T>& val_mut(Var<T> v) { return node(v).value; }

  bool requires_grad(Var<T> v) const { return node(v).requires_grad; }

  bool has_grad(Var<T> v) const { return !node(v).grad.empty(); }

  // Gradient buffer, zero-allocated on first touch.
  Tensor<T>& grad(Var<T> v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 and sweeps the tape in reverse creation order,
  // which is a valid reverse topological order by construction. Finally all
  // param-bound leaf gradients are accumulated into their Params.
  void backward(Var<T> out) {
    Node& o = node(out);
    if (o.value.size() != 1)
      throw std::invalid_argument("backward() requires a scalar output, got shape " +
                                  o.value.shape_str());
    if (!o.requires_grad) return;
    grad(out)[0] = T(1);
    for (int i = out.idx; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backward && !n.grad.empty()) n.backward(*this);
    }
    for (int i = 0; i <= out.idx; ++i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.bound != nullptr && !n.grad.empty())
        kernels::axpy<T>(n.grad.size(), T(1), n.grad.data(), n.bound->grad.data());
    }
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
    Param<T>* bound = nullptr;
  };

  Node& node(Var<T> v) {
    if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
      throw std::out_of_range("invalid tape var");
    return nodes_[static_cast<std::size_t>(v.idx)];
  }
  const Node& node(Var<T> v) const {
    if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
      throw std::out_of_range("invalid tape var");
    return nodes_[static_cast<std::size_t>(v.idx)];
  }

  std::vector<Node> nodes_;

  // Node holds a Param* for grad writeback; moving the tape is fine, copying
  // would double-accumulate, so forbid it.
 public:
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;
};

}  // namespace grainnet

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ktnext/nn/tensor.hpp"

namespace ktnext::nn {

class Graph;

/// Handle to a value recorded on a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Graph* graph() const noexcept { return graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Accumulates the gradient of an output into its parents' gradient buffers.
/// Entries of `parent_grads` are null for parents that do not require grad.
using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> parent_grads)>;

/// Tape for reverse-mode differentiation. Nodes are appended in evaluation
/// order, so a reverse sweep over ids is a valid topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Differentiable leaf (parameter or input under test).
  Var leaf(Tensor value);

  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward);

  /// Reverse sweep from a one-element loss. May run once per graph.
  void backward(const Var& loss);

  /// Gradient of the last backward() loss; throws for nodes that were not
  /// differentiated.
  const Tensor& grad(const Var& v) const;

  const Tensor& value(const Var& v) const;
  bool requires_grad(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  const Node& node(const Var& v) const;

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace ktnext::nn

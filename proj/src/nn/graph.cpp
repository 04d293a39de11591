#include "ktnext/nn/graph.hpp"

#include "ktnext/error.hpp"

namespace ktnext::nn {

const Tensor& Var::value() const {
  if (!graph_) throw Error(ErrorCode::ContractViolation, "use of an empty Var");
  return graph_->value(*this);
}

bool Var::requires_grad() const {
  if (!graph_) throw Error(ErrorCode::ContractViolation, "use of an empty Var");
  return graph_->requires_grad(*this);
}

const Graph::Node& Graph::node(const Var& v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw Error(ErrorCode::ContractViolation, "Var does not belong to this graph");
  }
  return nodes_[v.id_];
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, true, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (backward_done_) throw Error(ErrorCode::ContractViolation, "graph already differentiated");
  Node n;
  n.value = std::move(value);
  for (const auto& p : parents) {
    n.requires_grad = n.requires_grad || node(p).requires_grad;
    n.parents.push_back(p.id_);
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(const Var& loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw Error(ErrorCode::ContractViolation, "backward needs a scalar loss, got " + to_string(root.value.shape()));
  }
  if (backward_done_) throw Error(ErrorCode::ContractViolation, "backward already ran on this graph");
  if (!root.requires_grad) throw Error(ErrorCode::ContractViolation, "loss does not depend on any differentiable leaf");
  backward_done_ = true;

  for (std::size_t i = 0; i <= loss.id_; ++i) {
    if (nodes_[i].requires_grad) nodes_[i].grad = Tensor(nodes_[i].value.shape(), 0.0);
  }
  nodes_[loss.id_].grad[0] = 1.0;

  std::vector<Tensor*> parent_grads;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    parent_grads.clear();
    for (auto p : n.parents) parent_grads.push_back(nodes_[p].requires_grad ? &nodes_[p].grad : nullptr);
    n.backward(n.grad, parent_grads);
  }
}

const Tensor& Graph::grad(const Var& v) const {
  const Node& n = node(v);
  if (!n.requires_grad) throw Error(ErrorCode::ContractViolation, "gradient requested for a non-differentiated value");
  if (n.grad.empty()) throw Error(ErrorCode::ContractViolation, "gradient requested before backward");
  return n.grad;
}

const Tensor& Graph::value(const Var& v) const { return node(v).value; }

bool Graph::requires_grad(const Var& v) const { return node(v).requires_grad; }

}  // namespace ktnext::nn

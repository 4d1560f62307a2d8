#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "core/tensor.hpp"

namespace flint::ag {

class Node;
using NodePtr = std::shared_ptr<Node>;

// Receives this node's gradient for the current backward pass and adds the
// parents' contributions into the supplied accumulators. An entry is null
// when the corresponding parent does not require gradients.
using BackwardFn = std::function<void(const Tensor& gout, const std::vector<Tensor*>& gparents)>;

// One value in the computation graph. `grad` persists across backward passes
// and accumulates additively; callers zero it between optimization steps.
class Node {
public:
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  BackwardFn backward_fn;

  Node(Tensor v, bool rg)
      : value(std::move(v)), grad(Tensor::zeros(value.shape)), requires_grad(rg) {}

  const Shape& shape() const { return value.shape; }
  double scalar_value() const;
  void zero_grad() { grad.fill(0.0); }
};

NodePtr constant(Tensor v);
NodePtr param(Tensor v);

// Op node whose requires_grad is inherited from its parents.
NodePtr make_op(Tensor value, std::vector<NodePtr> parents, BackwardFn fn);

// Reverse pass from a scalar root. Every reachable node contributes exactly
// once per call; node.grad receives the pass gradient additively, so running
// backward twice without zeroing doubles every grad.
void backward(const NodePtr& root);

void zero_grads(const std::vector<NodePtr>& nodes);

}  // namespace flint::ag

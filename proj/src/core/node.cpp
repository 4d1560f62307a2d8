#include "core/node.hpp"

#include <unordered_map>

#include "core/error.hpp"

namespace flint::ag {

double Node::scalar_value() const {
  if (value.size() != 1)
    throw NumericError("expected scalar node, got shape " + value.shape.str());
  return value[0];
}

NodePtr constant(Tensor v) { return std::make_shared<Node>(std::move(v), false); }

NodePtr param(Tensor v) { return std::make_shared<Node>(std::move(v), true); }

NodePtr make_op(Tensor value, std::vector<NodePtr> parents, BackwardFn fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  auto n = std::make_shared<Node>(std::move(value), rg);
  if (rg) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(fn);
  }
  return n;
}

void backward(const NodePtr& root) {
  if (root->value.size() != 1)
    throw NumericError("backward root must be scalar, got shape " + root->value.shape.str());
  if (!root->requires_grad) return;

  // post-order over the requires_grad subgraph
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;  // 0 unseen, 1 open, 2 done
  std::vector<Node*> stack{root.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    int& st = state[n];
    if (st == 0) {
      st = 1;
      for (const auto& p : n->parents)
        if (p->requires_grad && state[p.get()] == 0) stack.push_back(p.get());
    } else {
      stack.pop_back();
      if (st == 1) {
        st = 2;
        order.push_back(n);
      }
    }
  }

  // per-pass gradient accumulators, folded into node.grad at the end
  std::unordered_map<Node*, Tensor> pass;
  pass.reserve(order.size());
  pass.emplace(root.get(), Tensor(root->value.shape, 1.0));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    auto found = pass.find(n);
    if (found == pass.end()) continue;  // unreachable from root (defensive)
    if (!n->backward_fn) continue;
    std::vector<Tensor*> gp(n->parents.size(), nullptr);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      Node* p = n->parents[i].get();
      if (!p->requires_grad) continue;
      auto [pit, inserted] = pass.try_emplace(p, p->value.shape);
      (void)inserted;
      gp[i] = &pit->second;
    }
    n->backward_fn(found->second, gp);
  }

  for (auto& [n, g] : pass) n->grad.add_(g);
}

void zero_grads(const std::vector<NodePtr>& nodes) {
  for (const auto& n : nodes) n->zero_grad();
}

}  // namespace flint::ag

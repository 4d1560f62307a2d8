#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace flint::ag {

namespace {

double eval(const GraphBuilder& fn, const std::vector<Tensor>& values) {
  std::vector<NodePtr> leaves;
  leaves.reserve(values.size());
  for (const auto& t : values) leaves.push_back(constant(t));
  NodePtr root = fn(leaves);
  if (root->value.size() != 1) throw NumericError("grad_check: root must be scalar");
  return root->value[0];
}

}  // namespace

double grad_check_params(const std::function<NodePtr()>& fn, const std::vector<NodePtr>& params,
                         double h) {
  for (const auto& p : params) p->zero_grad();
  NodePtr root = fn();
  if (root->value.size() != 1) throw NumericError("grad_check: root must be scalar");
  backward(root);

  double worst = 0.0;
  for (const auto& p : params) {
    for (std::size_t j = 0; j < p->value.size(); ++j) {
      const double x0 = p->value[j];
      p->value[j] = x0 + h;
      const double fp = fn()->scalar_value();
      p->value[j] = x0 - h;
      const double fm = fn()->scalar_value();
      p->value[j] = x0;
      const double num = (fp - fm) / (2.0 * h);
      const double ana = p->grad[j];
      const double err =
          std::fabs(ana - num) / std::max({1.0, std::fabs(ana), std::fabs(num)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double grad_check(const GraphBuilder& fn, const std::vector<Tensor>& inputs, double h) {
  // analytic pass
  std::vector<NodePtr> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(param(t));
  NodePtr root = fn(leaves);
  if (root->value.size() != 1) throw NumericError("grad_check: root must be scalar");
  backward(root);

  double worst = 0.0;
  std::vector<Tensor> values = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double x0 = values[i][j];
      values[i][j] = x0 + h;
      const double fp = eval(fn, values);
      values[i][j] = x0 - h;
      const double fm = eval(fn, values);
      values[i][j] = x0;
      const double num = (fp - fm) / (2.0 * h);
      const double ana = leaves[i]->grad[j];
      const double err =
          std::fabs(ana - num) / std::max({1.0, std::fabs(ana), std::fabs(num)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace flint::ag

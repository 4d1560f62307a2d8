#pragma once

#include <functional>
#include <vector>

#include "core/node.hpp"

namespace flint::ag {

// Builds a scalar-rooted graph from fresh leaf nodes for the given values.
using GraphBuilder = std::function<NodePtr(const std::vector<NodePtr>&)>;

// Compares analytic gradients against central finite differences
// (step h, double precision) and returns the worst relative error over all
// entries of all inputs, with |a - n| / max(1, |a|, |n|).
double grad_check(const GraphBuilder& fn, const std::vector<Tensor>& inputs, double h = 1e-5);

// Same check for a graph built over live parameter nodes: fn() must rebuild
// the scalar root from the current parameter values on every call.
double grad_check_params(const std::function<NodePtr()>& fn, const std::vector<NodePtr>& params,
                         double h = 1e-5);

}  // namespace flint::ag

#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace flint {

Tensor::Tensor(Shape s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
  if (v.size() != shape.numel())
    throw DataError("tensor data length " + std::to_string(v.size()) +
                    " does not match shape " + shape.str());
}

void Tensor::fill(double x) { std::fill(v.begin(), v.end(), x); }

void Tensor::add_(const Tensor& o) {
  if (shape != o.shape)
    throw DataError("tensor add: shape " + shape.str() + " vs " + o.shape.str());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
}

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace flint

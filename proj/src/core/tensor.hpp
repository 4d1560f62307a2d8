#pragma once

#include <vector>

#include "core/shape.hpp"

namespace flint {

// Contiguous row-major array of doubles. All arithmetic in the engine is
// double precision; float32 appears only in the on-disk formats.
struct Tensor {
  Shape shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), v(shape.numel(), 0.0) {}
  Tensor(Shape s, std::vector<double> data);
  Tensor(Shape s, double fill) : shape(std::move(s)), v(shape.numel(), fill) {}

  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  static Tensor zeros(const Shape& s) { return Tensor(s); }
  static Tensor scalar(double x) { return Tensor(Shape{1}, std::vector<double>{x}); }

  void fill(double x);
  void add_(const Tensor& o);  // in-place, shapes must match
  bool all_finite() const;
};

}  // namespace flint

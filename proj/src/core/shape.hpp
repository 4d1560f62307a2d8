#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace flint {

// Dense array extents, channel-first: dims[0] is the channel axis for
// network tensors, the remaining axes are spatial (slowest to fastest).
struct Shape {
  std::vector<int> d;

  Shape() = default;
  Shape(std::initializer_list<int> dims) : d(dims) { validate(); }
  explicit Shape(std::vector<int> dims) : d(std::move(dims)) { validate(); }

  int rank() const { return static_cast<int>(d.size()); }
  std::size_t numel() const;
  int operator[](int i) const { return d[static_cast<std::size_t>(i)]; }
  bool operator==(const Shape& o) const { return d == o.d; }
  bool operator!=(const Shape& o) const { return d != o.d; }
  std::string str() const;

private:
  void validate() const;
};

}  // namespace flint

#include "core/shape.hpp"

#include <sstream>

#include "core/error.hpp"

namespace flint {

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (int e : d) n *= static_cast<std::size_t>(e);
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) os << "x";
    os << d[i];
  }
  os << ")";
  return os.str();
}

void Shape::validate() const {
  if (d.empty() || d.size() > 5)
    throw DataError("shape rank must be in [1,5], got " + std::to_string(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] <= 0)
      throw DataError("shape axis " + std::to_string(i) + " must be positive, got " +
                      std::to_string(d[i]));
}

}  // namespace flint

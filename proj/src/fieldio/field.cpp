#include "fieldio/field.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace flint {

namespace {

std::size_t cell_count(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void check_dims(const std::vector<int>& dims) {
  if (dims.size() != 2 && dims.size() != 3)
    throw DataError("field rank must be 2 or 3, got " + std::to_string(dims.size()));
  for (int d : dims)
    if (d <= 0) throw DataError("field extents must be positive");
}

}  // namespace

Grid::Grid(std::vector<int> d, double fill) : dims(std::move(d)) {
  check_dims(dims);
  values.assign(cell_count(dims), fill);
}

std::size_t Grid::cells() const { return cell_count(dims); }

FlowGrid::FlowGrid(std::vector<int> d) : dims(std::move(d)) {
  check_dims(dims);
  components.assign(dims.size(), std::vector<double>(cell_count(dims), 0.0));
}

std::size_t FlowGrid::cells() const { return cell_count(dims); }

bool EnsembleSet::has_flows() const {
  for (const auto& m : members)
    if (!m.flows.empty()) return true;
  return false;
}

void EnsembleSet::validate() const {
  for (std::size_t mi = 0; mi < members.size(); ++mi) {
    const Member& m = members[mi];
    if (m.timesteps.empty())
      throw DataError("member " + std::to_string(mi) + " has no timesteps");
    const auto& dims = m.timesteps.front().dims;
    for (const auto& g : m.timesteps)
      if (g.dims != dims)
        throw DataError("member " + std::to_string(mi) + " has mixed grid dims");
    if (!m.flows.empty()) {
      if (m.flows.size() != m.timesteps.size())
        throw DataError("member " + std::to_string(mi) + " flows (" +
                        std::to_string(m.flows.size()) + ") do not align with timesteps (" +
                        std::to_string(m.timesteps.size()) + ")");
      for (const auto& f : m.flows)
        if (f.dims != dims) throw DataError("member " + std::to_string(mi) + " flow dims differ");
    }
  }
}

GridScale normalize(Grid& g) {
  auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
  GridScale s;
  if (*hi > *lo) {
    s.offset = *lo;
    s.scale = *hi - *lo;
    const double inv = 1.0 / s.scale;
    for (auto& v : g.values) v = (v - s.offset) * inv;
  } else {
    s.offset = *lo;
    s.scale = 1.0;
    for (auto& v : g.values) v = 0.0;
  }
  g.range_tag = ValueRange::unit;
  return s;
}

void denormalize(Grid& g, const GridScale& s) {
  for (auto& v : g.values) v = v * s.scale + s.offset;
  g.range_tag = ValueRange::raw;
}

double normalize_flow(FlowGrid& f) {
  double m = 0.0;
  for (const auto& c : f.components)
    for (double v : c) m = std::max(m, std::fabs(v));
  if (m == 0.0) return 1.0;
  const double inv = 1.0 / m;
  for (auto& c : f.components)
    for (auto& v : c) v *= inv;
  return m;
}

EnsembleScale normalize_ensemble(EnsembleSet& es) {
  double lo = 0.0, hi = 0.0, fmax = 0.0;
  bool first = true;
  for (const auto& m : es.members) {
    for (const auto& g : m.timesteps) {
      auto [mn, mx] = std::minmax_element(g.values.begin(), g.values.end());
      if (first) {
        lo = *mn;
        hi = *mx;
        first = false;
      } else {
        lo = std::min(lo, *mn);
        hi = std::max(hi, *mx);
      }
    }
    for (const auto& f : m.flows)
      for (const auto& c : f.components)
        for (double v : c) fmax = std::max(fmax, std::fabs(v));
  }
  if (first) throw DataError("normalize_ensemble: empty ensemble");

  EnsembleScale s;
  s.grid.offset = lo;
  s.grid.scale = hi > lo ? hi - lo : 1.0;
  s.flow_scale = fmax > 0.0 ? fmax : 1.0;

  const double ginv = 1.0 / s.grid.scale;
  const double finv = 1.0 / s.flow_scale;
  for (auto& m : es.members) {
    for (auto& g : m.timesteps) {
      if (hi > lo)
        for (auto& v : g.values) v = (v - lo) * ginv;
      else
        for (auto& v : g.values) v = 0.0;
      g.range_tag = ValueRange::unit;
    }
    for (auto& f : m.flows)
      for (auto& c : f.components)
        for (auto& v : c) v *= finv;
  }
  return s;
}

Tensor grid_to_tensor(const Grid& g) {
  std::vector<int> dims{1};
  dims.insert(dims.end(), g.dims.begin(), g.dims.end());
  return Tensor(Shape(dims), g.values);
}

Grid tensor_to_grid(const Tensor& t) {
  if (t.shape[0] != 1)
    throw DataError("tensor_to_grid: expected 1 channel, got " + std::to_string(t.shape[0]));
  Grid g;
  g.dims.assign(t.shape.d.begin() + 1, t.shape.d.end());
  check_dims(g.dims);
  g.values = t.v;
  return g;
}

Tensor flow_to_tensor(const FlowGrid& f) {
  std::vector<int> dims{f.rank()};
  dims.insert(dims.end(), f.dims.begin(), f.dims.end());
  Tensor t{Shape(dims)};
  const std::size_t n = f.cells();
  for (int c = 0; c < f.rank(); ++c)
    std::copy(f.components[c].begin(), f.components[c].end(), t.v.begin() + c * n);
  return t;
}

FlowGrid tensor_to_flow(const Tensor& t) {
  const int rank = t.shape.rank() - 1;
  if (t.shape[0] != rank)
    throw DataError("tensor_to_flow: component count " + std::to_string(t.shape[0]) +
                    " != spatial rank " + std::to_string(rank));
  FlowGrid f;
  f.dims.assign(t.shape.d.begin() + 1, t.shape.d.end());
  check_dims(f.dims);
  const std::size_t n = f.cells();
  f.components.assign(rank, std::vector<double>(n));
  for (int c = 0; c < rank; ++c)
    std::copy(t.v.begin() + c * n, t.v.begin() + (c + 1) * n, f.components[c].begin());
  return f;
}

}  // namespace flint

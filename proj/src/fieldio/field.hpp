#pragma once

#include <optional>
#include <vector>

#include "core/tensor.hpp"

namespace flint {

enum class ValueRange { raw, unit };

// Dense scalar field on a regular 2D/3D lattice. dims are (ny, nx) or
// (nz, ny, nx), values row-major with the last axis fastest.
struct Grid {
  std::vector<int> dims;
  std::vector<double> values;
  ValueRange range_tag = ValueRange::raw;

  Grid() = default;
  Grid(std::vector<int> d, double fill = 0.0);
  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t cells() const;
};

// Dense vector field, one displacement per cell, one component array per
// spatial axis in dims order. Units are cells per unit timestep.
struct FlowGrid {
  std::vector<int> dims;
  std::vector<std::vector<double>> components;

  FlowGrid() = default;
  FlowGrid(std::vector<int> d);
  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t cells() const;
};

struct Member {
  std::vector<double> sim_params;
  std::vector<Grid> timesteps;
  std::vector<FlowGrid> flows;  // empty or one per timestep
};

struct EnsembleSet {
  std::vector<Member> members;

  bool has_flows() const;
  void validate() const;  // uniform dims, flow alignment
};

// Affine map to [0,1]; original = out*scale + offset. A constant grid maps
// to all zeros with scale 1.
struct GridScale {
  double offset = 0.0;
  double scale = 1.0;
};
GridScale normalize(Grid& g);
void denormalize(Grid& g, const GridScale& s);

// Divide all components by the largest absolute component value so the
// result lies in [-1,1]; returns the divisor (1 for an all-zero flow).
double normalize_flow(FlowGrid& f);

// Dataset-level statistics for a consistent normalization across members.
struct EnsembleScale {
  GridScale grid;
  double flow_scale = 1.0;
};
EnsembleScale normalize_ensemble(EnsembleSet& es);

// channel-first tensor views
Tensor grid_to_tensor(const Grid& g);
Grid tensor_to_grid(const Tensor& t);
Tensor flow_to_tensor(const FlowGrid& f);
FlowGrid tensor_to_flow(const Tensor& t);

}  // namespace flint

#pragma once

#include <cstdint>
#include <vector>

#include "fieldio/field.hpp"

namespace flint {

// Rigid motion of a member's blob pattern. Velocities are stored in dims
// order (y,x or z,y,x), cells per unit timestep. Rotation is about the
// domain center (the z-axis through it, in 3D).
struct MotionSpec {
  enum class Kind { translate, rotate };
  Kind kind = Kind::translate;
  std::vector<double> velocity;  // translate
  double rate = 0.0;             // rotate, radians per step
};

struct SynthConfig {
  std::vector<int> dims;              // each extent >= 16
  int n_timesteps = 16;
  int n_blobs = 3;
  std::vector<MotionSpec> motions;    // one per member
  std::vector<std::vector<double>> sim_params;  // optional override, one per member
  double noise_sigma = 0.0;           // scalar fields only, never the flow
  std::uint64_t seed = 0;
};

struct Blob {
  std::vector<double> center;  // dims order
  double amp = 1.0;
  double sigma = 2.0;
};

// Deterministic blob layout per member, derived from the seed.
struct SynthPlan {
  SynthConfig cfg;
  std::vector<std::vector<Blob>> blobs0;  // per member, frame 0
};

SynthPlan synth_plan(const SynthConfig& cfg);

// Blob centers of a member at a frame under its rigid motion, centers
// wrapped periodically so structures never leave the domain.
std::vector<Blob> blobs_at(const SynthPlan& plan, int member, int frame);

// Analytic field value at an arbitrary (fractional) position, periodic
// minimum-image distance per axis.
double eval_blobs(const std::vector<Blob>& blobs, const std::vector<int>& dims,
                  const std::vector<double>& pos);

// Exact Eulerian velocity field of a member's motion (time-invariant).
FlowGrid analytic_flow(const SynthPlan& plan, int member);

// Full generation: blob frames plus exact analytic flows and sim-param tags.
EnsembleSet synth_ensemble(const SynthConfig& cfg);

}  // namespace flint

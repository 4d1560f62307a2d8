#pragma once

#include <cstdint>
#include <vector>

#include "fieldio/field.hpp"
#include "net/model_params.hpp"

namespace flint {

// Stacked coarse-to-fine interpolation network. Each block downsamples by a
// stride-2 conv, refines with two stride-1 convs, restores resolution with a
// stride-2 deconv and emits 2*rank flow channels plus one mask channel
// through a stride-1 head. PReLU follows every layer except the head.
struct FlintConfig {
  int rank = 2;
  int n_blocks = 4;
  std::vector<int> channels = {256, 192, 192, 128};
  int teacher_channels = 128;
  int desk_scale = 1;  // channel divisor for toy runs

  std::vector<int> scaled_channels() const;
  int scaled_teacher_channels() const;
  int head_channels() const { return 2 * rank + 1; }
  int block_input_channels(int block) const;  // block 0 vs refinement blocks
  int teacher_input_channels() const;
  void validate() const;

  static FlintConfig toy(int rank = 2);  // tiny config for gradient checks
};

struct BlockState {
  ag::NodePtr flow_s;       // time-backward flow, model units
  ag::NodePtr flow_u;       // time-forward flow, model units
  ag::NodePtr mask_logits;  // raw head output
  ag::NodePtr mask;         // sigmoid(mask_logits), in (0,1)
  int index = 0;
};

struct StudentOut {
  std::vector<BlockState> blocks;
  ag::NodePtr warped_s;  // last block's warp of D_s
  ag::NodePtr warped_u;
  ag::NodePtr d_hat;     // fused interpolant
};

struct TeacherOut {
  BlockState state;
  ag::NodePtr d_hat;
};

// Uniform +-sqrt(1/fan_in) init, deterministic under the seed; head layers
// are zero-initialized so the untrained network degenerates to averaging.
ModelParams build_flint(const FlintConfig& cfg, std::uint64_t seed);

// warp_scale converts model-unit flows to cell displacements when sampling.
StudentOut forward_student(const ModelParams& params, const FlintConfig& cfg,
                           const ag::NodePtr& d_s, const ag::NodePtr& d_u, double tau,
                           double warp_scale);

TeacherOut forward_teacher(const ModelParams& params, const FlintConfig& cfg,
                           const StudentOut& student, const ag::NodePtr& d_s,
                           const ag::NodePtr& d_u, const ag::NodePtr& d_gt, double tau,
                           double warp_scale);

struct InferOut {
  Grid d_hat;
  FlowGrid flow;  // last block's time-forward flow, model units
};

InferOut infer(const ModelParams& params, const FlintConfig& cfg, const Grid& d_s,
               const Grid& d_u, double tau, double warp_scale);

// Kernel tensors of the student's last block and of the teacher block, the
// weights covered by the L1 penalty.
std::vector<ag::NodePtr> last_block_kernels(const ModelParams& params, const FlintConfig& cfg);
std::vector<ag::NodePtr> teacher_kernels(const ModelParams& params);

// config <-> checkpoint metadata
void write_config_meta(const FlintConfig& cfg, Checkpoint& ck);
FlintConfig read_config_meta(const Checkpoint& ck);

}  // namespace flint

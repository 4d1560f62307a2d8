#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "fieldio/field.hpp"
#include "net/flint_net.hpp"
#include "net/model_params.hpp"

namespace flint {

// Teacher-free interpolation network whose block-body kernels are produced
// by the hypernetwork. Blocks hold five body layers (four convs and one
// deconv) plus a static head.
struct FlintStarConfig {
  int rank = 2;
  int n_blocks = 3;
  std::vector<int> channels = {128, 96, 64};
  int desk_scale = 1;

  std::vector<int> scaled_channels() const;
  int head_channels() const { return 2 * rank + 1; }
  int block_input_channels(int block) const;
  void validate() const;
};

// One hypernetwork-emitted kernel tensor: a window of theta.
struct SlotDesc {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
};

// Parameter-vector conditioning network: an MLP (three linear layers with
// PReLU and two dropout stages), a two-layer Conv1D stack, and a final
// linear layer emitting the flat weight vector theta.
struct HyperConfig {
  int param_dim = 1;
  std::vector<int> mlp_hidden = {32, 48, 64};
  double dropout = 0.1;
  int conv1d_channels = 4;
  int conv1d_kernel = 3;
  FlintStarConfig target;

  std::vector<SlotDesc> slots() const;  // block-major, layer order
  std::size_t theta_len() const;
  void validate() const;

  static HyperConfig toy(int param_dim = 1);
};

// Hypernetwork weights plus the static FLINT* parameters (body biases,
// PReLU slopes, heads), in one collection.
ModelParams build_hyper(const HyperConfig& cfg, std::uint64_t seed);

// theta for a standardized parameter vector. dropout_rng enables the two
// dropout stages (training); null runs the deterministic eval path.
ag::NodePtr hypernet_forward(const ModelParams& params, const HyperConfig& cfg,
                             const std::vector<double>& sim_params_std, Rng* dropout_rng);

// Same pipeline as the student forward but with N blocks, no teacher, and
// body kernels sliced out of theta.
StudentOut flintstar_forward(const ModelParams& params, const HyperConfig& cfg,
                             const ag::NodePtr& theta, const ag::NodePtr& d_s,
                             const ag::NodePtr& d_u, double tau, double warp_scale);

std::vector<double> standardize(const std::vector<double>& p, const std::vector<double>& mean,
                                const std::vector<double>& sd);

// Pairwise Euclidean distances between flattened theta vectors (eval mode).
std::vector<std::vector<double>> weight_similarity_matrix(
    const ModelParams& params, const HyperConfig& cfg,
    const std::vector<std::vector<double>>& param_sets_std);

// Fraction of sampled (anchor, closer, farther) triplets, ranked by
// Euclidean distance in the first feature space, whose ordering is preserved
// in the second. Ties in the ranking space are skipped.
double triplet_ordering_agreement(const std::vector<std::vector<double>>& rank_feats,
                                  const std::vector<std::vector<double>>& probe_feats,
                                  int n_triplets, std::uint64_t rng_seed);

// Agreement between data-space distances (flattened member fields) and
// theta-space distances of the corresponding generated weights.
double triplet_correlation(const ModelParams& params, const HyperConfig& cfg,
                           const EnsembleSet& dataset, const std::vector<double>& sim_mean,
                           const std::vector<double>& sim_sd, int n_triplets,
                           std::uint64_t rng_seed);

void write_hyper_meta(const HyperConfig& cfg, Checkpoint& ck);
HyperConfig read_hyper_meta(const Checkpoint& ck);

}  // namespace flint

#pragma once

#include <vector>

#include "core/node.hpp"

namespace flint {

// Loss balance factors. Spatial sums are normalized to per-cell means
// throughout so these transfer across grid sizes.
struct LossWeights {
  double lambda_flow = 0.2;
  double gamma = 0.8;
  double lambda_dis = 1e-4;
  double lambda_photo = 1e-6;
  double lambda_reg = 1e-8;
  double charbonnier_eps = 1e-9;
};

// rho(x) = sqrt(x^2 + eps^2), elementwise
ag::NodePtr charbonnier(const ag::NodePtr& x, double eps);

// Mean L1 reconstruction error against the ground truth; the teacher term
// (if present) is added on top.
ag::NodePtr l_rec(const ag::NodePtr& d_hat, const ag::NodePtr& d_hat_teach,
                  const ag::NodePtr& d_gt);

// Exponentially weighted per-block flow loss: sum_i gamma^(N-i) * L1, plus an
// unweighted teacher term when given. Per-cell L1 sums over components and
// averages over cells.
ag::NodePtr l_flow(const std::vector<ag::NodePtr>& block_flows, const ag::NodePtr& teacher_flow,
                   const ag::NodePtr& f_gt, double gamma);

// Distillation: mean per-cell L2 norm between student and teacher flows for
// both time directions. Teacher flows are targets, no gradient reaches them.
ag::NodePtr l_dis(const ag::NodePtr& student_fs, const ag::NodePtr& student_fu,
                  const ag::NodePtr& teacher_fs, const ag::NodePtr& teacher_fu);

// Photometric consistency: half the sum over both directions of the mean
// Charbonnier penalty between D_j and the prediction warped along flow_j.
ag::NodePtr l_photo(const ag::NodePtr& flow_s, const ag::NodePtr& flow_u, const ag::NodePtr& d_s,
                    const ag::NodePtr& d_u, const ag::NodePtr& d_hat, double eps);

// L1 penalty over the last block's kernels of both networks (raw sum).
ag::NodePtr l_reg(const std::vector<ag::NodePtr>& student_last_kernels,
                  const std::vector<ag::NodePtr>& teacher_kernels);

ag::NodePtr total_supervised(const ag::NodePtr& rec, const ag::NodePtr& flow,
                             const LossWeights& w);

ag::NodePtr total_unsupervised(const ag::NodePtr& rec, const ag::NodePtr& dis,
                               const ag::NodePtr& photo, const ag::NodePtr& reg,
                               const LossWeights& w);

}  // namespace flint

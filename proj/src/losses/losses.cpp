#include "losses/losses.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "warp/warp.hpp"

namespace flint {

using namespace ag;

namespace {

std::size_t spatial_cells(const Shape& s) {
  std::size_t n = 1;
  for (int a = 1; a < s.rank(); ++a) n *= static_cast<std::size_t>(s[a]);
  return n;
}

// per-cell L1 over components, averaged over cells
NodePtr mean_l1(const NodePtr& a, const NodePtr& b) {
  const double inv = 1.0 / static_cast<double>(spatial_cells(a->shape()));
  return scale(sum(ag::abs(sub(a, b))), inv);
}

}  // namespace

NodePtr charbonnier(const NodePtr& x, double eps) {
  return ag::sqrt(add_const(mul(x, x), eps * eps));
}

NodePtr l_rec(const NodePtr& d_hat, const NodePtr& d_hat_teach, const NodePtr& d_gt) {
  if (d_hat->shape() != d_gt->shape())
    throw DataError("l_rec: prediction " + d_hat->shape().str() + " vs ground truth " +
                    d_gt->shape().str());
  NodePtr loss = mean(ag::abs(sub(d_gt, d_hat)));
  if (d_hat_teach) {
    if (d_hat_teach->shape() != d_gt->shape())
      throw DataError("l_rec: teacher prediction shape mismatch");
    loss = add(loss, mean(ag::abs(sub(d_gt, d_hat_teach))));
  }
  return loss;
}

NodePtr l_flow(const std::vector<NodePtr>& block_flows, const NodePtr& teacher_flow,
               const NodePtr& f_gt, double gamma) {
  if (block_flows.empty()) throw DataError("l_flow: no block flows");
  const int n = static_cast<int>(block_flows.size());
  NodePtr loss;
  for (int i = 0; i < n; ++i) {
    if (block_flows[i]->shape() != f_gt->shape())
      throw DataError("l_flow: block " + std::to_string(i) + " flow " +
                      block_flows[i]->shape().str() + " vs ground truth " + f_gt->shape().str());
    // block i (0-based) carries weight gamma^(N-1-i)
    NodePtr term = scale(mean_l1(f_gt, block_flows[i]), std::pow(gamma, n - 1 - i));
    loss = loss ? add(loss, term) : term;
  }
  if (teacher_flow) {
    if (teacher_flow->shape() != f_gt->shape())
      throw DataError("l_flow: teacher flow shape mismatch");
    loss = add(loss, mean_l1(f_gt, teacher_flow));
  }
  return loss;
}

NodePtr l_dis(const NodePtr& student_fs, const NodePtr& student_fu, const NodePtr& teacher_fs,
              const NodePtr& teacher_fu) {
  if (student_fs->shape() != teacher_fs->shape() || student_fu->shape() != teacher_fu->shape())
    throw DataError("l_dis: student/teacher flow shape mismatch");
  auto direction = [](const NodePtr& s, const NodePtr& t) {
    NodePtr d = sub(s, detach(t));
    NodePtr norm = ag::sqrt(sum_channels(mul(d, d)));
    return mean(norm);
  };
  return add(direction(student_fs, teacher_fs), direction(student_fu, teacher_fu));
}

NodePtr l_photo(const NodePtr& flow_s, const NodePtr& flow_u, const NodePtr& d_s,
                const NodePtr& d_u, const NodePtr& d_hat, double eps) {
  if (d_s->shape() != d_hat->shape() || d_u->shape() != d_hat->shape())
    throw DataError("l_photo: field shape mismatch");
  auto direction = [&](const NodePtr& d_j, const NodePtr& flow_j) {
    NodePtr warped = backward_warp(d_hat, flow_j);
    return mean(charbonnier(sub(d_j, warped), eps));
  };
  return scale(add(direction(d_s, flow_s), direction(d_u, flow_u)), 0.5);
}

NodePtr l_reg(const std::vector<NodePtr>& student_last_kernels,
              const std::vector<NodePtr>& teacher_kernels) {
  if (student_last_kernels.empty() && teacher_kernels.empty())
    throw DataError("l_reg: no weights");
  NodePtr loss;
  for (const auto& w : student_last_kernels) {
    NodePtr term = sum(ag::abs(w));
    loss = loss ? add(loss, term) : term;
  }
  for (const auto& w : teacher_kernels) {
    NodePtr term = sum(ag::abs(w));
    loss = loss ? add(loss, term) : term;
  }
  return loss;
}

NodePtr total_supervised(const NodePtr& rec, const NodePtr& flow, const LossWeights& w) {
  return add(rec, scale(flow, w.lambda_flow));
}

NodePtr total_unsupervised(const NodePtr& rec, const NodePtr& dis, const NodePtr& photo,
                           const NodePtr& reg, const LossWeights& w) {
  return add(add(rec, scale(dis, w.lambda_dis)),
             add(scale(photo, w.lambda_photo), scale(reg, w.lambda_reg)));
}

}  // namespace flint

#include "net/flint_net.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "warp/warp.hpp"

namespace flint {

using namespace ag;

std::vector<int> FlintConfig::scaled_channels() const {
  std::vector<int> out;
  for (int c : channels) out.push_back(std::max(1, c / std::max(1, desk_scale)));
  return out;
}

int FlintConfig::scaled_teacher_channels() const {
  return std::max(1, teacher_channels / std::max(1, desk_scale));
}

int FlintConfig::block_input_channels(int block) const {
  // block 0: D_s, D_u, tau. later blocks add both warps, both flows, mask.
  if (block == 0) return 3;
  return 6 + 2 * rank;
}

int FlintConfig::teacher_input_channels() const { return block_input_channels(1) + 1; }

void FlintConfig::validate() const {
  if (rank != 2 && rank != 3) throw DataError("flint: rank must be 2 or 3");
  if (n_blocks < 2) throw DataError("flint: need at least 2 blocks");
  if (static_cast<int>(channels.size()) != n_blocks)
    throw DataError("flint: channel list length " + std::to_string(channels.size()) +
                    " != n_blocks " + std::to_string(n_blocks));
  for (int c : channels)
    if (c <= 0) throw DataError("flint: channels must be positive");
  if (teacher_channels <= 0) throw DataError("flint: teacher channels must be positive");
}

FlintConfig FlintConfig::toy(int rank) {
  FlintConfig cfg;
  cfg.rank = rank;
  cfg.n_blocks = 2;
  cfg.channels = {2, 2};
  cfg.teacher_channels = 2;
  return cfg;
}

namespace {

Tensor uniform_init(Shape s, double bound, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& v : t.v) v = rng.uniform(-bound, bound);
  return t;
}

std::vector<int> kdims(int co, int ci, int rank, int k) {
  std::vector<int> d{co, ci};
  for (int a = 0; a < rank; ++a) d.push_back(k);
  return d;
}

// One block: conv s2 -> conv s1 -> conv s1 -> deconv s2 -> head conv s1.
// Convs use kernel 3 / pad 1; the deconv uses kernel 2 / pad 0, the exact
// inverse of the stride-2 downsampling on even extents.
void add_block_params(ModelParams& p, const std::string& prefix, int in_ch, int ch, int head_ch,
                      int rank, Rng& rng) {
  auto add_conv = [&](const std::string& name, int ci, int co, int k, bool zero) {
    const double fan_in = static_cast<double>(ci) * std::pow(k, rank);
    const double bound = zero ? 0.0 : std::sqrt(1.0 / fan_in);
    p.add(prefix + name + ".kernel", uniform_init(Shape(kdims(co, ci, rank, k)), bound, rng));
    p.add(prefix + name + ".bias", uniform_init(Shape{co}, bound, rng));
  };
  add_conv("conv0", in_ch, ch, 3, false);
  p.add(prefix + "prelu0", Tensor(Shape{ch}, 0.25));
  add_conv("conv1", ch, ch, 3, false);
  p.add(prefix + "prelu1", Tensor(Shape{ch}, 0.25));
  add_conv("conv2", ch, ch, 3, false);
  p.add(prefix + "prelu2", Tensor(Shape{ch}, 0.25));
  {  // deconv kernels are stored (in, out, k...)
    const double bound = std::sqrt(1.0 / (static_cast<double>(ch) * std::pow(2, rank)));
    p.add(prefix + "deconv.kernel", uniform_init(Shape(kdims(ch, ch, rank, 2)), bound, rng));
    p.add(prefix + "deconv.bias", uniform_init(Shape{ch}, bound, rng));
  }
  p.add(prefix + "prelu3", Tensor(Shape{ch}, 0.25));
  add_conv("head", ch, head_ch, 3, true);
}

struct BlockTensors {
  NodePtr conv0_k, conv0_b, p0;
  NodePtr conv1_k, conv1_b, p1;
  NodePtr conv2_k, conv2_b, p2;
  NodePtr deconv_k, deconv_b, p3;
  NodePtr head_k, head_b;
};

BlockTensors block_tensors(const ModelParams& p, const std::string& prefix) {
  return BlockTensors{
      p.at(prefix + "conv0.kernel"),  p.at(prefix + "conv0.bias"),  p.at(prefix + "prelu0"),
      p.at(prefix + "conv1.kernel"),  p.at(prefix + "conv1.bias"),  p.at(prefix + "prelu1"),
      p.at(prefix + "conv2.kernel"),  p.at(prefix + "conv2.bias"),  p.at(prefix + "prelu2"),
      p.at(prefix + "deconv.kernel"), p.at(prefix + "deconv.bias"), p.at(prefix + "prelu3"),
      p.at(prefix + "head.kernel"),   p.at(prefix + "head.bias")};
}

NodePtr run_block(const BlockTensors& t, const NodePtr& input, int rank) {
  const std::vector<int> s1(rank, 1), s2(rank, 2), p1v(rank, 1), p0v(rank, 0);
  NodePtr h = prelu(conv(input, t.conv0_k, t.conv0_b, s2, p1v), t.p0);
  h = prelu(conv(h, t.conv1_k, t.conv1_b, s1, p1v), t.p1);
  h = prelu(conv(h, t.conv2_k, t.conv2_b, s1, p1v), t.p2);
  h = prelu(deconv(h, t.deconv_k, t.deconv_b, s2, p0v), t.p3);
  return conv(h, t.head_k, t.head_b, s1, p1v);
}

BlockState split_head(const NodePtr& head, int rank, int index) {
  BlockState st;
  st.flow_s = slice_channels(head, 0, rank);
  st.flow_u = slice_channels(head, rank, 2 * rank);
  st.mask_logits = slice_channels(head, 2 * rank, 2 * rank + 1);
  st.mask = sigmoid(st.mask_logits);
  st.index = index;
  return st;
}

NodePtr tau_channel(const Shape& field_shape, double tau) {
  return constant(Tensor(field_shape, tau));
}

void check_forward_inputs(const FlintConfig& cfg, const NodePtr& d_s, const NodePtr& d_u,
                          double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw DataError("flint forward: tau must lie strictly in (0,1), got " + std::to_string(tau));
  if (d_s->shape() != d_u->shape())
    throw DataError("flint forward: field shapes differ: " + d_s->shape().str() + " vs " +
                    d_u->shape().str());
  if (d_s->shape().rank() != cfg.rank + 1 || d_s->shape()[0] != 1)
    throw DataError("flint forward: expected (1, spatial^" + std::to_string(cfg.rank) +
                    ") fields, got " + d_s->shape().str());
  for (int a = 1; a <= cfg.rank; ++a)
    if (d_s->shape()[a] % 2 != 0 || d_s->shape()[a] < 4)
      throw DataError("flint forward: spatial extents must be even and >= 4, got " +
                      d_s->shape().str());
}

}  // namespace

ModelParams build_flint(const FlintConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  Rng rng(seed);
  const auto ch = cfg.scaled_channels();
  for (int b = 0; b < cfg.n_blocks; ++b) {
    add_block_params(p, "student.b" + std::to_string(b) + ".", cfg.block_input_channels(b),
                     ch[b], cfg.head_channels(), cfg.rank, rng);
  }
  add_block_params(p, "teacher.", cfg.teacher_input_channels(), cfg.scaled_teacher_channels(),
                   cfg.head_channels(), cfg.rank, rng);
  return p;
}

StudentOut forward_student(const ModelParams& params, const FlintConfig& cfg,
                           const NodePtr& d_s, const NodePtr& d_u, double tau,
                           double warp_scale) {
  check_forward_inputs(cfg, d_s, d_u, tau);
  const NodePtr tau_ch = tau_channel(d_s->shape(), tau);

  StudentOut out;
  NodePtr warped_s, warped_u;
  for (int b = 0; b < cfg.n_blocks; ++b) {
    NodePtr input;
    if (b == 0) {
      input = concat({d_s, d_u, tau_ch});
    } else {
      const BlockState& prev = out.blocks.back();
      warped_s = backward_warp(d_s, scale(prev.flow_s, warp_scale));
      warped_u = backward_warp(d_u, scale(prev.flow_u, warp_scale));
      input = concat({d_s, d_u, warped_s, warped_u, prev.flow_s, prev.flow_u, prev.mask, tau_ch});
    }
    NodePtr head = run_block(block_tensors(params, "student.b" + std::to_string(b) + "."),
                             input, cfg.rank);
    out.blocks.push_back(split_head(head, cfg.rank, b));
  }

  const BlockState& last = out.blocks.back();
  out.warped_s = backward_warp(d_s, scale(last.flow_s, warp_scale));
  out.warped_u = backward_warp(d_u, scale(last.flow_u, warp_scale));
  out.d_hat = fuse(out.warped_s, out.warped_u, last.mask);
  return out;
}

TeacherOut forward_teacher(const ModelParams& params, const FlintConfig& cfg,
                           const StudentOut& student, const NodePtr& d_s, const NodePtr& d_u,
                           const NodePtr& d_gt, double tau, double warp_scale) {
  if (!d_gt) throw DataError("flint teacher: ground-truth field is required");
  if (d_gt->shape() != d_s->shape())
    throw DataError("flint teacher: ground-truth shape " + d_gt->shape().str() +
                    " != field shape " + d_s->shape().str());
  const BlockState& last = student.blocks.back();
  const NodePtr tau_ch = tau_channel(d_s->shape(), tau);
  NodePtr input = concat({d_s, d_u, student.warped_s, student.warped_u, last.flow_s, last.flow_u,
                          last.mask, tau_ch, d_gt});

  NodePtr head = run_block(block_tensors(params, "teacher."), input, cfg.rank);
  TeacherOut t;
  t.state = split_head(head, cfg.rank, cfg.n_blocks);
  NodePtr tws = backward_warp(d_s, scale(t.state.flow_s, warp_scale));
  NodePtr twu = backward_warp(d_u, scale(t.state.flow_u, warp_scale));
  t.d_hat = fuse(tws, twu, t.state.mask);
  return t;
}

InferOut infer(const ModelParams& params, const FlintConfig& cfg, const Grid& d_s,
               const Grid& d_u, double tau, double warp_scale) {
  StudentOut out = forward_student(params, cfg, constant(grid_to_tensor(d_s)),
                                   constant(grid_to_tensor(d_u)), tau, warp_scale);
  InferOut r;
  r.d_hat = tensor_to_grid(out.d_hat->value);
  r.d_hat.range_tag = d_s.range_tag;
  r.flow = tensor_to_flow(out.blocks.back().flow_u->value);
  return r;
}

std::vector<NodePtr> last_block_kernels(const ModelParams& params, const FlintConfig& cfg) {
  const std::string prefix = "student.b" + std::to_string(cfg.n_blocks - 1) + ".";
  std::vector<NodePtr> out;
  for (const char* name : {"conv0", "conv1", "conv2", "deconv", "head"})
    out.push_back(params.at(prefix + name + ".kernel"));
  return out;
}

std::vector<NodePtr> teacher_kernels(const ModelParams& params) {
  std::vector<NodePtr> out;
  for (const char* name : {"conv0", "conv1", "conv2", "deconv", "head"})
    out.push_back(params.at(std::string("teacher.") + name + ".kernel"));
  return out;
}

void write_config_meta(const FlintConfig& cfg, Checkpoint& ck) {
  ck.meta.emplace_back("flint.rank", std::to_string(cfg.rank));
  ck.meta.emplace_back("flint.n_blocks", std::to_string(cfg.n_blocks));
  std::ostringstream ch;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i)
    ch << (i ? " " : "") << cfg.channels[i];
  ck.meta.emplace_back("flint.channels", ch.str());
  ck.meta.emplace_back("flint.teacher_channels", std::to_string(cfg.teacher_channels));
  ck.meta.emplace_back("flint.desk_scale", std::to_string(cfg.desk_scale));
}

FlintConfig read_config_meta(const Checkpoint& ck) {
  FlintConfig cfg;
  cfg.rank = std::stoi(ck.meta_value("flint.rank", "2"));
  cfg.n_blocks = std::stoi(ck.meta_value("flint.n_blocks", "4"));
  cfg.channels.clear();
  std::istringstream ch(ck.meta_value("flint.channels", "256 192 192 128"));
  int c;
  while (ch >> c) cfg.channels.push_back(c);
  cfg.teacher_channels = std::stoi(ck.meta_value("flint.teacher_channels", "128"));
  cfg.desk_scale = std::stoi(ck.meta_value("flint.desk_scale", "1"));
  cfg.validate();
  return cfg;
}

}  // namespace flint

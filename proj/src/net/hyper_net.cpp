#include "net/hyper_net.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "warp/warp.hpp"

namespace flint {

using namespace ag;

std::vector<int> FlintStarConfig::scaled_channels() const {
  std::vector<int> out;
  for (int c : channels) out.push_back(std::max(1, c / std::max(1, desk_scale)));
  return out;
}

int FlintStarConfig::block_input_channels(int block) const {
  if (block == 0) return 3;
  return 6 + 2 * rank;
}

void FlintStarConfig::validate() const {
  if (rank != 2 && rank != 3) throw DataError("flintstar: rank must be 2 or 3");
  if (n_blocks < 2) throw DataError("flintstar: need at least 2 blocks");
  if (static_cast<int>(channels.size()) != n_blocks)
    throw DataError("flintstar: channel list length != n_blocks");
  for (int c : channels)
    if (c <= 0) throw DataError("flintstar: channels must be positive");
}

namespace {

std::vector<int> kdims(int co, int ci, int rank, int k) {
  std::vector<int> d{co, ci};
  for (int a = 0; a < rank; ++a) d.push_back(k);
  return d;
}

}  // namespace

std::vector<SlotDesc> HyperConfig::slots() const {
  std::vector<SlotDesc> out;
  const auto ch = target.scaled_channels();
  std::size_t offset = 0;
  for (int b = 0; b < target.n_blocks; ++b) {
    const int in_ch = b == 0 ? target.block_input_channels(0) : target.block_input_channels(b);
    const std::string prefix = "star.b" + std::to_string(b) + ".";
    auto push = [&](const std::string& name, Shape s) {
      SlotDesc d{prefix + name, std::move(s), offset};
      offset += d.shape.numel();
      out.push_back(std::move(d));
    };
    push("conv0.kernel", Shape(kdims(ch[b], in_ch, target.rank, 3)));
    push("conv1.kernel", Shape(kdims(ch[b], ch[b], target.rank, 3)));
    push("conv2.kernel", Shape(kdims(ch[b], ch[b], target.rank, 3)));
    push("conv3.kernel", Shape(kdims(ch[b], ch[b], target.rank, 3)));
    push("deconv.kernel", Shape(kdims(ch[b], ch[b], target.rank, 2)));
  }
  return out;
}

std::size_t HyperConfig::theta_len() const {
  std::size_t n = 0;
  for (const auto& s : slots()) n += s.shape.numel();
  return n;
}

void HyperConfig::validate() const {
  target.validate();
  if (param_dim < 1) throw DataError("hyper: param_dim must be positive");
  if (mlp_hidden.size() != 3) throw DataError("hyper: expected three MLP layer sizes");
  for (int h : mlp_hidden)
    if (h <= 0) throw DataError("hyper: MLP sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("hyper: dropout must be in [0,1)");
  if (conv1d_channels <= 0 || mlp_hidden.back() % conv1d_channels != 0)
    throw DataError("hyper: last MLP size must be divisible by conv1d channels");
  if (conv1d_kernel <= 0 || conv1d_kernel % 2 == 0)
    throw DataError("hyper: conv1d kernel must be odd");
}

HyperConfig HyperConfig::toy(int param_dim) {
  HyperConfig cfg;
  cfg.param_dim = param_dim;
  cfg.mlp_hidden = {4, 4, 8};
  cfg.conv1d_channels = 2;
  cfg.target.channels = {2, 2};
  cfg.target.n_blocks = 2;
  return cfg;
}

namespace {

Tensor uniform_init(Shape s, double bound, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& v : t.v) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelParams build_hyper(const HyperConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  Rng rng(seed);

  // MLP
  int in = cfg.param_dim;
  for (int i = 0; i < 3; ++i) {
    const int out = cfg.mlp_hidden[i];
    const double bound = std::sqrt(1.0 / in);
    p.add("hyper.mlp" + std::to_string(i) + ".weight",
          uniform_init(Shape{out, in}, bound, rng));
    p.add("hyper.mlp" + std::to_string(i) + ".bias", uniform_init(Shape{out}, bound, rng));
    p.add("hyper.mlp" + std::to_string(i) + ".prelu", Tensor(Shape{1}, 0.25));
    in = out;
  }

  // Conv1D stack over the reshaped embedding
  const int c1 = cfg.conv1d_channels;
  for (int i = 0; i < 2; ++i) {
    const double bound = std::sqrt(1.0 / (c1 * cfg.conv1d_kernel));
    p.add("hyper.c1d" + std::to_string(i) + ".kernel",
          uniform_init(Shape{c1, c1, cfg.conv1d_kernel}, bound, rng));
    p.add("hyper.c1d" + std::to_string(i) + ".bias", uniform_init(Shape{c1}, bound, rng));
    p.add("hyper.c1d" + std::to_string(i) + ".prelu", Tensor(Shape{c1}, 0.25));
  }

  // Final linear layer: the weight starts an order below the per-slot bias
  // scale so early kernels stay near a standard conv init.
  const auto slots = cfg.slots();
  const std::size_t theta = cfg.theta_len();
  const int flat = cfg.mlp_hidden.back();
  p.add("hyper.out.weight",
        uniform_init(Shape{static_cast<int>(theta), flat}, 0.1 * std::sqrt(1.0 / flat), rng));
  {
    Tensor bias(Shape{static_cast<int>(theta)});
    for (const auto& s : slots) {
      const double fan_in = static_cast<double>(s.shape[1]) *
                            (s.shape.numel() / (static_cast<double>(s.shape[0]) * s.shape[1]));
      const double bound = std::sqrt(1.0 / fan_in);
      for (std::size_t i = 0; i < s.shape.numel(); ++i)
        bias[s.offset + i] = rng.uniform(-bound, bound);
    }
    p.add("hyper.out.bias", std::move(bias));
  }

  // Static FLINT* parameters: body biases, PReLU slopes, zero-initialized head.
  const auto ch = cfg.target.scaled_channels();
  for (int b = 0; b < cfg.target.n_blocks; ++b) {
    const std::string prefix = "star.b" + std::to_string(b) + ".";
    const double bound = std::sqrt(1.0 / ch[b]);
    for (const char* layer : {"conv0", "conv1", "conv2", "conv3", "deconv"})
      p.add(prefix + layer + ".bias", uniform_init(Shape{ch[b]}, bound, rng));
    for (int i = 0; i < 5; ++i)
      p.add(prefix + "prelu" + std::to_string(i), Tensor(Shape{ch[b]}, 0.25));
    p.add(prefix + "head.kernel",
          Tensor(Shape(kdims(cfg.target.head_channels(), ch[b], cfg.target.rank, 3)), 0.0));
    p.add(prefix + "head.bias", Tensor(Shape{cfg.target.head_channels()}, 0.0));
  }
  return p;
}

namespace {

NodePtr dropout_node(const NodePtr& x, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return x;
  Tensor mask(x->shape());
  const double keep = 1.0 - rate;
  for (auto& m : mask.v) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return mul(x, constant(std::move(mask)));
}

}  // namespace

NodePtr hypernet_forward(const ModelParams& params, const HyperConfig& cfg,
                         const std::vector<double>& sim_params_std, Rng* dropout_rng) {
  if (static_cast<int>(sim_params_std.size()) != cfg.param_dim)
    throw DataError("hypernet: expected " + std::to_string(cfg.param_dim) +
                    " simulation parameters, got " + std::to_string(sim_params_std.size()));

  NodePtr h = constant(Tensor(Shape{cfg.param_dim}, sim_params_std));
  for (int i = 0; i < 3; ++i) {
    const std::string prefix = "hyper.mlp" + std::to_string(i) + ".";
    h = linear(h, params.at(prefix + "weight"), params.at(prefix + "bias"));
    // PReLU over a rank-1 vector treats the whole vector as one channel stack
    h = prelu(reshape(h, Shape{h->shape()[0], 1}), params.at(prefix + "prelu"));
    h = reshape(h, Shape{h->shape()[0]});
    if (i < 2) h = dropout_node(h, cfg.dropout, dropout_rng);
  }

  const int c1 = cfg.conv1d_channels;
  const int length = cfg.mlp_hidden.back() / c1;
  h = reshape(h, Shape{c1, length});
  for (int i = 0; i < 2; ++i) {
    const std::string prefix = "hyper.c1d" + std::to_string(i) + ".";
    h = conv(h, params.at(prefix + "kernel"), params.at(prefix + "bias"), {1},
             {cfg.conv1d_kernel / 2});
    h = prelu(h, params.at(prefix + "prelu"));
  }
  h = reshape(h, Shape{c1 * length});
  return linear(h, params.at("hyper.out.weight"), params.at("hyper.out.bias"));
}

StudentOut flintstar_forward(const ModelParams& params, const HyperConfig& cfg,
                             const NodePtr& theta, const NodePtr& d_s, const NodePtr& d_u,
                             double tau, double warp_scale) {
  if (theta->value.size() != cfg.theta_len())
    throw DataError("flintstar: theta length " + std::to_string(theta->value.size()) +
                    " does not match the slot layout (" + std::to_string(cfg.theta_len()) + ")");
  if (!(tau > 0.0 && tau < 1.0))
    throw DataError("flintstar: tau must lie strictly in (0,1)");
  if (d_s->shape() != d_u->shape())
    throw DataError("flintstar: field shapes differ");
  const int rank = cfg.target.rank;
  for (int a = 1; a <= rank; ++a)
    if (d_s->shape()[a] % 2 != 0 || d_s->shape()[a] < 4)
      throw DataError("flintstar: spatial extents must be even and >= 4");

  const auto slots = cfg.slots();
  auto slot_kernel = [&](const std::string& name) -> NodePtr {
    for (const auto& s : slots)
      if (s.name == name) return slice_flat(theta, s.offset, s.shape);
    throw DataError("flintstar: unknown slot " + name);
  };

  const std::vector<int> s1(rank, 1), s2(rank, 2), pad1(rank, 1), pad0(rank, 0);
  const NodePtr tau_ch = constant(Tensor(d_s->shape(), tau));

  StudentOut out;
  for (int b = 0; b < cfg.target.n_blocks; ++b) {
    const std::string prefix = "star.b" + std::to_string(b) + ".";
    NodePtr input;
    if (b == 0) {
      input = concat({d_s, d_u, tau_ch});
    } else {
      const BlockState& prev = out.blocks.back();
      NodePtr ws = backward_warp(d_s, scale(prev.flow_s, warp_scale));
      NodePtr wu = backward_warp(d_u, scale(prev.flow_u, warp_scale));
      input = concat({d_s, d_u, ws, wu, prev.flow_s, prev.flow_u, prev.mask, tau_ch});
    }
    NodePtr h = input;
    const char* convs[4] = {"conv0", "conv1", "conv2", "conv3"};
    for (int li = 0; li < 4; ++li) {
      h = conv(h, slot_kernel(prefix + convs[li] + ".kernel"),
               params.at(prefix + convs[li] + ".bias"), li == 0 ? s2 : s1, pad1);
      h = prelu(h, params.at(prefix + "prelu" + std::to_string(li)));
    }
    h = deconv(h, slot_kernel(prefix + "deconv.kernel"), params.at(prefix + "deconv.bias"), s2,
               pad0);
    h = prelu(h, params.at(prefix + "prelu4"));
    NodePtr head = conv(h, params.at(prefix + "head.kernel"), params.at(prefix + "head.bias"),
                        s1, pad1);
    BlockState st;
    st.flow_s = slice_channels(head, 0, rank);
    st.flow_u = slice_channels(head, rank, 2 * rank);
    st.mask_logits = slice_channels(head, 2 * rank, 2 * rank + 1);
    st.mask = sigmoid(st.mask_logits);
    st.index = b;
    out.blocks.push_back(std::move(st));
  }

  const BlockState& last = out.blocks.back();
  out.warped_s = backward_warp(d_s, scale(last.flow_s, warp_scale));
  out.warped_u = backward_warp(d_u, scale(last.flow_u, warp_scale));
  out.d_hat = fuse(out.warped_s, out.warped_u, last.mask);
  return out;
}

std::vector<double> standardize(const std::vector<double>& p, const std::vector<double>& mean,
                                const std::vector<double>& sd) {
  if (p.size() != mean.size() || p.size() != sd.size())
    throw DataError("standardize: dimension mismatch");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out[i] = (p[i] - mean[i]) / (sd[i] > 0.0 ? sd[i] : 1.0);
  return out;
}

std::vector<std::vector<double>> weight_similarity_matrix(
    const ModelParams& params, const HyperConfig& cfg,
    const std::vector<std::vector<double>>& param_sets_std) {
  const std::size_t n = param_sets_std.size();
  if (n < 2) throw DataError("weight_similarity_matrix: need at least 2 parameter sets");
  std::vector<std::vector<double>> thetas;
  thetas.reserve(n);
  for (const auto& p : param_sets_std)
    thetas.push_back(hypernet_forward(params, cfg, p, nullptr)->value.v);

  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < thetas[i].size(); ++k) {
        const double d = thetas[i][k] - thetas[j][k];
        d2 += d * d;
      }
      m[i][j] = m[j][i] = std::sqrt(d2);
    }
  return m;
}

double triplet_ordering_agreement(const std::vector<std::vector<double>>& rank_feats,
                                  const std::vector<std::vector<double>>& probe_feats,
                                  int n_triplets, std::uint64_t rng_seed) {
  const std::size_t n = rank_feats.size();
  if (n < 3) throw DataError("triplet ordering: need at least 3 members");
  if (probe_feats.size() != n) throw DataError("triplet ordering: feature count mismatch");

  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      d2 += d * d;
    }
    return std::sqrt(d2);
  };

  Rng rng(rng_seed);
  int preserved = 0, counted = 0;
  long guard = 0;
  while (counted < n_triplets && guard < 100L * n_triplets) {
    ++guard;
    const std::size_t a = rng.index(n);
    std::size_t i = rng.index(n), j = rng.index(n);
    if (a == i || a == j || i == j) continue;
    const double di = dist(rank_feats[a], rank_feats[i]);
    const double dj = dist(rank_feats[a], rank_feats[j]);
    if (di == dj) continue;
    const std::size_t closer = di < dj ? i : j;
    const std::size_t farther = di < dj ? j : i;
    if (dist(probe_feats[a], probe_feats[closer]) < dist(probe_feats[a], probe_feats[farther]))
      ++preserved;
    ++counted;
  }
  if (counted == 0) throw DataError("triplet ordering: no usable triplets");
  return static_cast<double>(preserved) / counted;
}

double triplet_correlation(const ModelParams& params, const HyperConfig& cfg,
                           const EnsembleSet& dataset, const std::vector<double>& sim_mean,
                           const std::vector<double>& sim_sd, int n_triplets,
                           std::uint64_t rng_seed) {
  const std::size_t n = dataset.members.size();
  if (n < 3) throw DataError("triplet_correlation: need at least 3 members");

  // data-space features: flattened concatenated scalar fields per member
  std::vector<std::vector<double>> feats;
  feats.reserve(n);
  for (const auto& m : dataset.members) {
    std::vector<double> f;
    for (const auto& g : m.timesteps) f.insert(f.end(), g.values.begin(), g.values.end());
    feats.push_back(std::move(f));
  }
  std::vector<std::vector<double>> thetas;
  thetas.reserve(n);
  for (const auto& m : dataset.members)
    thetas.push_back(
        hypernet_forward(params, cfg, standardize(m.sim_params, sim_mean, sim_sd), nullptr)
            ->value.v);

  return triplet_ordering_agreement(feats, thetas, n_triplets, rng_seed);
}

void write_hyper_meta(const HyperConfig& cfg, Checkpoint& ck) {
  ck.meta.emplace_back("hyper.param_dim", std::to_string(cfg.param_dim));
  std::ostringstream mh;
  for (std::size_t i = 0; i < cfg.mlp_hidden.size(); ++i)
    mh << (i ? " " : "") << cfg.mlp_hidden[i];
  ck.meta.emplace_back("hyper.mlp_hidden", mh.str());
  ck.meta.emplace_back("hyper.dropout", std::to_string(cfg.dropout));
  ck.meta.emplace_back("hyper.conv1d_channels", std::to_string(cfg.conv1d_channels));
  ck.meta.emplace_back("hyper.conv1d_kernel", std::to_string(cfg.conv1d_kernel));
  ck.meta.emplace_back("hyper.star.rank", std::to_string(cfg.target.rank));
  ck.meta.emplace_back("hyper.star.n_blocks", std::to_string(cfg.target.n_blocks));
  std::ostringstream ch;
  for (std::size_t i = 0; i < cfg.target.channels.size(); ++i)
    ch << (i ? " " : "") << cfg.target.channels[i];
  ck.meta.emplace_back("hyper.star.channels", ch.str());
  ck.meta.emplace_back("hyper.star.desk_scale", std::to_string(cfg.target.desk_scale));
}

HyperConfig read_hyper_meta(const Checkpoint& ck) {
  HyperConfig cfg;
  cfg.param_dim = std::stoi(ck.meta_value("hyper.param_dim", "1"));
  cfg.mlp_hidden.clear();
  std::istringstream mh(ck.meta_value("hyper.mlp_hidden", "32 48 64"));
  int v;
  while (mh >> v) cfg.mlp_hidden.push_back(v);
  cfg.dropout = std::stod(ck.meta_value("hyper.dropout", "0.1"));
  cfg.conv1d_channels = std::stoi(ck.meta_value("hyper.conv1d_channels", "4"));
  cfg.conv1d_kernel = std::stoi(ck.meta_value("hyper.conv1d_kernel", "3"));
  cfg.target.rank = std::stoi(ck.meta_value("hyper.star.rank", "2"));
  cfg.target.n_blocks = std::stoi(ck.meta_value("hyper.star.n_blocks", "3"));
  cfg.target.channels.clear();
  std::istringstream ch(ck.meta_value("hyper.star.channels", "128 96 64"));
  while (ch >> v) cfg.target.channels.push_back(v);
  cfg.target.desk_scale = std::stoi(ck.meta_value("hyper.star.desk_scale", "1"));
  cfg.validate();
  return cfg;
}

}  // namespace flint

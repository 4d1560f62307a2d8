#include "train/trainer.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "losses/losses.hpp"
#include "net/flint_net.hpp"

namespace flint {

using namespace ag;

void TrainConfig::validate() const {
  if (max_epochs < 1) throw DataError("train: max_epochs must be positive");
  if (steps_per_epoch < 1 || batch_size < 1)
    throw DataError("train: steps and batch size must be positive");
  if (!(lr_final > 0.0) || !(lr_base >= lr_final))
    throw DataError("train: need 0 < final lr <= base lr");
  if (window < 2) throw DataError("train: window must be >= 2");
  if (patience < 1) throw DataError("train: patience must be positive");
  if (val_members < 1) throw DataError("train: need at least one validation member");
  if (val_triplets < 1) throw DataError("train: need at least one validation triplet");
  if (weight_decay < 0.0) throw DataError("train: weight decay must be nonnegative");
}

Triplet sample_triplet(int member, int n_timesteps, int window, Rng& rng) {
  if (n_timesteps < 3)
    throw DataError("sample_triplet: member " + std::to_string(member) + " has only " +
                    std::to_string(n_timesteps) + " timesteps, need 3");
  if (window < 2) throw DataError("sample_triplet: window must be >= 2");
  const int max_gap = std::min(window, n_timesteps - 1);
  Triplet tr;
  tr.member = member;
  const int gap = 2 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_gap - 1)));
  tr.s = static_cast<int>(rng.index(static_cast<std::uint64_t>(n_timesteps - gap)));
  tr.u = tr.s + gap;
  tr.t = tr.s + 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(gap - 1)));
  return tr;
}

double cosine_lr(int epoch, int max_epochs, double base, double final_lr) {
  const double c = std::cos(M_PI * static_cast<double>(epoch) / max_epochs);
  return final_lr + 0.5 * (base - final_lr) * (1.0 + c);
}

AdamW::AdamW(std::vector<NodePtr> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(Tensor::zeros(p->value.shape));
    v_.emplace_back(Tensor::zeros(p->value.shape));
  }
}

void AdamW::step(double lr, double weight_decay, double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& p = *params_[i];
    if (p.grad.shape != p.value.shape) throw DataError("opt_step: gradient shape mismatch");
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j] * grad_scale;
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
      p.value[j] -= lr * weight_decay * p.value[j];
    }
  }
}

bool EarlyStopper::observe(int epoch, double val_loss) {
  if (best_epoch_ < 0 || val_loss < best_val_) {
    best_epoch_ = epoch;
    best_val_ = val_loss;
    return false;
  }
  return epoch - best_epoch_ >= patience_;
}

namespace {

struct LossContext {
  const TrainConfig* cfg;
  const ModelParams* params;
  const EnsembleSet* data;  // normalized
  double warp_scale;
  std::vector<double> sim_mean, sim_sd;
  LossWeights w;
};

NodePtr item_loss(const LossContext& ctx, const Triplet& tr, Rng* dropout_rng) {
  const Member& m = ctx.data->members[tr.member];
  const NodePtr d_s = constant(grid_to_tensor(m.timesteps[tr.s]));
  const NodePtr d_u = constant(grid_to_tensor(m.timesteps[tr.u]));
  const NodePtr d_gt = constant(grid_to_tensor(m.timesteps[tr.t]));
  const double tau = tr.tau();

  auto flow_target = [&]() {
    Tensor fgt = flow_to_tensor(m.flows[tr.t]);
    if (ctx.cfg->scale_corrected_flow)
      for (auto& v : fgt.v) v *= tr.gap_tu();
    return constant(std::move(fgt));
  };

  switch (ctx.cfg->mode) {
    case TrainMode::flow_supervised: {
      StudentOut s =
          forward_student(*ctx.params, ctx.cfg->flint, d_s, d_u, tau, ctx.warp_scale);
      TeacherOut t = forward_teacher(*ctx.params, ctx.cfg->flint, s, d_s, d_u, d_gt, tau,
                                     ctx.warp_scale);
      std::vector<NodePtr> flows;
      for (const auto& st : s.blocks) flows.push_back(st.flow_u);
      NodePtr rec = l_rec(s.d_hat, t.d_hat, d_gt);
      NodePtr flow = l_flow(flows, t.state.flow_u, flow_target(), ctx.w.gamma);
      return total_supervised(rec, flow, ctx.w);
    }
    case TrainMode::flow_unsupervised: {
      StudentOut s =
          forward_student(*ctx.params, ctx.cfg->flint, d_s, d_u, tau, ctx.warp_scale);
      TeacherOut t = forward_teacher(*ctx.params, ctx.cfg->flint, s, d_s, d_u, d_gt, tau,
                                     ctx.warp_scale);
      const BlockState& last = s.blocks.back();
      NodePtr rec = l_rec(s.d_hat, t.d_hat, d_gt);
      NodePtr dis = l_dis(last.flow_s, last.flow_u, t.state.flow_s, t.state.flow_u);
      NodePtr photo = l_photo(scale(last.flow_s, ctx.warp_scale),
                              scale(last.flow_u, ctx.warp_scale), d_s, d_u, s.d_hat,
                              ctx.w.charbonnier_eps);
      NodePtr reg = l_reg(last_block_kernels(*ctx.params, ctx.cfg->flint),
                          teacher_kernels(*ctx.params));
      return total_unsupervised(rec, dis, photo, reg, ctx.w);
    }
    case TrainMode::hyper: {
      NodePtr theta = hypernet_forward(
          *ctx.params, ctx.cfg->hyper, standardize(m.sim_params, ctx.sim_mean, ctx.sim_sd),
          dropout_rng);
      StudentOut s = flintstar_forward(*ctx.params, ctx.cfg->hyper, theta, d_s, d_u, tau,
                                       ctx.warp_scale);
      std::vector<NodePtr> flows;
      for (const auto& st : s.blocks) flows.push_back(st.flow_u);
      NodePtr rec = l_rec(s.d_hat, nullptr, d_gt);
      NodePtr flow = l_flow(flows, nullptr, flow_target(), ctx.w.gamma);
      return total_supervised(rec, flow, ctx.w);
    }
  }
  throw DataError("train: unknown mode");
}

}  // namespace

TrainResult train(const EnsembleSet& dataset_raw, const TrainConfig& cfg) {
  cfg.validate();
  dataset_raw.validate();

  const int n_members = static_cast<int>(dataset_raw.members.size());
  const int n_train = n_members - cfg.val_members;
  if (n_train < 1)
    throw DataError("train: empty training split (" + std::to_string(n_members) + " members, " +
                    std::to_string(cfg.val_members) + " reserved for validation)");

  EnsembleSet data = dataset_raw;  // normalized working copy
  EnsembleScale scale_stats = normalize_ensemble(data);

  const bool needs_flow =
      cfg.mode == TrainMode::flow_supervised || cfg.mode == TrainMode::hyper;
  for (int mi = 0; mi < n_members; ++mi) {
    const Member& m = data.members[mi];
    if (m.timesteps.size() < 3)
      throw DataError("train: member " + std::to_string(mi) + " has fewer than 3 timesteps");
    if (needs_flow && m.flows.empty())
      throw DataError("train: member " + std::to_string(mi) +
                      " lacks ground-truth flow required by this mode");
  }

  LossContext ctx;
  ctx.cfg = &cfg;
  ctx.data = &data;
  ctx.warp_scale = cfg.mode == TrainMode::flow_unsupervised ? 1.0 : scale_stats.flow_scale;

  ModelParams params;
  if (cfg.mode == TrainMode::hyper) {
    const std::size_t pd = static_cast<std::size_t>(cfg.hyper.param_dim);
    for (int mi = 0; mi < n_members; ++mi)
      if (data.members[mi].sim_params.size() != pd)
        throw DataError("train: member " + std::to_string(mi) + " has " +
                        std::to_string(data.members[mi].sim_params.size()) +
                        " simulation parameters, expected " + std::to_string(pd));
    ctx.sim_mean.assign(pd, 0.0);
    ctx.sim_sd.assign(pd, 0.0);
    for (int mi = 0; mi < n_train; ++mi)
      for (std::size_t k = 0; k < pd; ++k) ctx.sim_mean[k] += data.members[mi].sim_params[k];
    for (auto& v : ctx.sim_mean) v /= n_train;
    for (int mi = 0; mi < n_train; ++mi)
      for (std::size_t k = 0; k < pd; ++k) {
        const double d = data.members[mi].sim_params[k] - ctx.sim_mean[k];
        ctx.sim_sd[k] += d * d;
      }
    for (auto& v : ctx.sim_sd) v = std::sqrt(v / n_train);
    params = build_hyper(cfg.hyper, cfg.seed);
  } else {
    params = build_flint(cfg.flint, cfg.seed);
  }
  ctx.params = &params;

  Rng root(cfg.seed);
  Rng triplet_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);
  Rng val_rng = root.fork(3);

  // fixed validation set
  std::vector<Triplet> val_set;
  for (int i = 0; i < cfg.val_triplets; ++i) {
    const int mi = n_train + static_cast<int>(val_rng.index(cfg.val_members));
    Triplet tr = sample_triplet(mi, static_cast<int>(data.members[mi].timesteps.size()),
                                cfg.window, val_rng);
    val_set.push_back(tr);
  }

  AdamW opt(params.nodes());
  EarlyStopper stopper(cfg.patience);
  TrainHistory history;
  std::vector<Tensor> best_values;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.max_epochs, cfg.lr_base, cfg.lr_final);
    double train_loss = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      params.zero_grads();
      double batch_loss = 0.0;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const int mi = static_cast<int>(triplet_rng.index(n_train));
        Triplet tr = sample_triplet(mi, static_cast<int>(data.members[mi].timesteps.size()),
                                    cfg.window, triplet_rng);
        NodePtr loss = item_loss(ctx, tr, cfg.mode == TrainMode::hyper ? &dropout_rng : nullptr);
        backward(loss);
        batch_loss += loss->value[0];
      }
      batch_loss /= cfg.batch_size;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step));
      opt.step(lr, cfg.weight_decay, 1.0 / cfg.batch_size);
      train_loss += batch_loss;
    }
    train_loss /= cfg.steps_per_epoch;

    double val_loss = 0.0;
    for (const Triplet& tr : val_set) val_loss += item_loss(ctx, tr, nullptr)->value[0];
    val_loss /= static_cast<double>(val_set.size());
    if (!std::isfinite(val_loss))
      throw NumericError("train: validation loss diverged at epoch " + std::to_string(epoch));

    history.rows.push_back({epoch, train_loss, val_loss, lr});

    const int prev_best = stopper.best_epoch();
    const bool stop = stopper.observe(epoch, val_loss);
    if (stopper.best_epoch() == epoch && prev_best != epoch) {
      best_values.clear();
      for (const auto& [_, node] : params.entries()) best_values.push_back(node->value);
    }
    if (stop) break;
  }

  history.best_epoch = stopper.best_epoch();
  history.best_val = stopper.best_val();

  TrainResult result;
  for (std::size_t i = 0; i < params.entries().size(); ++i)
    result.params.add(params.entries()[i].first, best_values[i]);
  result.history = std::move(history);
  result.scale = scale_stats;
  result.sim_mean = std::move(ctx.sim_mean);
  result.sim_sd = std::move(ctx.sim_sd);
  return result;
}

}  // namespace flint

#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "fieldio/field.hpp"
#include "net/hyper_net.hpp"
#include "net/model_params.hpp"

namespace flint {

enum class TrainMode { flow_supervised, flow_unsupervised, hyper };

struct TrainConfig {
  TrainMode mode = TrainMode::flow_supervised;
  int max_epochs = 300;
  int steps_per_epoch = 8;
  int batch_size = 8;
  double lr_base = 6e-4;
  double lr_final = 6e-6;
  double weight_decay = 1e-4;
  int patience = 30;
  int window = 12;  // max gap u - s when sampling triplets
  int val_members = 1;
  int val_triplets = 16;
  std::uint64_t seed = 0;
  // Compare block flows against the ground-truth velocity scaled by the
  // sampled time gap (consistent with warping) instead of the velocity
  // itself; inference divides the gap back out.
  bool scale_corrected_flow = false;
  FlintConfig flint;   // flow modes
  HyperConfig hyper;   // hyper mode

  void validate() const;
};

struct TrainHistory {
  struct Row {
    int epoch;
    double train_loss;
    double val_loss;
    double lr;
  };
  std::vector<Row> rows;
  int best_epoch = -1;
  double best_val = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation snapshot
  TrainHistory history;
  EnsembleScale scale;  // normalization applied to the dataset
  std::vector<double> sim_mean, sim_sd;  // hyper mode standardization
};

// One training sample: indices into a member's timesteps.
struct Triplet {
  int member = 0;
  int s = 0, t = 0, u = 0;
  double tau() const { return static_cast<double>(t - s) / (u - s); }
  int gap_tu() const { return u - t; }
};

// s < t < u with u - s <= window, t uniform over the strict interior.
Triplet sample_triplet(int member, int n_timesteps, int window, Rng& rng);

// final + (base - final) * (1 + cos(pi * epoch / max_epochs)) / 2
double cosine_lr(int epoch, int max_epochs, double base, double final_lr);

// Adaptive first/second-moment update with bias correction, followed by
// decoupled weight decay p <- p - lr*wd*p.
class AdamW {
public:
  explicit AdamW(std::vector<ag::NodePtr> params, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);
  // consumes node->grad * grad_scale; caller zeroes grads afterwards
  void step(double lr, double weight_decay, double grad_scale = 1.0);

private:
  std::vector<ag::NodePtr> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Stops after `patience` epochs without a validation improvement.
class EarlyStopper {
public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool observe(int epoch, double val_loss);
  int best_epoch() const { return best_epoch_; }
  double best_val() const { return best_val_; }

private:
  int patience_;
  int best_epoch_ = -1;
  double best_val_ = 0.0;
};

// Full optimization loop over a raw (unnormalized) ensemble. Members are
// split by index: the last val_members validate, the rest train. Returns the
// parameters of the best validation epoch.
TrainResult train(const EnsembleSet& dataset_raw, const TrainConfig& cfg);

}  // namespace flint

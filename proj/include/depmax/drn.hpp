#pragma once

#include "depmax/data.hpp"
#include "depmax/lsmi.hpp"
#include "depmax/net.hpp"

#include <string>
#include <vector>

namespace depmax::drn {

enum class DepMeasure { lsmi, kl, jsd, none };

struct AugmentConfig {
  double noise_std = 0.0;     // additive Gaussian noise
  int smooth_radius = 0;      // moving average over feature coordinates
  double scale_range = 0.0;   // multiplicative factor in 1 +- range
  double shift_range = 0.0;   // additive offset in +- range
  double zoom_range = 0.0;    // coordinate rescale factor in 1 +- range
};

struct TrainConfig {
  double lambda_max = 0.5;   // consistency weight
  double beta_max = 0.1;     // dependence weight
  int ramp_epochs = 30;
  double eta = 0.99;         // EMA decay; 0.9998 at full scale
  int epochs = 300;
  int warmup_epochs = 20;
  double lr_peak = 4e-5;
  double wd_start = 2e-5;
  double wd_end = 2e-2;
  double label_eps = 0.4;
  int early_stop_patience = 100;
  DepMeasure dep_measure = DepMeasure::lsmi;
  lsmi::Config lsmi_cfg;
  AugmentConfig aug;
  std::uint64_t seed = 0;
  int batch_size = 64;
  net::Config net_cfg;
  // Which network the per-epoch validation (and early stopping) scores.
  // The teacher is the EMA ensemble; either choice applies identically to
  // the supervised baseline.
  enum class Eval { student, teacher };
  Eval eval = Eval::student;
};

struct DualState {
  net::Params theta_s;
  net::Params theta_t;
  net::OptimState optim;
  long tau = 0;  // optimizer/EMA step counter
  int epoch = 0;
};

struct LossBreakdown {
  double ce = 0.0, cons = 0.0, dep = 0.0, total = 0.0;
  double lr = 0.0, wd = 0.0, lambda_eff = 0.0, beta_eff = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0, wd = 0.0, lambda_eff = 0.0, beta_eff = 0.0;
  double ce = 0.0, cons = 0.0, dep = 0.0, total = 0.0;
  double train_acc = 0.0, val_acc = 0.0, val_macro_f1 = 0.0;
};

struct TrainResult {
  DualState best_state;
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val_macro_f1 = 0.0;
};

struct EvalResult {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

/// theta_t <- eta theta_t + (1 - eta) theta_s, every tensor.
void ema_update(net::Params& theta_t, const net::Params& theta_s, double eta);

/// Linear ramp: max_val * min(1, epoch / ramp_epochs).
double ramp(int epoch, int ramp_epochs, double max_val);

/// Linear warmup to lr_peak over warmup_epochs, then cosine decay to 0.
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Increasing cosine from wd_start to wd_end across all epochs.
double wd_schedule(int epoch, const TrainConfig& cfg);

/// Two independent draws of the stochastic transform chain
/// noise -> smoothing -> scale -> shift -> zoom. All-zero magnitudes
/// reproduce x exactly; the rng draw count per call is fixed.
std::pair<Vector, Vector> augment_pair(const Vector& x,
                                       const AugmentConfig& cfg,
                                       CounterRng& rng);

struct AltDiv {
  double value = 0.0;
  Matrix d_ps;
};

/// Row-wise KL or Jensen-Shannon divergence between softmax-normalized
/// projection rows, averaged over the batch; gradient w.r.t. ps only.
AltDiv alt_divergence(const Matrix& ps, const Matrix& pt, DepMeasure kind);

struct TotalLoss {
  LossBreakdown breakdown;
  Matrix d_logits;  // w.r.t. student logits
  Matrix d_proj;    // w.r.t. student projection
};

/// Composite objective CE + lambda_eff MSE(softmax ys, softmax yt)
/// + beta_eff d_l(ps, pt). With the lsmi measure d_l = -score, so
/// descending the total maximizes dependence; KL/JSD enter positively.
/// The teacher-side tensors are constants.
TotalLoss total_loss(const Matrix& ys_logits, const Matrix& yt_logits,
                     const Matrix& ps, const Matrix& pt,
                     const std::vector<int>& labels, const TrainConfig& cfg,
                     const lsmi::Resolved& lsmi_rs, int epoch);

/// Full training loop: per step augment, student forward, teacher forward,
/// composite loss, student backward, AdamW with scheduled lr/wd, EMA
/// teacher update. Early-stops on validation macro F1 and returns the
/// best-validation state plus the per-epoch history.
TrainResult train(const TrainConfig& cfg, const data::Labeled& train_set,
                  const data::Labeled& val_set);

/// Argmax predictions of the classification head; macro F1 counts a class
/// absent from both predictions and labels as 0.
EvalResult evaluate(const net::Params& theta, const data::Labeled& ds);

/// One CSV row per epoch:
/// epoch,lr,wd,lambda_eff,beta_eff,ce,cons,dep,total,train_acc,val_acc,val_macro_f1
void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& history);

const char* variant_name(const TrainConfig& cfg);

}  // namespace depmax::drn

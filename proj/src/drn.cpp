#include "depmax/drn.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace depmax::drn {

namespace {

Vector moving_average(const Vector& x, int radius) {
  if (radius <= 0) return x;
  const Index d = x.size();
  Vector out(d);
  for (Index i = 0; i < d; ++i) {
    const Index lo = std::max<Index>(0, i - radius);
    const Index hi = std::min<Index>(d - 1, i + radius);
    out(i) = x.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

Vector augment_one(const Vector& x, const AugmentConfig& cfg,
                   CounterRng& rng) {
  const Index d = x.size();
  Vector v = x;
  for (Index i = 0; i < d; ++i) v(i) += cfg.noise_std * rng.normal();
  v = moving_average(v, cfg.smooth_radius);
  const double scale = (1.0 - cfg.scale_range) +
                       rng.uniform() * (2.0 * cfg.scale_range);
  v *= scale;
  const double shift = -cfg.shift_range +
                       rng.uniform() * (2.0 * cfg.shift_range);
  v.array() += shift;
  const double zoom = (1.0 - cfg.zoom_range) +
                      rng.uniform() * (2.0 * cfg.zoom_range);
  if (zoom != 1.0 && d > 1) {
    // resample around the centre coordinate with linear interpolation
    const double c = 0.5 * static_cast<double>(d - 1);
    Vector z(d);
    for (Index i = 0; i < d; ++i) {
      double p = c + (static_cast<double>(i) - c) / zoom;
      p = std::clamp(p, 0.0, static_cast<double>(d - 1));
      const Index lo = static_cast<Index>(std::floor(p));
      const Index hi = std::min(lo + 1, d - 1);
      const double u = p - static_cast<double>(lo);
      z(i) = (1.0 - u) * v(lo) + u * v(hi);
    }
    v = z;
  }
  return v;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  Index hits = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    Index pred;
    logits.row(i).maxCoeff(&pred);
    if (pred == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

void ema_update(net::Params& theta_t, const net::Params& theta_s, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("ema_update: eta must be in [0, 1]");
  if (!theta_t.same_shape(theta_s))
    throw std::invalid_argument("ema_update: parameter shape mismatch");
  auto tv = theta_t.tensors();
  auto sv = theta_s.tensors();
  for (std::size_t k = 0; k < tv.size(); ++k) {
    Eigen::Map<Vector> t(tv[k].data, tv[k].size);
    Eigen::Map<const Vector> s(sv[k].data, sv[k].size);
    t = eta * t + (1.0 - eta) * s;
  }
}

double ramp(int epoch, int ramp_epochs, double max_val) {
  if (epoch < 0) throw std::invalid_argument("ramp: epoch must be >= 0");
  if (ramp_epochs <= 0) return max_val;
  return max_val * std::min(1.0, static_cast<double>(epoch) / ramp_epochs);
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  const int w = cfg.warmup_epochs;
  const int e = cfg.epochs;
  if (epoch < w)
    return cfg.lr_peak * static_cast<double>(epoch + 1) / w;
  if (e - w <= 1) return cfg.lr_peak;
  return cfg.lr_peak * 0.5 *
         (1.0 + std::cos(M_PI * static_cast<double>(epoch - w) / (e - w)));
}

double wd_schedule(int epoch, const TrainConfig& cfg) {
  if (cfg.epochs <= 1) return cfg.wd_start;
  const double phase = M_PI * static_cast<double>(epoch) / (cfg.epochs - 1);
  return cfg.wd_start + (cfg.wd_end - cfg.wd_start) * 0.5 * (1.0 - std::cos(phase));
}

std::pair<Vector, Vector> augment_pair(const Vector& x,
                                       const AugmentConfig& cfg,
                                       CounterRng& rng) {
  if (!all_finite(x)) throw std::invalid_argument("augment_pair: non-finite input");
  Vector xs = augment_one(x, cfg, rng);
  Vector xt = augment_one(x, cfg, rng);
  return {std::move(xs), std::move(xt)};
}

AltDiv alt_divergence(const Matrix& ps, const Matrix& pt, DepMeasure kind) {
  if (ps.rows() != pt.rows() || ps.cols() != pt.cols())
    throw std::invalid_argument("alt_divergence: shape mismatch");
  if (kind != DepMeasure::kl && kind != DepMeasure::jsd)
    throw std::invalid_argument("alt_divergence: kind must be kl or jsd");
  const double inv_n = 1.0 / static_cast<double>(ps.rows());
  const Matrix a = net::softmax(ps);
  const Matrix b = net::softmax(pt);

  AltDiv out;
  Matrix d_a;
  if (kind == DepMeasure::kl) {
    const Matrix log_ratio = (a.array() / b.array()).log();
    out.value = inv_n * (a.array() * log_ratio.array()).sum();
    d_a = inv_n * (log_ratio.array() + 1.0);
  } else {
    const Matrix m = 0.5 * (a + b);
    const Matrix log_am = (a.array() / m.array()).log();
    const Matrix log_bm = (b.array() / m.array()).log();
    out.value = inv_n * 0.5 * ((a.array() * log_am.array()).sum() +
                               (b.array() * log_bm.array()).sum());
    d_a = inv_n * 0.5 * log_am;
  }
  out.d_ps = net::softmax_vjp(a, d_a);
  return out;
}

TotalLoss total_loss(const Matrix& ys_logits, const Matrix& yt_logits,
                     const Matrix& ps, const Matrix& pt,
                     const std::vector<int>& labels, const TrainConfig& cfg,
                     const lsmi::Resolved& lsmi_rs, int epoch) {
  if (ys_logits.rows() != yt_logits.rows() || ps.rows() != pt.rows() ||
      ys_logits.rows() != ps.rows())
    throw std::invalid_argument("total_loss: batch size mismatch");

  TotalLoss out;
  LossBreakdown& lb = out.breakdown;
  lb.lambda_eff = ramp(epoch, cfg.ramp_epochs, cfg.lambda_max);
  lb.beta_eff = ramp(epoch, cfg.ramp_epochs, cfg.beta_max);

  const net::LossGrad ce =
      net::ce_label_smoothing(ys_logits, labels, cfg.label_eps);
  lb.ce = ce.loss;
  out.d_logits = ce.grad;

  if (lb.lambda_eff != 0.0) {
    const Matrix ys = net::softmax(ys_logits);
    const Matrix yt = net::softmax(yt_logits);
    const net::LossGrad cons = net::mse_consistency(ys, yt);
    lb.cons = cons.loss;
    out.d_logits += lb.lambda_eff * net::softmax_vjp(ys, cons.grad);
  }

  out.d_proj = Matrix::Zero(ps.rows(), ps.cols());
  switch (cfg.dep_measure) {
    case DepMeasure::none:
      break;
    case DepMeasure::lsmi: {
      const lsmi::Gradient g = lsmi::gradient(ps, pt, lsmi_rs);
      lb.dep = -g.value;  // maximize dependence
      if (lb.beta_eff != 0.0) out.d_proj = -lb.beta_eff * g.d_ps;
      break;
    }
    case DepMeasure::kl:
    case DepMeasure::jsd: {
      const AltDiv g = alt_divergence(ps, pt, cfg.dep_measure);
      lb.dep = g.value;
      if (lb.beta_eff != 0.0) out.d_proj = lb.beta_eff * g.d_ps;
      break;
    }
  }
  lb.total = lb.ce + lb.lambda_eff * lb.cons + lb.beta_eff * lb.dep;
  return out;
}

EvalResult evaluate(const net::Params& theta, const data::Labeled& ds) {
  if (ds.x.rows() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const auto [heads, tr] = net::forward(theta, ds.x);
  const int c = theta.cfg.n_classes;
  std::vector<long> tp(c, 0), fp(c, 0), fn(c, 0);
  Index hits = 0;
  for (Index i = 0; i < heads.logits.rows(); ++i) {
    Index pred;
    heads.logits.row(i).maxCoeff(&pred);
    const int y = ds.labels[static_cast<std::size_t>(i)];
    if (pred == y) {
      ++tp[pred];
      ++hits;
    } else {
      ++fp[pred];
      ++fn[y];
    }
  }
  double f1_sum = 0.0;
  for (int k = 0; k < c; ++k) {
    const long denom = 2 * tp[k] + fp[k] + fn[k];
    if (denom > 0) f1_sum += 2.0 * tp[k] / static_cast<double>(denom);
    // class absent from predictions and labels contributes 0
  }
  EvalResult res;
  res.macro_f1 = f1_sum / c;
  res.accuracy = static_cast<double>(hits) / heads.logits.rows();
  return res;
}

TrainResult train(const TrainConfig& cfg, const data::Labeled& train_set,
                  const data::Labeled& val_set) {
  const Index n_train = train_set.x.rows();
  if (n_train == 0 || val_set.x.rows() == 0)
    throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.batch_size > n_train)
    throw std::invalid_argument("train: batch size must be in [1, n_train]");
  if (cfg.warmup_epochs >= cfg.epochs)
    throw std::invalid_argument("train: warmup_epochs must be < epochs");
  if (!(cfg.lambda_max >= 0.0 && cfg.beta_max >= 0.0))
    throw std::invalid_argument("train: lambda_max and beta_max must be >= 0");

  CounterRng rng(cfg.seed);
  DualState state;
  state.theta_s = net::Params::init(cfg.net_cfg, rng);
  state.theta_t = state.theta_s;  // teacher starts as a copy

  // LSMI hyperparameters are pinned once per run on an initial projection
  // snapshot and reused for every minibatch.
  lsmi::Resolved lsmi_rs;
  if (cfg.dep_measure == DepMeasure::lsmi) {
    const auto [heads_s, tr_s] = net::forward(state.theta_s, train_set.x);
    const auto [heads_t, tr_t] = net::forward(state.theta_t, train_set.x);
    lsmi_rs = lsmi::resolve(heads_s.projection, heads_t.projection, cfg.lsmi_cfg);
  }

  TrainResult result;
  result.best_val_macro_f1 = -1.0;
  std::vector<Index> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    const double wd = wd_schedule(epoch, cfg);

    // Fisher-Yates shuffle on the counter stream
    for (Index i = n_train - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng.uniform_int(i + 1));
      std::swap(order[i], order[j]);
    }

    double ep_ce = 0.0, ep_cons = 0.0, ep_dep = 0.0, ep_total = 0.0;
    double lambda_eff = 0.0, beta_eff = 0.0;
    for (Index start = 0; start < n_train; start += cfg.batch_size) {
      const Index bs = std::min<Index>(cfg.batch_size, n_train - start);
      Matrix xs(bs, train_set.x.cols()), xt(bs, train_set.x.cols());
      std::vector<int> labels(bs);
      for (Index i = 0; i < bs; ++i) {
        const Index row = order[start + i];
        auto [vs, vt] = augment_pair(train_set.x.row(row), cfg.aug, rng);
        xs.row(i) = vs;
        xt.row(i) = vt;
        labels[static_cast<std::size_t>(i)] =
            train_set.labels[static_cast<std::size_t>(row)];
      }

      auto [student, trace] = net::forward(state.theta_s, xs);
      const auto [teacher, teacher_trace] = net::forward(state.theta_t, xt);
      if (!all_finite(student.logits) || !all_finite(student.projection) ||
          !all_finite(teacher.logits) || !all_finite(teacher.projection))
        throw NumericError("train: non-finite network outputs at step " +
                           std::to_string(state.tau) + " (epoch " +
                           std::to_string(epoch) + ")");

      TotalLoss tl = total_loss(student.logits, teacher.logits,
                                student.projection, teacher.projection,
                                labels, cfg, lsmi_rs, epoch);
      if (!std::isfinite(tl.breakdown.total))
        throw NumericError("train: non-finite loss at step " +
                           std::to_string(state.tau) + " (epoch " +
                           std::to_string(epoch) + ")");

      const net::BackwardResult back =
          net::backward(state.theta_s, trace, tl.d_logits, tl.d_proj);
      net::adamw_step(state.theta_s, back.grads, state.optim, lr, wd);
      ema_update(state.theta_t, state.theta_s, cfg.eta);
      ++state.tau;

      const double w_b = static_cast<double>(bs) / n_train;
      ep_ce += w_b * tl.breakdown.ce;
      ep_cons += w_b * tl.breakdown.cons;
      ep_dep += w_b * tl.breakdown.dep;
      ep_total += w_b * tl.breakdown.total;
      lambda_eff = tl.breakdown.lambda_eff;
      beta_eff = tl.breakdown.beta_eff;
    }
    state.epoch = epoch;

    const net::Params& eval_params = cfg.eval == TrainConfig::Eval::teacher
                                         ? state.theta_t
                                         : state.theta_s;
    const auto [train_heads, tr_trace] = net::forward(eval_params, train_set.x);
    const EvalResult val = evaluate(eval_params, val_set);

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;
    em.wd = wd;
    em.lambda_eff = lambda_eff;
    em.beta_eff = beta_eff;
    em.ce = ep_ce;
    em.cons = ep_cons;
    em.dep = ep_dep;
    em.total = ep_total;
    em.train_acc = accuracy(train_heads.logits, train_set.labels);
    em.val_acc = val.accuracy;
    em.val_macro_f1 = val.macro_f1;
    result.history.push_back(em);

    if (val.macro_f1 > result.best_val_macro_f1) {  // ties keep the earlier epoch
      result.best_val_macro_f1 = val.macro_f1;
      result.best_epoch = epoch;
      result.best_state = state;
    }
    if (epoch - result.best_epoch >= cfg.early_stop_patience) break;
  }
  return result;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "epoch,lr,wd,lambda_eff,beta_eff,ce,cons,dep,total,"
         "train_acc,val_acc,val_macro_f1\n";
  for (const auto& em : history) {
    out << em.epoch << ',' << fmt17(em.lr) << ',' << fmt17(em.wd) << ','
        << fmt17(em.lambda_eff) << ',' << fmt17(em.beta_eff) << ','
        << fmt17(em.ce) << ',' << fmt17(em.cons) << ',' << fmt17(em.dep)
        << ',' << fmt17(em.total) << ',' << fmt17(em.train_acc) << ','
        << fmt17(em.val_acc) << ',' << fmt17(em.val_macro_f1) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

const char* variant_name(const TrainConfig& cfg) {
  switch (cfg.dep_measure) {
    case DepMeasure::lsmi: return "DRN-MSE-LSMI";
    case DepMeasure::kl: return "DRN-MSE-KL";
    case DepMeasure::jsd: return "DRN-MSE-JSD";
    case DepMeasure::none:
      return cfg.lambda_max == 0.0 ? "CE-only" : "DRN-MSE";
  }
  return "unknown";
}

}  // namespace depmax::drn

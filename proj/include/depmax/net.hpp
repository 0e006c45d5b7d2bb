#pragma once

#include "depmax/common.hpp"
#include "depmax/rng.hpp"

#include <string>
#include <vector>

namespace depmax::net {

struct Config {
  int input_dim = 2;
  std::vector<int> trunk_widths = {32, 32};
  int n_classes = 2;
  int proj_hidden = 32;
  int proj_dim = 16;  // desk-scale default; 256 at full scale
};

/// Mutable view of one named parameter tensor; matrices are column-major
/// contiguous so a flat pointer plus size covers the optimizer, the EMA
/// update and checkpoints alike.
struct TensorView {
  std::string name;
  double* data;
  Index size;
  Index rows, cols;
};

struct ConstTensorView {
  std::string name;
  const double* data;
  Index size;
  Index rows, cols;
};

/// Trunk of GELU-activated linear layers, a linear classification head and
/// a projection head (linear -> layer norm -> GELU -> linear).
struct Params {
  Config cfg;
  std::vector<Matrix> w;  // trunk weights, in_dim x out_dim
  std::vector<Vector> b;
  Matrix w_cls;
  Vector b_cls;
  Matrix w_p1;
  Vector b_p1;
  Vector ln_gain;
  Vector ln_offset;
  Matrix w_p2;
  Vector b_p2;

  /// Xavier-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases,
  /// unit layer-norm gain.
  static Params init(const Config& cfg, CounterRng& rng);
  static Params zeros(const Config& cfg);

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  bool same_shape(const Params& other) const;
};

struct HeadOutputs {
  Matrix logits;      // n x C
  Matrix projection;  // n x proj_dim
};

/// Every intermediate the backward pass needs.
struct Trace {
  Matrix input;
  std::vector<Matrix> trunk_pre;   // pre-activation per trunk layer
  std::vector<Matrix> trunk_act;   // gelu output per trunk layer
  Matrix p1;        // projection first linear output
  Matrix p1_hat;    // normalized rows before the affine
  Vector inv_std;   // per-row 1/sqrt(var + eps)
  Matrix p2;        // after layer-norm affine
  Matrix p3;        // gelu(p2)
};

struct BackwardResult {
  Params grads;
  Matrix d_input;
};

double gelu(double x);
double gelu_grad(double x);

/// Row-wise layer norm with biased variance and epsilon 1e-5:
/// (v - mean)/sqrt(var + eps), then gain o v + offset.
Vector layer_norm(const Vector& v, const Vector& gain, const Vector& offset);

std::pair<HeadOutputs, Trace> forward(const Params& p, const Matrix& X);

/// Exact reverse-mode of forward: dLogits and dProjection are the upstream
/// sensitivities of the scalar being differentiated.
BackwardResult backward(const Params& p, const Trace& trace,
                        const Matrix& d_logits, const Matrix& d_projection);

/// Numerically stable row-wise softmax.
Matrix softmax(const Matrix& logits);

/// VJP through the softmax rows: given probabilities and upstream d_probs,
/// returns the gradient w.r.t. the logits.
Matrix softmax_vjp(const Matrix& probs, const Matrix& d_probs);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Mean label-smoothed cross-entropy over a batch; target rows are
/// (1-eps) onehot + eps/C. grad is w.r.t. the logits, already 1/n scaled.
LossGrad ce_label_smoothing(const Matrix& logits,
                            const std::vector<int>& labels, double eps);

/// Mean squared error over batch and classes between probability rows;
/// gradient w.r.t. ys only (the teacher side is a constant).
LossGrad mse_consistency(const Matrix& ys, const Matrix& yt);

struct OptimState {
  std::vector<Vector> m, v;  // aligned with Params::tensors()
  long step = 0;
};

/// Bias-corrected adaptive step plus decoupled decay:
/// theta <- theta - lr m_hat/(sqrt(v_hat)+eps) - lr wd theta.
void adamw_step(Params& params, const Params& grads, OptimState& state,
                double lr, double wd, double b1 = 0.9, double b2 = 0.999,
                double eps = 1e-8);

/// Versioned text checkpoint, magic "DEPMAX1", 17 significant digits.
void save_checkpoint(const std::string& path, const Params& p);
Params load_checkpoint(const std::string& path);

}  // namespace depmax::net

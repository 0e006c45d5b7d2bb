#include "depmax/net.hpp"

#include <fstream>

namespace depmax::net {

namespace {

constexpr double kLnEps = 1e-5;

Matrix xavier(Index in, Index out, CounterRng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (Index j = 0; j < out; ++j)       // column-major fill order
    for (Index i = 0; i < in; ++i)
      w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
  return w;
}

void check_config(const Config& cfg) {
  if (cfg.input_dim < 1 || cfg.n_classes < 1 || cfg.proj_dim < 1)
    throw std::invalid_argument("net: dimensions must be >= 1");
  if (cfg.proj_hidden < 2)
    throw std::invalid_argument("net: proj_hidden must be >= 2 for layer norm");
  for (int wdt : cfg.trunk_widths)
    if (wdt < 1) throw std::invalid_argument("net: trunk widths must be >= 1");
}

Matrix affine(const Matrix& X, const Matrix& W, const Vector& b) {
  return (X * W).rowwise() + b.transpose();
}

}  // namespace

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * phi;
}

Vector layer_norm(const Vector& v, const Vector& gain, const Vector& offset) {
  const Index d = v.size();
  if (d < 2) throw std::invalid_argument("layer_norm: need dim >= 2");
  if (gain.size() != d || offset.size() != d)
    throw std::invalid_argument("layer_norm: gain/offset size mismatch");
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  const Vector hat = (v.array() - mean) / std::sqrt(var + kLnEps);
  return (hat.array() * gain.array() + offset.array()).matrix();
}

Params Params::init(const Config& cfg, CounterRng& rng) {
  check_config(cfg);
  Params p;
  p.cfg = cfg;
  Index prev = cfg.input_dim;
  for (int wdt : cfg.trunk_widths) {
    p.w.push_back(xavier(prev, wdt, rng));
    p.b.push_back(Vector::Zero(wdt));
    prev = wdt;
  }
  p.w_cls = xavier(prev, cfg.n_classes, rng);
  p.b_cls = Vector::Zero(cfg.n_classes);
  p.w_p1 = xavier(prev, cfg.proj_hidden, rng);
  p.b_p1 = Vector::Zero(cfg.proj_hidden);
  p.ln_gain = Vector::Ones(cfg.proj_hidden);
  p.ln_offset = Vector::Zero(cfg.proj_hidden);
  p.w_p2 = xavier(cfg.proj_hidden, cfg.proj_dim, rng);
  p.b_p2 = Vector::Zero(cfg.proj_dim);
  return p;
}

Params Params::zeros(const Config& cfg) {
  check_config(cfg);
  Params p;
  p.cfg = cfg;
  Index prev = cfg.input_dim;
  for (int wdt : cfg.trunk_widths) {
    p.w.push_back(Matrix::Zero(prev, wdt));
    p.b.push_back(Vector::Zero(wdt));
    prev = wdt;
  }
  p.w_cls = Matrix::Zero(prev, cfg.n_classes);
  p.b_cls = Vector::Zero(cfg.n_classes);
  p.w_p1 = Matrix::Zero(prev, cfg.proj_hidden);
  p.b_p1 = Vector::Zero(cfg.proj_hidden);
  p.ln_gain = Vector::Zero(cfg.proj_hidden);
  p.ln_offset = Vector::Zero(cfg.proj_hidden);
  p.w_p2 = Matrix::Zero(cfg.proj_hidden, cfg.proj_dim);
  p.b_p2 = Vector::Zero(cfg.proj_dim);
  return p;
}

std::vector<TensorView> Params::tensors() {
  std::vector<TensorView> out;
  auto add_m = [&](const std::string& name, Matrix& m) {
    out.push_back({name, m.data(), m.size(), m.rows(), m.cols()});
  };
  auto add_v = [&](const std::string& name, Vector& v) {
    out.push_back({name, v.data(), v.size(), v.size(), 1});
  };
  for (std::size_t l = 0; l < w.size(); ++l) {
    add_m("trunk.w" + std::to_string(l), w[l]);
    add_v("trunk.b" + std::to_string(l), b[l]);
  }
  add_m("cls.w", w_cls);
  add_v("cls.b", b_cls);
  add_m("proj.w1", w_p1);
  add_v("proj.b1", b_p1);
  add_v("proj.ln_gain", ln_gain);
  add_v("proj.ln_offset", ln_offset);
  add_m("proj.w2", w_p2);
  add_v("proj.b2", b_p2);
  return out;
}

std::vector<ConstTensorView> Params::tensors() const {
  auto views = const_cast<Params*>(this)->tensors();
  std::vector<ConstTensorView> out;
  out.reserve(views.size());
  for (const auto& t : views)
    out.push_back({t.name, t.data, t.size, t.rows, t.cols});
  return out;
}

bool Params::same_shape(const Params& other) const {
  const auto a = tensors();
  const auto b2 = other.tensors();
  if (a.size() != b2.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].rows != b2[i].rows || a[i].cols != b2[i].cols) return false;
  return true;
}

std::pair<HeadOutputs, Trace> forward(const Params& p, const Matrix& X) {
  if (X.cols() != p.cfg.input_dim)
    throw std::invalid_argument("forward: input has " +
                                std::to_string(X.cols()) + " columns, expected " +
                                std::to_string(p.cfg.input_dim));
  Trace tr;
  tr.input = X;
  Matrix h = X;
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    Matrix z = affine(h, p.w[l], p.b[l]);
    h = z.unaryExpr([](double v) { return gelu(v); });
    tr.trunk_pre.push_back(std::move(z));
    tr.trunk_act.push_back(h);
  }

  HeadOutputs out;
  out.logits = affine(h, p.w_cls, p.b_cls);

  tr.p1 = affine(h, p.w_p1, p.b_p1);
  const Index n = X.rows();
  tr.p1_hat.resize(n, tr.p1.cols());
  tr.inv_std.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double mean = tr.p1.row(i).mean();
    const double var = (tr.p1.row(i).array() - mean).square().mean();
    tr.inv_std(i) = 1.0 / std::sqrt(var + kLnEps);
    tr.p1_hat.row(i) = (tr.p1.row(i).array() - mean) * tr.inv_std(i);
  }
  tr.p2 = (tr.p1_hat.array().rowwise() * p.ln_gain.transpose().array())
              .rowwise() +
          p.ln_offset.transpose().array();
  tr.p3 = tr.p2.unaryExpr([](double v) { return gelu(v); });
  out.projection = affine(tr.p3, p.w_p2, p.b_p2);
  return {std::move(out), std::move(tr)};
}

BackwardResult backward(const Params& p, const Trace& tr,
                        const Matrix& d_logits, const Matrix& d_projection) {
  const Index n = tr.input.rows();
  if (d_logits.rows() != n || d_logits.cols() != p.cfg.n_classes ||
      d_projection.rows() != n || d_projection.cols() != p.cfg.proj_dim)
    throw std::invalid_argument("backward: upstream shapes do not match trace");

  BackwardResult res;
  res.grads = Params::zeros(p.cfg);
  Params& g = res.grads;
  const Matrix& trunk_out = tr.trunk_act.empty() ? tr.input : tr.trunk_act.back();

  // projection head
  g.w_p2 = tr.p3.transpose() * d_projection;
  g.b_p2 = d_projection.colwise().sum();
  Matrix d_p3 = d_projection * p.w_p2.transpose();
  Matrix d_p2 = d_p3.cwiseProduct(
      tr.p2.unaryExpr([](double v) { return gelu_grad(v); }));

  g.ln_gain = d_p2.cwiseProduct(tr.p1_hat).colwise().sum();
  g.ln_offset = d_p2.colwise().sum();
  Matrix d_hat =
      d_p2.array().rowwise() * p.ln_gain.transpose().array();
  Matrix d_p1(n, tr.p1.cols());
  for (Index i = 0; i < n; ++i) {
    const double m1 = d_hat.row(i).mean();
    const double m2 = d_hat.row(i).cwiseProduct(tr.p1_hat.row(i)).mean();
    d_p1.row(i) =
        tr.inv_std(i) * (d_hat.row(i).array() - m1 -
                         tr.p1_hat.row(i).array() * m2);
  }
  g.w_p1 = trunk_out.transpose() * d_p1;
  g.b_p1 = d_p1.colwise().sum();

  // classification head
  g.w_cls = trunk_out.transpose() * d_logits;
  g.b_cls = d_logits.colwise().sum();

  Matrix d_h = d_p1 * p.w_p1.transpose() + d_logits * p.w_cls.transpose();

  // trunk, last layer first
  for (int l = static_cast<int>(p.w.size()) - 1; l >= 0; --l) {
    const Matrix d_z = d_h.cwiseProduct(
        tr.trunk_pre[l].unaryExpr([](double v) { return gelu_grad(v); }));
    const Matrix& below = (l == 0) ? tr.input : tr.trunk_act[l - 1];
    g.w[l] = below.transpose() * d_z;
    g.b[l] = d_z.colwise().sum();
    d_h = d_z * p.w[l].transpose();
  }
  res.d_input = std::move(d_h);
  return res;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix softmax_vjp(const Matrix& probs, const Matrix& d_probs) {
  Matrix out(probs.rows(), probs.cols());
  for (Index i = 0; i < probs.rows(); ++i) {
    const double dot = probs.row(i).dot(d_probs.row(i));
    out.row(i) = probs.row(i).cwiseProduct(
        (d_probs.row(i).array() - dot).matrix());
  }
  return out;
}

LossGrad ce_label_smoothing(const Matrix& logits,
                            const std::vector<int>& labels, double eps) {
  const Index n = logits.rows();
  const Index c = logits.cols();
  if (static_cast<Index>(labels.size()) != n)
    throw std::invalid_argument("ce_label_smoothing: label count mismatch");
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("ce_label_smoothing: eps must be in [0, 1)");
  for (int y : labels)
    if (y < 0 || y >= c)
      throw std::invalid_argument("ce_label_smoothing: label " +
                                  std::to_string(y) + " out of range");

  LossGrad out;
  out.grad.resize(n, c);
  const double off = eps / static_cast<double>(c);
  double loss = 0.0;
  using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
  for (Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const RowArray shifted = logits.row(i).array() - mx;
    const double lse = std::log(shifted.exp().sum());
    // -sum_c target_c log softmax_c = lse - sum_c target_c shifted_c
    const double dot = off * shifted.sum() + (1.0 - eps) * shifted(labels[i]);
    loss += lse - dot;
    RowArray p = (shifted - lse).exp();
    p -= off;
    p(labels[i]) -= 1.0 - eps;
    out.grad.row(i) = p / static_cast<double>(n);
  }
  out.loss = loss / static_cast<double>(n);
  return out;
}

LossGrad mse_consistency(const Matrix& ys, const Matrix& yt) {
  if (ys.rows() != yt.rows() || ys.cols() != yt.cols())
    throw std::invalid_argument("mse_consistency: shape mismatch");
  for (Index i = 0; i < ys.rows(); ++i)
    if (std::abs(ys.row(i).sum() - 1.0) > 1e-8 ||
        std::abs(yt.row(i).sum() - 1.0) > 1e-8)
      throw std::invalid_argument(
          "mse_consistency: rows must be probability vectors");
  const double denom = static_cast<double>(ys.rows() * ys.cols());
  const Matrix diff = ys - yt;
  LossGrad out;
  out.loss = diff.squaredNorm() / denom;
  out.grad = 2.0 * diff / denom;
  return out;
}

void adamw_step(Params& params, const Params& grads, OptimState& state,
                double lr, double wd, double b1, double b2, double eps) {
  if (lr < 0.0 || wd < 0.0)
    throw std::invalid_argument("adamw_step: lr and wd must be >= 0");
  auto pv = params.tensors();
  auto gv = grads.tensors();
  if (pv.size() != gv.size())
    throw std::invalid_argument("adamw_step: parameter/gradient mismatch");

  if (state.m.empty()) {
    for (const auto& t : pv) {
      state.m.push_back(Vector::Zero(t.size));
      state.v.push_back(Vector::Zero(t.size));
    }
  }
  for (const auto& t : gv) {
    for (Index i = 0; i < t.size; ++i)
      if (!std::isfinite(t.data[i]))
        throw NumericError("adamw_step: non-finite gradient in " + t.name);
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < pv.size(); ++k) {
    Eigen::Map<Vector> theta(pv[k].data, pv[k].size);
    Eigen::Map<const Vector> grad(gv[k].data, gv[k].size);
    Vector& m = state.m[k];
    Vector& v = state.v[k];
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const Vector m_hat = m / bc1;
    const Vector v_hat = v / bc2;
    theta -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    theta -= (lr * wd) * theta;
  }
}

void save_checkpoint(const std::string& path, const Params& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
  out << "DEPMAX1\n";
  out << "config " << p.cfg.input_dim << ' ' << p.cfg.n_classes << ' '
      << p.cfg.proj_hidden << ' ' << p.cfg.proj_dim << ' '
      << p.cfg.trunk_widths.size();
  for (int wdt : p.cfg.trunk_widths) out << ' ' << wdt;
  out << '\n';
  const auto views = p.tensors();
  out << views.size() << '\n';
  for (const auto& t : views) {
    out << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    for (Index i = 0; i < t.size; ++i)
      out << fmt17(t.data[i]) << (i + 1 == t.size ? '\n' : ' ');
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Params load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic;
  in >> magic;
  if (magic != "DEPMAX1")
    throw std::runtime_error("bad checkpoint magic in " + path + ": " + magic);
  std::string kw;
  Config cfg;
  std::size_t n_trunk = 0;
  in >> kw >> cfg.input_dim >> cfg.n_classes >> cfg.proj_hidden >>
      cfg.proj_dim >> n_trunk;
  if (kw != "config") throw std::runtime_error("bad checkpoint header");
  cfg.trunk_widths.resize(n_trunk);
  for (auto& wdt : cfg.trunk_widths) in >> wdt;

  Params p = Params::zeros(cfg);
  std::size_t n_tensors = 0;
  in >> n_tensors;
  auto views = p.tensors();
  if (n_tensors != views.size())
    throw std::runtime_error("checkpoint tensor count mismatch");
  for (auto& t : views) {
    std::string name;
    Index rows, cols;
    in >> name >> rows >> cols;
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw std::runtime_error("checkpoint tensor " + name +
                               " does not match expected " + t.name);
    for (Index i = 0; i < t.size; ++i) in >> t.data[i];
  }
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  return p;
}

}  // namespace depmax::net

#include "depmax/gradcheck.hpp"

#include "depmax/drn.hpp"
#include "depmax/lsmi.hpp"
#include "depmax/net.hpp"
#include "depmax/oracles.hpp"
#include "depmax/rng.hpp"

#include <functional>

namespace depmax::gradcheck {

namespace {

constexpr double kFdThreshold = 1e-8;

double rel_err_max(const Matrix& analytic, const Matrix& fd) {
  double worst = 0.0;
  for (Index i = 0; i < fd.rows(); ++i)
    for (Index j = 0; j < fd.cols(); ++j)
      if (std::abs(fd(i, j)) > kFdThreshold)
        worst = std::max(worst,
                         std::abs(analytic(i, j) - fd(i, j)) / std::abs(fd(i, j)));
  return worst;
}

Matrix random_matrix(Index rows, Index cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Central differences of f w.r.t. one parameter tensor, in place.
Matrix fd_tensor(const std::function<double()>& f, double* data, Index size,
                 double h) {
  Matrix out(size, 1);
  for (Index i = 0; i < size; ++i) {
    const double orig = data[i];
    data[i] = orig + h;
    const double fp = f();
    data[i] = orig - h;
    const double fm = f();
    data[i] = orig;
    out(i, 0) = (fp - fm) / (2.0 * h);
  }
  return out;
}

net::Config fixture_config() {
  net::Config cfg;
  cfg.input_dim = 2;
  cfg.trunk_widths = {8};
  cfg.n_classes = 2;
  cfg.proj_hidden = 8;
  cfg.proj_dim = 4;
  return cfg;
}

Report param_space_check(net::Params& params,
                         const std::function<double()>& f,
                         const net::Params& analytic, double h) {
  Report rep;
  auto pv = params.tensors();
  const auto gv = analytic.tensors();
  for (std::size_t k = 0; k < pv.size(); ++k) {
    const Matrix fd = fd_tensor(f, pv[k].data, pv[k].size, h);
    Eigen::Map<const Vector> g(gv[k].data, gv[k].size);
    const double err = rel_err_max(g, fd);
    rep.blocks.push_back({pv[k].name, err});
    rep.max_rel_err = std::max(rep.max_rel_err, err);
  }
  return rep;
}

}  // namespace

Report check_lsmi(int n, int d, std::uint64_t seed) {
  CounterRng rng(seed);
  const Matrix ps = random_matrix(n, d, rng);
  const Matrix pt = 0.5 * ps + 0.5 * random_matrix(n, d, rng);

  lsmi::Resolved rs;
  rs.sigma_s = 1.1;
  rs.sigma_t = 0.9;
  rs.delta = 1e-2;
  rs.grad_mode = lsmi::GradMode::full;

  const lsmi::Gradient g = lsmi::gradient(ps, pt, rs);
  const Matrix fd = oracles::finite_diff_grad(
      [&](const Matrix& x) { return lsmi::gradient(x, pt, rs).value; }, ps,
      1e-5);

  Report rep;
  const double err = rel_err_max(g.d_ps, fd);
  rep.blocks.push_back({"d_ps", err});
  rep.max_rel_err = err;
  rep.blocks.push_back(
      {"translation_col_sums",
       g.d_ps.colwise().sum().cwiseAbs().maxCoeff()});
  return rep;
}

Report check_net(std::uint64_t seed) {
  CounterRng rng(seed);
  net::Params params = net::Params::init(fixture_config(), rng);
  // nonzero biases so their gradients are exercised
  for (auto& t : params.tensors())
    for (Index i = 0; i < t.size; ++i)
      t.data[i] += 0.05 * (rng.uniform() - 0.5);

  const Matrix x = random_matrix(6, 2, rng);
  const Matrix d_logits = random_matrix(6, 2, rng);
  const Matrix d_proj = random_matrix(6, 4, rng);

  auto [heads, trace] = net::forward(params, x);
  const net::BackwardResult back = net::backward(params, trace, d_logits, d_proj);

  auto f = [&]() {
    const auto [h, t] = net::forward(params, x);
    return h.logits.cwiseProduct(d_logits).sum() +
           h.projection.cwiseProduct(d_proj).sum();
  };
  Report rep = param_space_check(params, f, back.grads, 1e-6);

  // input gradient block
  Matrix xp = x;
  const Matrix fd_x = oracles::finite_diff_grad(
      [&](const Matrix& xin) {
        const auto [h, t] = net::forward(params, xin);
        return h.logits.cwiseProduct(d_logits).sum() +
               h.projection.cwiseProduct(d_proj).sum();
      },
      xp, 1e-6);
  const double err_x = rel_err_max(back.d_input, fd_x);
  rep.blocks.push_back({"input", err_x});
  rep.max_rel_err = std::max(rep.max_rel_err, err_x);
  return rep;
}

Report check_total(std::uint64_t seed) {
  CounterRng rng(seed);
  net::Params theta_s = net::Params::init(fixture_config(), rng);
  net::Params theta_t = net::Params::init(fixture_config(), rng);
  const Matrix xs = random_matrix(4, 2, rng);
  const Matrix xt = random_matrix(4, 2, rng);
  const std::vector<int> labels = {0, 1, 1, 0};

  drn::TrainConfig cfg;
  cfg.lambda_max = 0.5;
  cfg.beta_max = 0.1;
  cfg.ramp_epochs = 0;  // weights fully on
  cfg.label_eps = 0.4;
  cfg.dep_measure = drn::DepMeasure::lsmi;

  lsmi::Resolved rs;
  rs.sigma_s = 0.9;
  rs.sigma_t = 1.1;
  rs.delta = 1e-2;
  rs.grad_mode = lsmi::GradMode::full;

  const auto [teacher, teacher_trace] = net::forward(theta_t, xt);
  auto eval_total = [&]() {
    const auto [student, trace] = net::forward(theta_s, xs);
    return drn::total_loss(student.logits, teacher.logits, student.projection,
                           teacher.projection, labels, cfg, rs, 0)
        .breakdown.total;
  };

  const auto [student, trace] = net::forward(theta_s, xs);
  const drn::TotalLoss tl =
      drn::total_loss(student.logits, teacher.logits, student.projection,
                      teacher.projection, labels, cfg, rs, 0);
  const net::BackwardResult back =
      net::backward(theta_s, trace, tl.d_logits, tl.d_proj);

  return param_space_check(theta_s, eval_total, back.grads, 1e-6);
}

}  // namespace depmax::gradcheck

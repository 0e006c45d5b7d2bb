#include "depmax/oracles.hpp"

#include "depmax/rng.hpp"

#include <algorithm>
#include <vector>

namespace depmax::oracles {

namespace {

void check_rho(double rho) {
  if (!(std::abs(rho) < 1.0))
    throw std::invalid_argument("|rho| must be < 1, got " + fmt17(rho));
}

// Trapezoid weights on a uniform grid with `points` nodes.
struct Grid1d {
  std::vector<double> x, w;
  Grid1d(double half_width, int points) {
    if (points < 3) throw std::invalid_argument("quadrature needs >= 3 points");
    const double h = 2.0 * half_width / (points - 1);
    x.resize(points);
    w.assign(points, h);
    for (int i = 0; i < points; ++i) x[i] = -half_width + i * h;
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
};

double std_normal_pdf(double v) {
  return std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
}

}  // namespace

double discrete_smi(const DiscreteJoint& j) {
  const Matrix& p = j.pmf;
  const Vector px = p.rowwise().sum();
  const Vector py = p.colwise().sum().transpose();
  if (px.minCoeff() <= 0.0 || py.minCoeff() <= 0.0)
    throw std::invalid_argument("discrete_smi: degenerate marginal");
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index k = 0; k < p.cols(); ++k) {
      const double prod = px(i) * py(k);
      const double r = p(i, k) / prod;
      s += prod * (r - 1.0) * (r - 1.0);
    }
  return 0.5 * s;
}

double gaussian_smi(double rho) {
  check_rho(rho);
  return rho * rho / (2.0 * (1.0 - rho * rho));
}

double gaussian_smi_quadrature(double rho, double half_width, int points) {
  check_rho(rho);
  const Grid1d g(half_width, points);
  const double det = 1.0 - rho * rho;
  const double joint_norm = 1.0 / (2.0 * M_PI * std::sqrt(det));
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = g.x[i];
    const double px = std_normal_pdf(x);
    double row = 0.0;
    for (int k = 0; k < points; ++k) {
      const double y = g.x[k];
      const double pj = joint_norm *
          std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det));
      row += g.w[k] * pj * pj / (px * std_normal_pdf(y));
    }
    acc += g.w[i] * row;
  }
  return 0.5 * (acc - 1.0);
}

double gaussian_mi(double rho) {
  check_rho(rho);
  return -0.5 * std::log1p(-rho * rho);
}

double gaussian_mi_quadrature(double rho, double half_width, int points) {
  check_rho(rho);
  const Grid1d g(half_width, points);
  const double det = 1.0 - rho * rho;
  const double joint_norm = 1.0 / (2.0 * M_PI * std::sqrt(det));
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = g.x[i];
    const double px = std_normal_pdf(x);
    double row = 0.0;
    for (int k = 0; k < points; ++k) {
      const double y = g.x[k];
      const double pj = joint_norm *
          std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det));
      row += g.w[k] * pj * std::log(pj / (px * std_normal_pdf(y)));
    }
    acc += g.w[i] * row;
  }
  return acc;
}

double digamma(double x) {
  if (!(x > 0.0))
    throw std::invalid_argument("digamma: argument must be > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_2k / (2k x^2k), truncated after x^-10
  double series = std::log(x) - 0.5 * inv;
  series -= inv2 * (1.0 / 12.0 -
            inv2 * (1.0 / 120.0 -
            inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 -
            inv2 * (1.0 / 132.0)))));
  return acc + series;
}

MiEstimate ksg_mi(const Matrix& X, const Matrix& Y, int k,
                  std::uint64_t jitter_seed) {
  const Index n = X.rows();
  if (Y.rows() != n) throw std::invalid_argument("ksg_mi: sample count mismatch");
  if (k < 1 || k >= n)
    throw std::invalid_argument("ksg_mi: need 1 <= k < n");

  // Each coordinate is mapped to [0, 1] before the search. A strictly
  // increasing affine map per coordinate then leaves every distance (and
  // with it the estimate) unchanged, and the two marginals enter the joint
  // max-norm on a common scale. Tie-breaking jitter of 1e-10 x the (unit)
  // range follows, deterministic in jitter_seed.
  auto prepared = [](const Matrix& M, CounterRng& rng) {
    Matrix J = M;
    for (Index c = 0; c < M.cols(); ++c) {
      const double lo = M.col(c).minCoeff();
      const double range = M.col(c).maxCoeff() - lo;
      if (range > 0.0) J.col(c) = (M.col(c).array() - lo) / range;
      for (Index r = 0; r < M.rows(); ++r)
        J(r, c) += 1e-10 * (rng.uniform() - 0.5);
    }
    return J;
  };
  CounterRng rng(jitter_seed);
  const Matrix Xj = prepared(X, rng);
  const Matrix Yj = prepared(Y, rng);

  auto maxnorm = [](const Matrix& M, Index a, Index b) {
    return (M.row(a) - M.row(b)).cwiseAbs().maxCoeff();
  };

  double psi_sum = 0.0;
  std::vector<double> dj(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j)
      dj[j] = (j == i) ? std::numeric_limits<double>::infinity()
                       : std::max(maxnorm(Xj, i, j), maxnorm(Yj, i, j));
    std::vector<double> tmp = dj;
    std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end());
    const double eps = tmp[k - 1];

    int nx = 0, ny = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (maxnorm(Xj, i, j) < eps) ++nx;
      if (maxnorm(Yj, i, j) < eps) ++ny;
    }
    psi_sum += digamma(nx + 1.0) + digamma(ny + 1.0);
  }
  const double value =
      digamma(k) + digamma(static_cast<double>(n)) - psi_sum / n;
  return {value, MiMethod::ksg};
}

MiEstimate kde_mi(const Matrix& X, const Matrix& Y, kernels::Bandwidth bw_x,
                  kernels::Bandwidth bw_y) {
  const Index n = X.rows();
  if (Y.rows() != n) throw std::invalid_argument("kde_mi: sample count mismatch");
  if (X.cols() != 1 || Y.cols() != 1)
    throw std::invalid_argument("kde_mi: only 1-D marginals are supported");

  const double cx = 1.0 / (std::sqrt(2.0 * M_PI) * bw_x.sigma);
  const double cy = 1.0 / (std::sqrt(2.0 * M_PI) * bw_y.sigma);
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double px = 0.0, py = 0.0, pxy = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double ux = (X(i, 0) - X(j, 0)) / bw_x.sigma;
      const double uy = (Y(i, 0) - Y(j, 0)) / bw_y.sigma;
      const double gx = cx * std::exp(-0.5 * ux * ux);
      const double gy = cy * std::exp(-0.5 * uy * uy);
      px += gx;
      py += gy;
      pxy += gx * gy;
    }
    acc += std::log(pxy / n) - std::log(px / n) - std::log(py / n);
  }
  return {acc / n, MiMethod::kde};
}

kernels::Bandwidth silverman_bandwidth(const Vector& x) {
  const Index n = x.size();
  if (n < 2) throw std::invalid_argument("silverman_bandwidth: need n >= 2");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (n - 1);
  const double sd = std::sqrt(var);
  if (sd <= 0.0) return kernels::Bandwidth(1.0);  // constant sample
  return kernels::Bandwidth(1.06 * sd * std::pow(static_cast<double>(n), -0.2));
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& X0, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Matrix g(X0.rows(), X0.cols());
  Matrix X = X0;
  for (Index i = 0; i < X0.rows(); ++i)
    for (Index j = 0; j < X0.cols(); ++j) {
      X(i, j) = X0(i, j) + h;
      const double fp = f(X);
      X(i, j) = X0(i, j) - h;
      const double fm = f(X);
      X(i, j) = X0(i, j);
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("finite_diff_grad: non-finite evaluation");
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

}  // namespace depmax::oracles

#pragma once

#include "depmax/common.hpp"
#include "depmax/kernels.hpp"

#include <functional>

namespace depmax::oracles {

/// Joint pmf over a finite r x c grid. Entries >= 0, total 1 within 1e-12.
struct DiscreteJoint {
  Matrix pmf;

  explicit DiscreteJoint(Matrix p) : pmf(std::move(p)) {
    if (pmf.size() == 0 || (pmf.array() < 0.0).any())
      throw std::invalid_argument("DiscreteJoint: entries must be >= 0");
    if (std::abs(pmf.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("DiscreteJoint: pmf must sum to 1, got " +
                                  fmt17(pmf.sum()));
  }
};

enum class MiMethod { ksg, kde, discrete, gaussian_analytic };

struct MiEstimate {
  double value = 0.0;  // nats
  MiMethod method = MiMethod::ksg;
};

/// Squared-loss mutual information of a finite joint:
/// 1/2 sum_{x,y} p(x)p(y) (p(x,y)/(p(x)p(y)) - 1)^2.
double discrete_smi(const DiscreteJoint& j);

/// SMI of a standard bivariate Gaussian with correlation rho:
/// rho^2 / (2 (1 - rho^2)).
double gaussian_smi(double rho);

/// Trapezoid quadrature of 1/2 (int p(x,y)^2/(p(x)p(y)) dx dy - 1) on
/// [-half_width, half_width]^2 with `points` nodes per axis. Used to
/// confirm the gaussian_smi closed form; the integrand's diagonal tail
/// decays like exp(-x^2 (1-rho)/(1+rho)), so high rho needs a wider
/// domain than the default before truncation drops below 1e-3.
double gaussian_smi_quadrature(double rho, double half_width = 6.0,
                               int points = 1201);

/// MI of a standard bivariate Gaussian: -1/2 ln(1 - rho^2) nats.
double gaussian_mi(double rho);

/// Quadrature of the KL integrand, for cross-checking gaussian_mi.
double gaussian_mi_quadrature(double rho, double half_width = 6.0,
                              int points = 1201);

/// Kraskov-Stoegbauer-Grassberger estimator #1 with max-norm
/// neighborhoods: psi(k) + psi(n) - mean_i[psi(nx_i + 1) + psi(ny_i + 1)].
/// Coordinates are min-max normalized first (so per-coordinate positive
/// affine maps leave the estimate unchanged and the marginals share a
/// scale inside the joint max-norm), then uniform jitter of 1e-10 x the
/// normalized range breaks ties; deterministic given jitter_seed.
MiEstimate ksg_mi(const Matrix& X, const Matrix& Y, int k,
                  std::uint64_t jitter_seed = 0);

/// Plug-in resubstitution MI with 1-D Gaussian KDEs:
/// mean_i[ln p(x_i, y_i) - ln p(x_i) - ln p(y_i)].
MiEstimate kde_mi(const Matrix& X, const Matrix& Y, kernels::Bandwidth bw_x,
                  kernels::Bandwidth bw_y);

/// Gaussian rule-of-thumb bandwidth 1.06 sigma n^(-1/5); falls back to 1
/// for constant samples.
kernels::Bandwidth silverman_bandwidth(const Vector& x);

/// Central finite differences of a scalar function, coordinate by
/// coordinate: (f(X + h e) - f(X - h e)) / (2h).
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& X0, double h);

/// Digamma via the ascending recurrence pushed to x >= 10 plus the
/// asymptotic series; absolute error below 1e-12 for x >= 1.
double digamma(double x);

}  // namespace depmax::oracles

#pragma once

#include "depmax/common.hpp"
#include "depmax/kernels.hpp"

#include <vector>

namespace depmax::lsmi {

// Least-squares mutual information estimated by direct density-ratio
// fitting. The ratio r(p_s, p_t) = p(p_s, p_t) / (p(p_s) p(p_t)) is
// modelled as a Gaussian-kernel expansion centred on the paired samples;
// the coefficients solve the regularized least-squares system
//
//   alpha = (H + delta I)^-1 h,
//   H = (1/n^2) (K K^T) o (L L^T),   h = (1/n) (K o L) 1,
//
// and the dependence score is (1/2n) tr(diag(alpha) K L) - 1/2, where K
// and L are the Gram matrices of the two sample batches and o denotes the
// elementwise product. The score is zero in the population limit iff the
// variables are independent.

/// How one kernel bandwidth is chosen.
struct BandwidthRule {
  enum class Kind { fixed, median, median_grid };

  Kind kind = Kind::median;
  double value = 0.0;            // fixed sigma
  std::vector<double> factors;   // grid of multipliers of the median

  static BandwidthRule fixed(double sigma) {
    kernels::Bandwidth check(sigma);
    return {Kind::fixed, check.sigma, {}};
  }
  static BandwidthRule median() { return {Kind::median, 0.0, {}}; }
  static BandwidthRule median_grid(std::vector<double> f) {
    if (f.empty())
      throw std::invalid_argument("bandwidth grid must be non-empty");
    return {Kind::median_grid, 0.0, std::move(f)};
  }
};

enum class GradMode { full, frozen_alpha };

struct Config {
  BandwidthRule sigma_s = BandwidthRule::median();
  BandwidthRule sigma_t = BandwidthRule::median();
  std::vector<double> delta_grid = {1e-2};  // singleton = fixed delta
  GradMode grad_mode = GradMode::full;
  int cv_folds = 2;
  // Cross-validation runs on the first cv_max_n paired rows (0 = all).
  // Keeps hyperparameter selection affordable at large n; the final fit
  // always uses every sample.
  int cv_max_n = 0;
};

/// Hyperparameters pinned to concrete values; what the gradient and the
/// per-batch training path consume.
struct Resolved {
  double sigma_s = 1.0;
  double sigma_t = 1.0;
  double delta = 1e-2;
  GradMode grad_mode = GradMode::full;
};

struct Estimate {
  double value = 0.0;
  Vector alpha;
  double sigma_s = 0.0, sigma_t = 0.0, delta = 0.0;
  double solve_residual = 0.0;
};

struct Gradient {
  double value = 0.0;
  Matrix d_ps;  // n x d, gradient w.r.t. the student-side batch only
};

/// H = (1/n^2) (K K^T) o (L L^T). Symmetric positive semidefinite.
Matrix build_h_matrix(const Matrix& K, const Matrix& L);

/// h_i = (1/n) sum_j K_ij L_ij.
Vector build_h_vector(const Matrix& K, const Matrix& L);

/// Solves (H + delta I) alpha = h through an LDLT factorization.
/// Throws NumericError (carrying the smallest pivot) when the shifted
/// matrix is not positive definite beyond tolerance.
Vector solve_alpha(const Matrix& H, const Vector& h, double delta);

/// (1/2n) sum_i alpha_i (K L)_ii - 1/2 with (K L)_ii = sum_j K_ij L_ij.
double score(const Matrix& K, const Matrix& L, const Vector& alpha);

/// Pins bandwidths and delta for the given data per cfg: fixed values pass
/// through, median rules evaluate the heuristic, grids run cross_validate.
Resolved resolve(const Matrix& Ps, const Matrix& Pt, const Config& cfg);

/// Full estimator: resolve hyperparameters, build K, L, H, h, solve for
/// alpha and score. Ps and Pt must be row-aligned with equal n >= 2.
Estimate estimate(const Matrix& Ps, const Matrix& Pt, const Config& cfg);

struct Selected {
  double sigma_s = 0.0, sigma_t = 0.0, delta = 0.0;
};

/// K-fold selection of (sigma_s, sigma_t, delta) minimizing the held-out
/// least-squares density-ratio criterion
///   J = 1/2 alpha^T H_holdout alpha - h_holdout^T alpha
/// with alpha fitted on the training fold (basis centres = training
/// points). Ties break toward larger delta, then larger sigmas.
Selected cross_validate(const Matrix& Ps, const Matrix& Pt,
                        const std::vector<double>& sigma_grid_s,
                        const std::vector<double>& sigma_grid_t,
                        const std::vector<double>& delta_grid, int folds);

/// Score and its gradient w.r.t. Ps at fixed hyperparameters; the other
/// batch is a constant (the teacher side never receives a gradient).
///
/// full mode differentiates through alpha with the implicit rule
/// d alpha = (H + delta I)^-1 (dh - dH alpha); frozen_alpha treats alpha
/// as a constant and differentiates the trace term only.
Gradient gradient(const Matrix& Ps, const Matrix& Pt, const Resolved& rs);

}  // namespace depmax::lsmi

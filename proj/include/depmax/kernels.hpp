#pragma once

#include "depmax/common.hpp"

namespace depmax::kernels {

/// Gaussian kernel width. Must be finite and strictly positive.
struct Bandwidth {
  double sigma;

  explicit Bandwidth(double s) : sigma(s) {
    if (!std::isfinite(s) || s <= 0.0)
      throw std::invalid_argument("bandwidth must be finite and > 0, got " +
                                  fmt17(s));
  }
};

/// Squared Euclidean distances between all row pairs of X (n x d).
/// The result is exactly symmetric with a zero diagonal.
Matrix pairwise_sq_dists(const Matrix& X);

/// Gaussian Gram matrix K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)).
/// Unit diagonal, entries in (0, 1].
Matrix gaussian_gram(const Matrix& X, Bandwidth sigma);

/// Rectangular Gram block K_ij = exp(-||a_i - b_j||^2 / (2 sigma^2))
/// between rows of A and rows of B.
Matrix gaussian_cross_gram(const Matrix& A, const Matrix& B, Bandwidth sigma);

/// Median of the n(n-1)/2 off-diagonal pairwise distances (average
/// convention for even counts). Falls back to sigma = 1 when every
/// distance is zero so collapsed batches never halt a run.
Bandwidth median_heuristic(const Matrix& X);

/// Vector-Jacobian product of the Gram matrix: sum_ij G_ij dK_ij/dX with
/// sigma held constant. Row r of the result is
///   sum_j (G_rj + G_jr) K_rj (x_j - x_r) / sigma^2.
/// Column sums are identically zero (the kernel sees only differences).
Matrix gram_vjp(const Matrix& X, Bandwidth sigma, const Matrix& G);

}  // namespace depmax::kernels

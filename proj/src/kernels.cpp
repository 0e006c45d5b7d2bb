#include "depmax/kernels.hpp"

#include <algorithm>
#include <vector>

namespace depmax::kernels {

Matrix pairwise_sq_dists(const Matrix& X) {
  if (!all_finite(X))
    throw std::invalid_argument("pairwise_sq_dists: non-finite input");
  const Index n = X.rows();
  Matrix D = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = (X.row(i) - X.row(j)).squaredNorm();
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

Matrix gaussian_gram(const Matrix& X, Bandwidth sigma) {
  Matrix K = pairwise_sq_dists(X);
  const double scale = -1.0 / (2.0 * sigma.sigma * sigma.sigma);
  K = (K * scale).array().exp();
  // exp(0) on the diagonal is exactly 1 already; keep it explicit anyway
  K.diagonal().setOnes();
  return K;
}

Matrix gaussian_cross_gram(const Matrix& A, const Matrix& B, Bandwidth sigma) {
  if (A.cols() != B.cols())
    throw std::invalid_argument("gaussian_cross_gram: dimension mismatch");
  const double scale = -1.0 / (2.0 * sigma.sigma * sigma.sigma);
  Matrix K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < B.rows(); ++j)
      K(i, j) = std::exp(scale * (A.row(i) - B.row(j)).squaredNorm());
  return K;
}

Bandwidth median_heuristic(const Matrix& X) {
  const Index n = X.rows();
  if (n < 2)
    throw std::invalid_argument(
        "median_heuristic: need at least 2 samples, got " + std::to_string(n));
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      dists.push_back((X.row(i) - X.row(j)).norm());

  const std::size_t m = dists.size();
  auto mid = dists.begin() + m / 2;
  std::nth_element(dists.begin(), mid, dists.end());
  double med = *mid;
  if (m % 2 == 0) {
    auto lo = std::max_element(dists.begin(), mid);
    med = 0.5 * (*lo + med);
  }
  if (med <= 0.0) return Bandwidth(1.0);  // all rows identical
  return Bandwidth(med);
}

Matrix gram_vjp(const Matrix& X, Bandwidth sigma, const Matrix& G) {
  const Index n = X.rows();
  if (G.rows() != n || G.cols() != n)
    throw std::invalid_argument("gram_vjp: G must be n x n");
  if (!all_finite(G)) throw std::invalid_argument("gram_vjp: non-finite G");

  const Matrix K = gaussian_gram(X, sigma);
  // W = (G + G^T) o K is symmetric for any G, which makes the column sums
  // of the result vanish exactly.
  Matrix W = (G + G.transpose()).cwiseProduct(K);
  const Vector row_sums = W.rowwise().sum();
  Matrix out = W * X;
  out -= row_sums.asDiagonal() * X;
  out /= sigma.sigma * sigma.sigma;
  return out;
}

}  // namespace depmax::kernels

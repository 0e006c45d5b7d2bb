// Test-only reference implementations, kept deliberately naive and
// independent of the library code paths they check.
#pragma once

#include "depmax/common.hpp"
#include "depmax/rng.hpp"

#include <cmath>
#include <vector>

namespace testutil {

using depmax::Index;
using depmax::Matrix;
using depmax::Vector;

inline Matrix random_matrix(Index rows, Index cols, depmax::CounterRng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// squared distances, literal double loop with coordinate accumulation
inline Matrix naive_sq_dists(const Matrix& x) {
  const Index n = x.rows();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index c = 0; c < x.cols(); ++c) {
        const double diff = x(i, c) - x(j, c);
        acc += diff * diff;
      }
      d(i, j) = acc;
    }
  return d;
}

inline Matrix naive_gram(const Matrix& x, double sigma) {
  Matrix k = naive_sq_dists(x);
  for (Index i = 0; i < k.rows(); ++i)
    for (Index j = 0; j < k.cols(); ++j)
      k(i, j) = std::exp(-k(i, j) / (2.0 * sigma * sigma));
  return k;
}

// triple loop H = (1/n^2) (K K^T) o (L L^T)
inline Matrix naive_h_matrix(const Matrix& k, const Matrix& l) {
  const Index n = k.rows();
  Matrix h(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) {
      double kk = 0.0, ll = 0.0;
      for (Index c = 0; c < n; ++c) {
        kk += k(a, c) * k(b, c);
        ll += l(a, c) * l(b, c);
      }
      h(a, b) = kk * ll / (static_cast<double>(n) * n);
    }
  return h;
}

inline Vector naive_h_vector(const Matrix& k, const Matrix& l) {
  const Index n = k.rows();
  Vector h(n);
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < n; ++j) acc += k(i, j) * l(i, j);
    h(i) = acc / n;
  }
  return h;
}

inline double naive_score(const Matrix& k, const Matrix& l, const Vector& a) {
  const Index n = k.rows();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double diag = 0.0;
    for (Index j = 0; j < n; ++j) diag += k(i, j) * l(j, i);
    acc += a(i) * diag;
  }
  return acc / (2.0 * n) - 0.5;
}

// dense solve by Gauss-Jordan with partial pivoting, nothing shared with
// the library's LDLT path
inline Vector gauss_solve(Matrix a, Vector b) {
  const Index n = a.rows();
  for (Index col = 0; col < n; ++col) {
    Index piv = col;
    for (Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    a.row(col).swap(a.row(piv));
    std::swap(b(col), b(piv));
    const double d = a(col, col);
    a.row(col) /= d;
    b(col) /= d;
    for (Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      b(r) -= f * b(col);
    }
  }
  return b;
}

inline double naive_mse(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - b(i, j);
      acc += d * d;
    }
  return acc / (static_cast<double>(a.rows()) * a.cols());
}

// four-loop SMI of a discrete joint pmf
inline double naive_discrete_smi(const Matrix& pmf) {
  const Index r = pmf.rows(), c = pmf.cols();
  std::vector<double> px(r, 0.0), py(c, 0.0);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) px[i] += pmf(i, j);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) py[j] += pmf(i, j);
  double s = 0.0;
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) {
      const double prod = px[i] * py[j];
      const double ratio = pmf(i, j) / prod;
      s += prod * (ratio - 1.0) * (ratio - 1.0);
    }
  return 0.5 * s;
}

// plug-in MI (nats) from empirical one-hot counts
inline double plugin_discrete_mi(const Matrix& xs, const Matrix& ys) {
  const Index n = xs.rows();
  const Index r = xs.cols(), c = ys.cols();
  Matrix counts = Matrix::Zero(r, c);
  for (Index i = 0; i < n; ++i) {
    Index a, b;
    xs.row(i).maxCoeff(&a);
    ys.row(i).maxCoeff(&b);
    counts(a, b) += 1.0;
  }
  counts /= static_cast<double>(n);
  double mi = 0.0;
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < c; ++b) {
      const double pxy = counts(a, b);
      if (pxy <= 0.0) continue;
      const double px = counts.row(a).sum();
      const double py = counts.col(b).sum();
      mi += pxy * std::log(pxy / (px * py));
    }
  return mi;
}

}  // namespace testutil

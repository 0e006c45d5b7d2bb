#include "depmax/lsmi.hpp"

#include <Eigen/Cholesky>

#include <limits>

namespace depmax::lsmi {

namespace {

// K * K^T via a symmetric rank update (half the flops of a plain product).
Matrix gram_square(const Matrix& K) {
  Matrix M = Matrix::Zero(K.rows(), K.rows());
  M.selfadjointView<Eigen::Lower>().rankUpdate(K);
  M = M.selfadjointView<Eigen::Lower>();
  return M;
}

void check_same_square(const Matrix& K, const Matrix& L, const char* who) {
  if (K.rows() != K.cols() || L.rows() != L.cols() || K.rows() != L.rows())
    throw std::invalid_argument(std::string(who) +
                                ": K and L must be equal-size square matrices");
}

struct SolveResult {
  Vector alpha;
  double residual;
};

SolveResult solve_with_residual(const Matrix& H, const Vector& h,
                                double delta) {
  if (!std::isfinite(delta) || delta <= 0.0)
    throw std::invalid_argument("solve_alpha: delta must be finite and > 0");
  if (H.rows() != H.cols() || H.rows() != h.size())
    throw std::invalid_argument("solve_alpha: shape mismatch");

  Matrix A = H;
  A.diagonal().array() += delta;
  Eigen::LDLT<Matrix> ldlt(A);
  const double min_pivot = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || min_pivot <= 0.0)
    throw NumericError("solve_alpha: matrix not positive definite "
                       "(smallest pivot " + fmt17(min_pivot) + ")",
                       min_pivot);

  Vector alpha = ldlt.solve(h);
  Vector r = A * alpha - h;
  double residual = r.lpNorm<Eigen::Infinity>();
  if (residual > 1e-8) {
    // one step of iterative refinement reusing the factorization
    alpha -= ldlt.solve(r);
    r = A * alpha - h;
    residual = r.lpNorm<Eigen::Infinity>();
    if (residual > 1e-8)
      throw NumericError("solve_alpha: residual " + fmt17(residual) +
                         " exceeds 1e-8 after refinement", min_pivot);
  }
  return {std::move(alpha), residual};
}

// Selection state shared by the fold loop in cross_validate.
struct Candidate {
  double sigma_s, sigma_t, delta;
  double j = std::numeric_limits<double>::infinity();
};

bool prefer(const Candidate& a, const Candidate& b) {
  if (a.j != b.j) return a.j < b.j;
  if (a.delta != b.delta) return a.delta > b.delta;
  if (a.sigma_s != b.sigma_s) return a.sigma_s > b.sigma_s;
  return a.sigma_t > b.sigma_t;
}

// Per-fold, per-bandwidth kernel quantities reused across the delta loop.
struct SideCache {
  Matrix k_tr;   // n_tr x n_tr Gram on the training fold
  Matrix k_ho;   // n_ho x n_tr cross Gram, holdout rows vs training centres
  Matrix m_tr;   // K_tr K_tr^T
  Matrix m_ho;   // K_ho^T K_ho
};

SideCache build_side_cache(const Matrix& tr, const Matrix& ho, double sigma) {
  kernels::Bandwidth bw(sigma);
  SideCache c;
  c.k_tr = kernels::gaussian_gram(tr, bw);
  c.k_ho = kernels::gaussian_cross_gram(ho, tr, bw);
  c.m_tr = gram_square(c.k_tr);
  Matrix m = Matrix::Zero(c.k_tr.rows(), c.k_tr.rows());
  m.selfadjointView<Eigen::Lower>().rankUpdate(c.k_ho.transpose());
  c.m_ho = m.selfadjointView<Eigen::Lower>();
  return c;
}

}  // namespace

Matrix build_h_matrix(const Matrix& K, const Matrix& L) {
  check_same_square(K, L, "build_h_matrix");
  const double n = static_cast<double>(K.rows());
  return gram_square(K).cwiseProduct(gram_square(L)) / (n * n);
}

Vector build_h_vector(const Matrix& K, const Matrix& L) {
  check_same_square(K, L, "build_h_vector");
  const double n = static_cast<double>(K.rows());
  return K.cwiseProduct(L).rowwise().sum() / n;
}

Vector solve_alpha(const Matrix& H, const Vector& h, double delta) {
  return solve_with_residual(H, h, delta).alpha;
}

double score(const Matrix& K, const Matrix& L, const Vector& alpha) {
  check_same_square(K, L, "score");
  if (alpha.size() != K.rows())
    throw std::invalid_argument("score: alpha length mismatch");
  const double n = static_cast<double>(K.rows());
  // (K L)_ii = sum_j K_ij L_ij since L is symmetric
  const Vector diag_kl = K.cwiseProduct(L).rowwise().sum();
  return alpha.dot(diag_kl) / (2.0 * n) - 0.5;
}

Selected cross_validate(const Matrix& Ps, const Matrix& Pt,
                        const std::vector<double>& sigma_grid_s,
                        const std::vector<double>& sigma_grid_t,
                        const std::vector<double>& delta_grid, int folds) {
  if (folds < 2)
    throw std::invalid_argument("cross_validate: folds must be >= 2");
  if (sigma_grid_s.empty() || sigma_grid_t.empty() || delta_grid.empty())
    throw std::invalid_argument("cross_validate: grids must be non-empty");
  for (double d : delta_grid)
    if (!(d > 0.0))
      throw std::invalid_argument("cross_validate: delta candidates must be > 0");
  const Index n = Ps.rows();
  if (Pt.rows() != n)
    throw std::invalid_argument("cross_validate: sample count mismatch");
  if (n < folds)
    throw std::invalid_argument("cross_validate: fewer samples than folds");

  const std::size_t n_cand =
      sigma_grid_s.size() * sigma_grid_t.size() * delta_grid.size();
  std::vector<Candidate> cands;
  cands.reserve(n_cand);
  for (double ss : sigma_grid_s)
    for (double st : sigma_grid_t)
      for (double d : delta_grid) cands.push_back({ss, st, d, 0.0});

  for (int f = 0; f < folds; ++f) {
    // interleaved fold assignment: row i belongs to fold i % folds
    std::vector<Index> tr_idx, ho_idx;
    for (Index i = 0; i < n; ++i)
      (i % folds == f ? ho_idx : tr_idx).push_back(i);

    Matrix Ps_tr(tr_idx.size(), Ps.cols()), Pt_tr(tr_idx.size(), Pt.cols());
    Matrix Ps_ho(ho_idx.size(), Ps.cols()), Pt_ho(ho_idx.size(), Pt.cols());
    for (std::size_t i = 0; i < tr_idx.size(); ++i) {
      Ps_tr.row(i) = Ps.row(tr_idx[i]);
      Pt_tr.row(i) = Pt.row(tr_idx[i]);
    }
    for (std::size_t i = 0; i < ho_idx.size(); ++i) {
      Ps_ho.row(i) = Ps.row(ho_idx[i]);
      Pt_ho.row(i) = Pt.row(ho_idx[i]);
    }

    std::vector<SideCache> s_cache, t_cache;
    for (double ss : sigma_grid_s)
      s_cache.push_back(build_side_cache(Ps_tr, Ps_ho, ss));
    for (double st : sigma_grid_t)
      t_cache.push_back(build_side_cache(Pt_tr, Pt_ho, st));

    const double n_tr = static_cast<double>(tr_idx.size());
    const double n_ho = static_cast<double>(ho_idx.size());
    std::size_t ci = 0;
    for (std::size_t a = 0; a < sigma_grid_s.size(); ++a) {
      for (std::size_t b = 0; b < sigma_grid_t.size(); ++b) {
        const SideCache& S = s_cache[a];
        const SideCache& T = t_cache[b];
        const Matrix H_tr = S.m_tr.cwiseProduct(T.m_tr) / (n_tr * n_tr);
        const Vector h_tr =
            S.k_tr.cwiseProduct(T.k_tr).rowwise().sum() / n_tr;
        const Matrix H_ho = S.m_ho.cwiseProduct(T.m_ho) / (n_ho * n_ho);
        const Vector h_ho =
            S.k_ho.cwiseProduct(T.k_ho).colwise().sum().transpose() / n_ho;
        for (double d : delta_grid) {
          const Vector alpha = solve_with_residual(H_tr, h_tr, d).alpha;
          cands[ci++].j +=
              0.5 * alpha.dot(H_ho * alpha) - h_ho.dot(alpha);
        }
      }
    }
  }

  const double inv_folds = 1.0 / folds;
  Candidate best = cands.front();
  best.j *= inv_folds;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    Candidate c = cands[i];
    c.j *= inv_folds;
    if (prefer(c, best)) best = c;
  }
  return {best.sigma_s, best.sigma_t, best.delta};
}

Resolved resolve(const Matrix& Ps, const Matrix& Pt, const Config& cfg) {
  const Index n = Ps.rows();
  if (Pt.rows() != n)
    throw std::invalid_argument("lsmi: paired batches must share n");
  if (n < 2) throw std::invalid_argument("lsmi: need n >= 2 paired samples");
  if (cfg.delta_grid.empty())
    throw std::invalid_argument("lsmi: delta grid must be non-empty");
  for (double d : cfg.delta_grid)
    if (!(d > 0.0)) throw std::invalid_argument("lsmi: delta must be > 0");

  const bool needs_cv = cfg.sigma_s.kind == BandwidthRule::Kind::median_grid ||
                        cfg.sigma_t.kind == BandwidthRule::Kind::median_grid ||
                        cfg.delta_grid.size() > 1;

  Index n_cv = n;
  if (cfg.cv_max_n > 0 && cfg.cv_max_n < n) n_cv = cfg.cv_max_n;
  const Matrix Ps_cv = Ps.topRows(n_cv);
  const Matrix Pt_cv = Pt.topRows(n_cv);

  auto expand = [&](const BandwidthRule& rule,
                    const Matrix& cv_batch) -> std::vector<double> {
    switch (rule.kind) {
      case BandwidthRule::Kind::fixed:
        return {rule.value};
      case BandwidthRule::Kind::median:
        return {kernels::median_heuristic(cv_batch).sigma};
      case BandwidthRule::Kind::median_grid: {
        const double med = kernels::median_heuristic(cv_batch).sigma;
        std::vector<double> out;
        for (double f : rule.factors) out.push_back(f * med);
        return out;
      }
    }
    throw std::logic_error("unreachable");
  };

  const std::vector<double> grid_s = expand(cfg.sigma_s, Ps_cv);
  const std::vector<double> grid_t = expand(cfg.sigma_t, Pt_cv);

  Resolved rs;
  rs.grad_mode = cfg.grad_mode;
  if (!needs_cv) {
    rs.sigma_s = grid_s.front();
    rs.sigma_t = grid_t.front();
    rs.delta = cfg.delta_grid.front();
    return rs;
  }
  const Selected sel = cross_validate(Ps_cv, Pt_cv, grid_s, grid_t,
                                      cfg.delta_grid, cfg.cv_folds);
  rs.sigma_s = sel.sigma_s;
  rs.sigma_t = sel.sigma_t;
  rs.delta = sel.delta;
  return rs;
}

Estimate estimate(const Matrix& Ps, const Matrix& Pt, const Config& cfg) {
  const Resolved rs = resolve(Ps, Pt, cfg);
  const Matrix K = kernels::gaussian_gram(Ps, kernels::Bandwidth(rs.sigma_s));
  const Matrix L = kernels::gaussian_gram(Pt, kernels::Bandwidth(rs.sigma_t));
  const Matrix H = build_h_matrix(K, L);
  const Vector h = build_h_vector(K, L);
  const SolveResult sol = solve_with_residual(H, h, rs.delta);

  Estimate est;
  est.value = score(K, L, sol.alpha);
  est.alpha = sol.alpha;
  est.sigma_s = rs.sigma_s;
  est.sigma_t = rs.sigma_t;
  est.delta = rs.delta;
  est.solve_residual = sol.residual;
  return est;
}

Gradient gradient(const Matrix& Ps, const Matrix& Pt, const Resolved& rs) {
  const Index n = Ps.rows();
  if (Pt.rows() != n)
    throw std::invalid_argument("lsmi: paired batches must share n");
  const double nd = static_cast<double>(n);

  const kernels::Bandwidth bw_s(rs.sigma_s);
  const Matrix K = kernels::gaussian_gram(Ps, bw_s);
  const Matrix L = kernels::gaussian_gram(Pt, kernels::Bandwidth(rs.sigma_t));
  const Matrix N = gram_square(L);
  const Matrix H = gram_square(K).cwiseProduct(N) / (nd * nd);
  const Vector h = K.cwiseProduct(L).rowwise().sum() / nd;

  Matrix A = H;
  A.diagonal().array() += rs.delta;
  Eigen::LDLT<Matrix> ldlt(A);
  const double min_pivot = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || min_pivot <= 0.0)
    throw NumericError("lsmi gradient: solve failed (smallest pivot " +
                       fmt17(min_pivot) + ")", min_pivot);
  const Vector alpha = ldlt.solve(h);

  Gradient out;
  out.value = alpha.dot(h) / 2.0 - 0.5;

  // dS/dK with alpha frozen: (1/2n) alpha_i L_ij
  Matrix G = (alpha / (2.0 * nd)).asDiagonal() * L;
  if (rs.grad_mode == GradMode::full) {
    // implicit differentiation through the solve, as a VJP:
    //   u = (H + delta I)^-1 dS/dalpha,  dS/dalpha = h / 2
    // dS/dh += u, dS/dH = -u alpha^T, both chained back into K.
    const Vector u = ldlt.solve(h / 2.0);
    G += (u / nd).asDiagonal() * L;
    Matrix P = -(u * alpha.transpose()).cwiseProduct(N) / (nd * nd);
    G += (P + P.transpose()) * K;
  }
  out.d_ps = kernels::gram_vjp(Ps, bw_s, G);
  return out;
}

}  // namespace depmax::lsmi

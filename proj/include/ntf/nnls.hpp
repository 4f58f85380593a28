#pragma once

// Nonnegative least squares by block principal pivoting.
//
// Every problem is given in normal-equation form: for each right-hand side
// column c of `crossterm`, find w >= 0 minimizing  1/2 w^T G w - c^T w  with
// G = gram + ridge * I.  This is min ||H w - y||^2 with G = H^T H, c = H^T y.
//
// Columns are solved independently by solve_nnls_column(), so callers may
// split the right-hand sides across workers; the result for a column depends
// only on (G, c, options).

#include "ntf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace ntf {

struct NnlsProblem {
  Matrix gram;       // R x R, symmetric positive semidefinite
  Matrix crossterm;  // R x m, one right-hand side per column
  double ridge = 0.0;
};

struct NnlsOptions {
  double tol = 1e-8;
  int max_iter = 0;  // per column; 0 selects 5 * R
};

struct NnlsSolution {
  Matrix w;  // m x R, row q solves column q of the crossterm
  double kkt_residual = 0.0;
  int iterations = 0;  // largest per-column exchange count
  bool converged = true;
};

struct NnlsColumnResult {
  Vector w;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// max over entries of: max(0, -w), |g| where w > 0, max(0, -g) where w == 0,
/// with g = G w - c.
inline double nnls_kkt_residual(const Matrix& gram, const Eigen::Ref<const Vector>& c,
                                const Eigen::Ref<const Vector>& w) {
  const Vector g = gram * w - c;
  double res = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    res = std::max(res, -w[i]);
    res = std::max(res, w[i] > 0.0 ? std::abs(g[i]) : -g[i]);
  }
  return res;
}

inline double nnls_kkt_residual(const NnlsProblem& p, const Matrix& w) {
  const Matrix gram = p.gram + p.ridge * Matrix::Identity(p.gram.rows(), p.gram.cols());
  double res = 0.0;
  for (Eigen::Index q = 0; q < p.crossterm.cols(); ++q) {
    res = std::max(res, nnls_kkt_residual(gram, p.crossterm.col(q), w.row(q).transpose()));
  }
  return res;
}

/// 1/2 w^T G w - c^T w
inline double nnls_objective(const Matrix& gram, const Eigen::Ref<const Vector>& c,
                             const Eigen::Ref<const Vector>& w) {
  return 0.5 * w.dot(gram * w) - c.dot(w);
}

namespace detail {

// Solves G_FF x_F = c_F.  A failed Cholesky gets a small ridge first, then a
// rank-revealing fallback; both leave the passive-set semantics intact.
inline Vector solve_passive(const Matrix& gram, const Vector& c, const std::vector<Eigen::Index>& f) {
  const auto nf = static_cast<Eigen::Index>(f.size());
  Matrix sub(nf, nf);
  Vector rhs(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    rhs[a] = c[f[a]];
    for (Eigen::Index b = 0; b < nf; ++b) sub(a, b) = gram(f[a], f[b]);
  }
  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  const double trace = gram.trace();
  const double ridge = trace > 0.0 ? 1e-12 * trace / static_cast<double>(gram.rows()) : 1e-12;
  Matrix reg = sub;
  reg.diagonal().array() += ridge;
  llt.compute(reg);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  return sub.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace detail

/// Block principal pivoting for one right-hand side.  Uses full exchanges of
/// all infeasible variables, switching to the single largest-index exchange
/// after three consecutive iterations that fail to reduce the number of
/// infeasible variables.
inline NnlsColumnResult solve_nnls_column(const Matrix& gram, const Eigen::Ref<const Vector>& c,
                                          const NnlsOptions& opts = {}) {
  const Eigen::Index r = gram.rows();
  if (gram.cols() != r || c.size() != r) throw std::invalid_argument("solve_nnls: gram/crossterm shape mismatch");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_nnls: tol must be positive");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 5 * static_cast<int>(std::max<Eigen::Index>(r, 1));

  NnlsColumnResult out;
  out.w = Vector::Zero(r);
  if (r == 0) return out;

  // Gradient threshold: the requested tolerance, raised to the roundoff floor
  // of the problem so large-magnitude data cannot cycle on noise.
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor_tol = [&] {
    const double gmax = gram.cwiseAbs().maxCoeff();
    const double cmax = c.cwiseAbs().maxCoeff();
    const double dmax = gram.diagonal().maxCoeff();
    const double xscale = dmax > 0.0 ? cmax / dmax : 0.0;
    return 64.0 * eps * static_cast<double>(r) * (gmax * xscale + cmax);
  }();
  const double gtol = std::max(opts.tol, floor_tol);

  std::vector<char> passive(r, 0);
  Vector x = Vector::Zero(r);
  Vector y = -c;

  Vector best = Vector::Zero(r);
  double best_res = nnls_kkt_residual(gram, c, best);

  int backup = 3;
  Eigen::Index ninf_limit = r + 1;
  int iter = 0;
  bool done = false;
  std::vector<Eigen::Index> infeasible;
  infeasible.reserve(r);

  while (true) {
    infeasible.clear();
    for (Eigen::Index i = 0; i < r; ++i) {
      if (passive[i] ? x[i] < 0.0 : y[i] < -gtol) infeasible.push_back(i);
    }
    if (infeasible.empty()) {
      done = true;
      break;
    }
    if (iter >= max_iter) break;
    ++iter;

    const auto ninf = static_cast<Eigen::Index>(infeasible.size());
    if (ninf < ninf_limit) {
      ninf_limit = ninf;
      backup = 3;
      for (auto i : infeasible) passive[i] = !passive[i];
    } else if (backup > 0) {
      --backup;
      for (auto i : infeasible) passive[i] = !passive[i];
    } else {
      const auto i = infeasible.back();
      passive[i] = !passive[i];
    }

    std::vector<Eigen::Index> f;
    for (Eigen::Index i = 0; i < r; ++i)
      if (passive[i]) f.push_back(i);
    x.setZero();
    if (!f.empty()) {
      const Vector xf = detail::solve_passive(gram, c, f);
      for (std::size_t a = 0; a < f.size(); ++a) x[f[a]] = xf[static_cast<Eigen::Index>(a)];
    }
    y = gram * x - c;
    for (auto i : f) y[i] = 0.0;

    const Vector clamped = x.cwiseMax(0.0);
    const double res = nnls_kkt_residual(gram, c, clamped);
    if (res < best_res) {
      best_res = res;
      best = clamped;
    }
  }

  out.iterations = iter;
  out.converged = done;
  out.w = done ? Vector(x.cwiseMax(0.0)) : best;
  out.kkt_residual = nnls_kkt_residual(gram, c, out.w);
  return out;
}

inline NnlsSolution solve_nnls(const NnlsProblem& p, const NnlsOptions& opts = {}) {
  if (p.gram.rows() != p.gram.cols() || p.crossterm.rows() != p.gram.rows()) {
    throw std::invalid_argument("solve_nnls: gram is " + std::to_string(p.gram.rows()) + "x" +
                                std::to_string(p.gram.cols()) + " but crossterm has " +
                                std::to_string(p.crossterm.rows()) + " rows");
  }
  if (p.ridge < 0.0) throw std::invalid_argument("solve_nnls: ridge must be nonnegative");
  if (p.gram.size() > 0 &&
      (p.gram - p.gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p.gram.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("solve_nnls: gram matrix is not symmetric");
  }
  const Matrix gram = p.gram + p.ridge * Matrix::Identity(p.gram.rows(), p.gram.cols());
  NnlsSolution sol;
  sol.w.resize(p.crossterm.cols(), p.gram.rows());
  for (Eigen::Index q = 0; q < p.crossterm.cols(); ++q) {
    const NnlsColumnResult col = solve_nnls_column(gram, p.crossterm.col(q), opts);
    sol.w.row(q) = col.w.transpose();
    sol.kkt_residual = std::max(sol.kkt_residual, col.kkt_residual);
    sol.iterations = std::max(sol.iterations, col.iterations);
    sol.converged = sol.converged && col.converged;
  }
  return sol;
}

}  // namespace ntf

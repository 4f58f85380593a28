#pragma once

// Nonnegative CP decomposition by alternating nonnegative least squares.
//
// Each sweep updates A, then B, then C.  The subproblem for A is
//   min_{A >= 0} || X_(1) - A (C ⊙ B)^T ||_F^2
// solved row by row with gram = (C^T C) * (B^T B) (Hadamard) and
// crossterm = (C ⊙ B)^T X_(1)^T, the latter computed without forming the
// Khatri-Rao product.

#include "ntf/nnls.hpp"
#include "ntf/parallel.hpp"
#include "ntf/random.hpp"
#include "ntf/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ntf {

enum class InitKind { random_uniform, random_scaled };

struct FitConfig {
  int rank = 1;
  int max_sweeps = 500;
  double rel_tol = 1e-8;
  int restarts = 20;
  std::uint64_t seed = 0;
  InitKind init = InitKind::random_scaled;
  int jobs = 1;  // worker threads for restarts; never changes the result
  NnlsOptions nnls;

  void validate() const {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  }
};

enum class FitStatus { ok, solver_failure };

struct FitResult {
  KruskalTensor factors;  // normalized
  double rel_error = 1.0;
  int sweeps_used = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // [0] is the initial objective, then one entry per sweep
  std::uint64_t seed = 0;
  FitStatus status = FitStatus::ok;
  std::string message;

  bool ok() const { return status == FitStatus::ok; }
};

struct FitBestResult {
  FitResult best;
  std::size_t best_index = 0;
  std::vector<FitResult> runs;  // one per restart, in seed order
};

/// Seed used by restart k of a run with base seed `base`.
inline std::uint64_t restart_seed(std::uint64_t base, std::size_t k) { return base + k; }

namespace detail {

// Y(i, j, r) = sum_k X(i, j, k) C(k, r), stored as row (i * T + j) of an NT x R matrix.
inline Matrix contract_mode3(const DenseTensor3& x, const Matrix& c) {
  const Dims3 dims = x.dims();
  const Eigen::Index rank = c.cols();
  Matrix y(static_cast<Eigen::Index>(dims.n * dims.t), rank);
  for (std::size_t i = 0; i < dims.n; ++i)
    for (std::size_t j = 0; j < dims.t; ++j) {
      const Eigen::Map<const Vector> fib(x.fiber(i, j), static_cast<Eigen::Index>(dims.d));
      const auto row = static_cast<Eigen::Index>(i * dims.t + j);
      for (Eigen::Index r = 0; r < rank; ++r) y(row, r) = fib.dot(c.col(r));
    }
  return y;
}

// M3(k, r) = sum_ij X(i, j, k) A(i, r) B(j, r) = X_(3) (B ⊙ A)
inline Matrix mttkrp_mode3(const DenseTensor3& x, const Matrix& a, const Matrix& b) {
  const Dims3 dims = x.dims();
  const Eigen::Index rank = a.cols();
  const auto d = static_cast<Eigen::Index>(dims.d);
  Matrix m = Matrix::Zero(d, rank);
  for (std::size_t i = 0; i < dims.n; ++i)
    for (std::size_t j = 0; j < dims.t; ++j) {
      const Eigen::Map<const Vector> fib(x.fiber(i, j), d);
      for (Eigen::Index r = 0; r < rank; ++r) {
        const double w = a(i, r) * b(j, r);
        if (w != 0.0) m.col(r) += w * fib;
      }
    }
  return m;
}

inline Matrix update_factor(const Matrix& gram, const Matrix& mttkrp, const NnlsOptions& opts,
                            int sweep, const char* name) {
  NnlsProblem p{gram, mttkrp.transpose(), 0.0};
  NnlsSolution sol = solve_nnls(p, opts);
  if (!sol.converged) {
    // Retry the stragglers with a generous exchange budget before giving up.
    NnlsOptions retry = opts;
    retry.max_iter = 100 * static_cast<int>(gram.rows()) + 100;
    sol = solve_nnls(p, retry);
    if (!sol.converged) {
      throw numerical_error("NNLS did not converge updating factor " + std::string(name) + " in sweep " +
                            std::to_string(sweep) + " (KKT residual " + std::to_string(sol.kkt_residual) + ")");
    }
  }
  return sol.w;
}

}  // namespace detail

/// One A -> B -> C update cycle.  The returned model has unit weights; the
/// incoming weights are folded into C first.
inline KruskalTensor als_sweep(const DenseTensor3& x, const KruskalTensor& k, const NnlsOptions& opts = {},
                               int sweep_index = 0) {
  if (k.dims() != x.dims()) {
    throw std::invalid_argument("als_sweep: model dims " + to_string(k.dims()) + " do not match tensor " +
                                to_string(x.dims()));
  }
  const Dims3 dims = x.dims();
  const auto n = static_cast<Eigen::Index>(dims.n);
  const auto t = static_cast<Eigen::Index>(dims.t);
  const Eigen::Index rank = static_cast<Eigen::Index>(k.rank());

  Matrix a = k.a;
  Matrix b = k.b;
  Matrix c = k.scaled_c();

  const Matrix y = detail::contract_mode3(x, c);
  const Matrix ctc = c.transpose() * c;

  // A: M1(i, r) = sum_j Y(i, j, r) B(j, r)
  {
    Matrix m1(n, rank);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index r = 0; r < rank; ++r) m1(i, r) = y.col(r).segment(i * t, t).dot(b.col(r));
    const Matrix gram = ctc.cwiseProduct(b.transpose() * b);
    a = detail::update_factor(gram, m1, opts, sweep_index, "A");
  }
  // B: M2(j, r) = sum_i Y(i, j, r) A(i, r)
  {
    Matrix m2 = Matrix::Zero(t, rank);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index r = 0; r < rank; ++r) m2.col(r) += a(i, r) * y.col(r).segment(i * t, t);
    const Matrix gram = ctc.cwiseProduct(a.transpose() * a);
    b = detail::update_factor(gram, m2, opts, sweep_index, "B");
  }
  // C
  {
    const Matrix m3 = detail::mttkrp_mode3(x, a, b);
    const Matrix gram = (b.transpose() * b).cwiseProduct(a.transpose() * a);
    c = detail::update_factor(gram, m3, opts, sweep_index, "C");
  }
  return KruskalTensor(std::move(a), std::move(b), std::move(c));
}

/// Random nonnegative starting point; random_scaled rescales it so the
/// initial model has the same Frobenius norm as X.
inline KruskalTensor initial_model(const DenseTensor3& x, int rank, InitKind init, std::uint64_t seed) {
  const Dims3 dims = x.dims();
  Rng rng(seed);
  auto draw = [&](std::size_t rows) {
    Matrix m(static_cast<Eigen::Index>(rows), rank);
    for (Eigen::Index r = 0; r < rank; ++r)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, r) = rng.uniform();
    return m;
  };
  Matrix a = draw(dims.n);
  Matrix b = draw(dims.t);
  Matrix c = draw(dims.d);
  if (init == InitKind::random_scaled) {
    // ||[[A,B,C]]||^2 = 1^T (A^T A * B^T B * C^T C) 1
    const Matrix g = (a.transpose() * a).cwiseProduct(b.transpose() * b).cwiseProduct(c.transpose() * c);
    const double model_norm = std::sqrt(std::max(g.sum(), 0.0));
    const double target = x.norm();
    const double s = model_norm > 0.0 ? std::cbrt(target / model_norm) : 0.0;
    a *= s;
    b *= s;
    c *= s;
  }
  return KruskalTensor(std::move(a), std::move(b), std::move(c));
}

/// One ALS run from the seeded starting point.  Stops when the relative
/// objective change drops below cfg.rel_tol, the objective reaches the
/// roundoff floor, or after cfg.max_sweeps sweeps.
inline FitResult fit_once(const DenseTensor3& x, const FitConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (x.empty()) throw std::invalid_argument("fit: tensor is empty");

  FitResult res;
  res.seed = seed;
  const double norm_sq = x.norm() * x.norm();
  const double floor = 1e-30 * norm_sq;

  KruskalTensor model = initial_model(x, cfg.rank, cfg.init, seed);
  double prev = squared_residual(x, model);
  res.objective_trace.push_back(prev);

  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    try {
      model = als_sweep(x, model, cfg.nnls, s);
    } catch (const numerical_error& e) {
      res.status = FitStatus::solver_failure;
      res.message = e.what();
      break;
    }
    const double obj = squared_residual(x, model);
    res.objective_trace.push_back(obj);
    res.sweeps_used = s;
    const double change = std::abs(prev - obj) / std::max(prev, std::numeric_limits<double>::min());
    prev = obj;
    if (change < cfg.rel_tol || obj <= floor) {
      res.converged = true;
      break;
    }
  }

  res.factors = normalize(model);
  const double obj = res.objective_trace.back();
  res.rel_error = norm_sq > 0.0 ? std::sqrt(obj / norm_sq) : (obj > 0.0 ? 1.0 : 0.0);
  return res;
}

/// cfg.restarts independent fits with seeds restart_seed(cfg.seed, k).  The
/// run with the smallest rel_error is reported (lowest k on ties); failed
/// runs never win.  Throws numerical_error when every restart fails.
inline FitBestResult fit_best(const DenseTensor3& x, const FitConfig& cfg) {
  cfg.validate();
  FitBestResult out;
  out.runs.resize(static_cast<std::size_t>(cfg.restarts));
  parallel_for(out.runs.size(), cfg.jobs,
               [&](std::size_t k) { out.runs[k] = fit_once(x, cfg, restart_seed(cfg.seed, k)); });

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < out.runs.size(); ++k) {
    if (!out.runs[k].ok()) continue;
    if (!best || out.runs[k].rel_error < out.runs[*best].rel_error) best = k;
  }
  if (!best) {
    throw numerical_error("all " + std::to_string(cfg.restarts) + " restarts failed at rank " +
                          std::to_string(cfg.rank) + ": " + out.runs.front().message);
  }
  out.best_index = *best;
  out.best = out.runs[*best];
  return out;
}

}  // namespace ntf

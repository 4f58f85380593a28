#pragma once

// Dense 3-way tensors, Kruskal (CP) models and the multilinear primitives
// shared by the factorization, diagnostic and analysis code.
//
// Storage convention: X(i, j, k) lives at ((i * T) + j) * D + k, i.e. the
// third index varies fastest.  Unfoldings use the ordering under which
//
//     X_(1) = A (C ⊙ B)^T,   X_(2) = B (C ⊙ A)^T,   X_(3) = C (B ⊙ A)^T
//
// hold exactly, with ⊙ the Khatri-Rao product defined in khatri_rao().

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ntf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for numerical breakdowns (solver failure, degenerate factors).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dims3 {
  std::size_t n = 0;  // banks
  std::size_t t = 0;  // intraday intervals
  std::size_t d = 0;  // days

  std::size_t size() const { return n * t * d; }
  std::size_t operator[](int mode) const {
    switch (mode) {
      case 1: return n;
      case 2: return t;
      case 3: return d;
      default: throw std::invalid_argument("mode must be 1, 2 or 3");
    }
  }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

inline std::string to_string(const Dims3& d) {
  return std::to_string(d.n) + "x" + std::to_string(d.t) + "x" + std::to_string(d.d);
}

/// Nonnegative N x T x D tensor with a single contiguous value store.
class DenseTensor3 {
 public:
  DenseTensor3() = default;

  explicit DenseTensor3(Dims3 dims) : dims_(dims), values_(dims.size(), 0.0) {}

  DenseTensor3(Dims3 dims, std::vector<double> values)
      : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims_.size()) {
      throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                  " does not match dims " + to_string(dims_));
    }
    for (double v : values_) {
      if (!(v >= 0.0)) throw std::invalid_argument("tensor entries must be nonnegative and finite");
    }
  }

  const Dims3& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims_.t + j) * dims_.d + k;
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[offset(i, j, k)];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[offset(i, j, k)];
  }

  /// Pointer to the contiguous mode-3 fiber X(i, j, :).
  const double* fiber(std::size_t i, std::size_t j) const { return values_.data() + offset(i, j, 0); }

  const std::vector<double>& values() const { return values_; }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  double norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;

 private:
  Dims3 dims_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Unfoldings

inline Matrix matricize(const DenseTensor3& x, int mode) {
  const auto [n, t, d] = x.dims();
  switch (mode) {
    case 1: {
      Matrix m(n, t * d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < t; ++j)
          for (std::size_t k = 0; k < d; ++k) m(i, k * t + j) = x(i, j, k);
      return m;
    }
    case 2: {
      Matrix m(t, n * d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < t; ++j)
          for (std::size_t k = 0; k < d; ++k) m(j, k * n + i) = x(i, j, k);
      return m;
    }
    case 3: {
      Matrix m(d, n * t);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < t; ++j)
          for (std::size_t k = 0; k < d; ++k) m(k, j * n + i) = x(i, j, k);
      return m;
    }
    default:
      throw std::invalid_argument("matricize: mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

/// Inverse of matricize(). Entries must be nonnegative.
inline DenseTensor3 tensorize(const Matrix& m, int mode, Dims3 dims) {
  const auto [n, t, d] = dims;
  std::size_t rows = 0, cols = 0;
  switch (mode) {
    case 1: rows = n; cols = t * d; break;
    case 2: rows = t; cols = n * d; break;
    case 3: rows = d; cols = n * t; break;
    default:
      throw std::invalid_argument("tensorize: mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw std::invalid_argument("tensorize: " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + " matrix does not unfold dims " +
                                to_string(dims) + " along mode " + std::to_string(mode));
  }
  std::vector<double> values(dims.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        double v = 0.0;
        switch (mode) {
          case 1: v = m(i, k * t + j); break;
          case 2: v = m(j, k * n + i); break;
          default: v = m(k, j * n + i); break;
        }
        values[(i * t + j) * d + k] = v;
      }
  return DenseTensor3(dims, std::move(values));
}

/// Column-wise Kronecker product: column r is a_r ⊗ b_r, row index ia * rows(B) + ib.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.cols()) + ")");
  }
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    for (Eigen::Index ia = 0; ia < a.rows(); ++ia)
      out.col(r).segment(ia * b.rows(), b.rows()) = a(ia, r) * b.col(r);
  return out;
}

// ---------------------------------------------------------------------------
// Kruskal models

/// CP model [[weights; A, B, C]].  After normalize(), the columns of A, B and C
/// have unit Euclidean norm and all magnitude sits in `weights`, so that
/// weights ∘ C (see scaled_c()) carries the interday activity level.
struct KruskalTensor {
  Matrix a;  // N x R bank loadings
  Matrix b;  // T x R intraday activity
  Matrix c;  // D x R interday activity
  Vector weights;

  KruskalTensor() = default;
  KruskalTensor(Matrix a_, Matrix b_, Matrix c_)
      : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), weights(Vector::Ones(a.cols())) {
    validate();
  }
  KruskalTensor(Matrix a_, Matrix b_, Matrix c_, Vector w)
      : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), weights(std::move(w)) {
    validate();
  }

  std::size_t rank() const { return static_cast<std::size_t>(a.cols()); }
  Dims3 dims() const {
    return {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()),
            static_cast<std::size_t>(c.rows())};
  }

  /// D x R interday activity with the component weights folded in.
  Matrix scaled_c() const { return c * weights.asDiagonal(); }

  void validate() const {
    if (b.cols() != a.cols() || c.cols() != a.cols() || weights.size() != a.cols()) {
      throw std::invalid_argument("KruskalTensor: factor column counts and weight count must agree");
    }
    auto nonneg = [](const auto& m) { return m.size() == 0 || (m.array() >= 0.0).all(); };
    if (!nonneg(a) || !nonneg(b) || !nonneg(c) || !nonneg(weights)) {
      throw std::invalid_argument("KruskalTensor: entries must be nonnegative");
    }
  }
};

/// Unit-norm columns for A, B and C with the scale moved into the weights.
/// A component with any all-zero column gets weight 0 and zero columns.
inline KruskalTensor normalize(const KruskalTensor& k) {
  KruskalTensor out = k;
  for (Eigen::Index r = 0; r < out.a.cols(); ++r) {
    const double na = out.a.col(r).norm();
    const double nb = out.b.col(r).norm();
    const double nc = out.c.col(r).norm();
    if (na == 0.0 || nb == 0.0 || nc == 0.0 || out.weights[r] == 0.0) {
      out.a.col(r).setZero();
      out.b.col(r).setZero();
      out.c.col(r).setZero();
      out.weights[r] = 0.0;
      continue;
    }
    out.a.col(r) /= na;
    out.b.col(r) /= nb;
    out.c.col(r) /= nc;
    out.weights[r] *= na * nb * nc;
  }
  return out;
}

/// Dense tensor with entries sum_r w_r a_ir b_jr c_kr.
inline DenseTensor3 reconstruct(const KruskalTensor& k) {
  const Dims3 dims = k.dims();
  const auto rank = static_cast<Eigen::Index>(k.rank());
  std::vector<double> values(dims.size(), 0.0);
  Vector coef(rank);
  for (std::size_t i = 0; i < dims.n; ++i)
    for (std::size_t j = 0; j < dims.t; ++j) {
      for (Eigen::Index r = 0; r < rank; ++r) coef[r] = k.weights[r] * k.a(i, r) * k.b(j, r);
      double* out = values.data() + (i * dims.t + j) * dims.d;
      for (Eigen::Index r = 0; r < rank; ++r) {
        const double w = coef[r];
        if (w == 0.0) continue;
        const double* col = k.c.col(r).data();
        for (std::size_t kk = 0; kk < dims.d; ++kk) out[kk] += w * col[kk];
      }
    }
  return DenseTensor3(dims, std::move(values));
}

inline double frobenius_distance(const DenseTensor3& x, const DenseTensor3& y) {
  if (x.dims() != y.dims()) {
    throw std::invalid_argument("frobenius_distance: dims " + to_string(x.dims()) + " vs " +
                                to_string(y.dims()));
  }
  double s = 0.0;
  const auto& xv = x.values();
  const auto& yv = y.values();
  for (std::size_t p = 0; p < xv.size(); ++p) {
    const double diff = xv[p] - yv[p];
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// distance / ||X||_F, or the bare distance when X is zero.
inline double relative_error(const DenseTensor3& x, const DenseTensor3& y) {
  const double dist = frobenius_distance(x, y);
  const double nx = x.norm();
  return nx > 0.0 ? dist / nx : dist;
}

/// ||X - [[K]]||_F^2 evaluated entrywise without forming the dense model.
inline double squared_residual(const DenseTensor3& x, const KruskalTensor& k) {
  const Dims3 dims = x.dims();
  if (k.dims() != dims) throw std::invalid_argument("squared_residual: model dims do not match tensor");
  const auto rank = static_cast<Eigen::Index>(k.rank());
  std::vector<double> model(dims.d);
  Vector coef(rank);
  double s = 0.0;
  for (std::size_t i = 0; i < dims.n; ++i)
    for (std::size_t j = 0; j < dims.t; ++j) {
      for (Eigen::Index r = 0; r < rank; ++r) coef[r] = k.weights[r] * k.a(i, r) * k.b(j, r);
      std::fill(model.begin(), model.end(), 0.0);
      for (Eigen::Index r = 0; r < rank; ++r) {
        const double w = coef[r];
        if (w == 0.0) continue;
        const double* col = k.c.col(r).data();
        for (std::size_t kk = 0; kk < dims.d; ++kk) model[kk] += w * col[kk];
      }
      const double* fib = x.fiber(i, j);
      for (std::size_t kk = 0; kk < dims.d; ++kk) {
        const double diff = fib[kk] - model[kk];
        s += diff * diff;
      }
    }
  return s;
}

}  // namespace ntf

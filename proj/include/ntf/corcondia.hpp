#pragma once

// Core consistency diagnostic and the rank-selection scan built on it.
//
// For fixed CP factors the least-squares Tucker3 core is
//   G = X x1 A^+ x2 B^+ x3 C^+,
// i.e. G_(1) = A^+ X_(1) (C^+ ⊗ B^+)^T, evaluated as three mode products so
// the Kronecker product is never formed.  The consistency score compares G
// with the unit superdiagonal tensor:
//   CC = 100 * (1 - sum (g_nmp - delta_nmp)^2 / R).

#include "ntf/cp_als.hpp"
#include "ntf/stats.hpp"
#include "ntf/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ntf {

/// R x R x R core, entry (n, m, p) at (n * R + m) * R + p.  Entries may be negative.
struct CoreTensor {
  std::size_t rank = 0;
  std::vector<double> values;

  double operator()(std::size_t n, std::size_t m, std::size_t p) const { return values[(n * rank + m) * rank + p]; }
  double& operator()(std::size_t n, std::size_t m, std::size_t p) { return values[(n * rank + m) * rank + p]; }
};

class degenerate_factor_error : public numerical_error {
 public:
  degenerate_factor_error(const std::string& factor, double cond)
      : numerical_error("factor " + factor + " is numerically rank deficient (condition number " +
                        std::to_string(cond) + ")"),
        factor_(factor) {}
  const std::string& factor() const { return factor_; }

 private:
  std::string factor_;
};

enum class PinvMode {
  strict,    // condition number above 1e12 is an error
  truncate,  // singular values below 1e12 * sigma_max are dropped
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Moore-Penrose pseudoinverse by SVD.
inline Matrix pseudo_inverse(const Matrix& m, const std::string& name, PinvMode mode) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  const double smin = s.size() > 0 ? s[s.size() - 1] : 0.0;
  const double cutoff = smax / kMaxConditionNumber;
  if (mode == PinvMode::strict && (smax == 0.0 || smin <= cutoff)) {
    throw degenerate_factor_error(name, smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
  }
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Least-squares Tucker3 core for the factors A, B, C of `k` (weights ignored).
inline CoreTensor tucker_core(const DenseTensor3& x, const KruskalTensor& k, PinvMode mode = PinvMode::strict) {
  if (k.dims() != x.dims()) throw std::invalid_argument("tucker_core: model dims do not match tensor");
  const Dims3 dims = x.dims();
  const auto rank = static_cast<Eigen::Index>(k.rank());
  const auto n = static_cast<Eigen::Index>(dims.n);
  const auto t = static_cast<Eigen::Index>(dims.t);

  const Matrix pa = pseudo_inverse(k.a, "A", mode);  // R x N
  const Matrix pb = pseudo_inverse(k.b, "B", mode);  // R x T
  const Matrix pc = pseudo_inverse(k.c, "C", mode);  // R x D

  // Z(i, j, p) = sum_k x_ijk pc(p, k); rows i*T + j.
  const Matrix z = detail::contract_mode3(x, pc.transpose());
  // W(i, m, p) = sum_j pb(m, j) Z(i, j, p); one R x R block per bank.
  // G(n, m, p) = sum_i pa(n, i) W(i, m, p).
  CoreTensor g{static_cast<std::size_t>(rank), std::vector<double>(static_cast<std::size_t>(rank * rank * rank), 0.0)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix w = pb * z.middleRows(i * t, t);  // R(m) x R(p)
    for (Eigen::Index nn = 0; nn < rank; ++nn) {
      const double s = pa(nn, i);
      if (s == 0.0) continue;
      for (Eigen::Index m = 0; m < rank; ++m)
        for (Eigen::Index p = 0; p < rank; ++p)
          g(static_cast<std::size_t>(nn), static_cast<std::size_t>(m), static_cast<std::size_t>(p)) += s * w(m, p);
    }
  }
  return g;
}

/// 100 * (1 - ||G - I_superdiag||^2 / R).
inline double core_consistency(const CoreTensor& g) {
  const std::size_t r = g.rank;
  if (r == 0) throw std::invalid_argument("core_consistency: empty core");
  double ss = 0.0;
  for (std::size_t n = 0; n < r; ++n)
    for (std::size_t m = 0; m < r; ++m)
      for (std::size_t p = 0; p < r; ++p) {
        const double target = (n == m && m == p) ? 1.0 : 0.0;
        const double diff = g(n, m, p) - target;
        ss += diff * diff;
      }
  return 100.0 * (1.0 - ss / static_cast<double>(r));
}

/// Factors with unit-norm A and B columns and all scale folded into C, the
/// convention under which an exact CP model has the unit superdiagonal core.
inline KruskalTensor core_normalized(const KruskalTensor& k) {
  const KruskalTensor nk = normalize(k);
  return KruskalTensor(nk.a, nk.b, nk.scaled_c());
}

/// Core consistency of model `k` against data `x`.
inline double core_consistency(const DenseTensor3& x, const KruskalTensor& k, PinvMode mode = PinvMode::strict) {
  return core_consistency(tucker_core(x, core_normalized(k), mode));
}

// ---------------------------------------------------------------------------
// Rank scan

struct RankRecord {
  int rank = 0;
  std::vector<double> cc_values;  // one per successful restart, in seed order
  double cc_mean = 0.0;
  double cc_lo = 0.0;  // 95% Student-t interval of the mean
  double cc_hi = 0.0;
  double best_rel_error = 1.0;
  int failed_runs = 0;
  int degenerate_runs = 0;  // runs whose factors needed pseudoinverse truncation
  bool failed = false;
  std::string message;
};

struct RankScanReport {
  std::vector<RankRecord> ranks;
  std::optional<int> selected_rank;
  double threshold = 85.0;
  FitConfig config;
};

/// max R' with cc_mean(R') > threshold among non-failed ranks.
inline std::optional<int> select_rank(const std::vector<RankRecord>& ranks, double threshold) {
  std::optional<int> sel;
  for (const auto& rec : ranks)
    if (!rec.failed && rec.cc_mean > threshold && (!sel || rec.rank > *sel)) sel = rec.rank;
  return sel;
}

/// Fits cfg.restarts models at every rank 1..max_rank and averages their core
/// consistency.  Runs whose factors are rank deficient are scored with the
/// truncated pseudoinverse (a dead component counts against the score).
inline RankScanReport rank_scan(const DenseTensor3& x, int max_rank, double threshold, const FitConfig& cfg) {
  if (max_rank < 1) throw std::invalid_argument("rank_scan: max rank must be >= 1");
  cfg.validate();
  RankScanReport report;
  report.threshold = threshold;
  report.config = cfg;

  for (int r = 1; r <= max_rank; ++r) {
    FitConfig rc = cfg;
    rc.rank = r;
    RankRecord rec;
    rec.rank = r;

    std::vector<FitResult> runs(static_cast<std::size_t>(rc.restarts));
    std::vector<std::optional<double>> cc(runs.size());
    std::vector<char> degenerate(runs.size(), 0);
    parallel_for(runs.size(), rc.jobs, [&](std::size_t k) {
      runs[k] = fit_once(x, rc, restart_seed(rc.seed, k));
      if (!runs[k].ok()) return;
      try {
        cc[k] = core_consistency(x, runs[k].factors, PinvMode::strict);
      } catch (const degenerate_factor_error&) {
        degenerate[k] = 1;
        cc[k] = core_consistency(x, runs[k].factors, PinvMode::truncate);
      }
    });

    for (std::size_t k = 0; k < runs.size(); ++k) {
      if (!runs[k].ok()) {
        ++rec.failed_runs;
        if (rec.message.empty()) rec.message = runs[k].message;
        continue;
      }
      rec.degenerate_runs += degenerate[k];
      rec.cc_values.push_back(*cc[k]);
      rec.best_rel_error = std::min(rec.best_rel_error, runs[k].rel_error);
    }
    if (rec.cc_values.empty()) {
      rec.failed = true;
      if (rec.message.empty()) rec.message = "no successful restart";
    } else {
      const MeanInterval mi = mean_with_t_interval(rec.cc_values, 0.95);
      rec.cc_mean = mi.mean;
      rec.cc_lo = mi.lo;
      rec.cc_hi = mi.hi;
    }
    report.ranks.push_back(std::move(rec));
  }
  report.selected_rank = select_rank(report.ranks, threshold);
  return report;
}

}  // namespace ntf

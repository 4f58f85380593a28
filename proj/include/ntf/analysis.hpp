#pragma once

// Interpretation of a fitted model: component ordering, daily shares, bank
// affiliation sets and their overlaps, membership levels, and attribute
// statistics of the affiliated banks.

#include "ntf/ingest.hpp"
#include "ntf/stats.hpp"
#include "ntf/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace ntf {

// ---------------------------------------------------------------------------
// Ordering

/// Number of intervals covering 08:00-10:00 at the given resolution.
inline std::size_t morning_intervals(int delta_minutes) {
  check_delta(delta_minutes);
  return static_cast<std::size_t>((120 + delta_minutes - 1) / delta_minutes);
}

/// Permutation listing components by ascending cumulative intraday activity
/// over the first `window` intervals, computed on unit-norm B columns.
/// Ties keep the original order.
inline std::vector<std::size_t> order_components(const KruskalTensor& k, std::size_t window) {
  const std::size_t rank = k.rank();
  const auto w = static_cast<Eigen::Index>(std::min<std::size_t>(window, static_cast<std::size_t>(k.b.rows())));
  std::vector<double> score(rank, 0.0);
  for (std::size_t r = 0; r < rank; ++r) {
    const auto col = k.b.col(static_cast<Eigen::Index>(r));
    const double nrm = col.norm();
    score[r] = nrm > 0.0 ? col.head(w).sum() / nrm : 0.0;
  }
  std::vector<std::size_t> perm(rank);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) { return score[x] < score[y]; });
  return perm;
}

/// Component r of the result is component perm[r] of the input.
inline KruskalTensor permute_components(const KruskalTensor& k, const std::vector<std::size_t>& perm) {
  if (perm.size() != k.rank()) throw std::invalid_argument("permutation length does not match rank");
  KruskalTensor out = k;
  for (std::size_t r = 0; r < perm.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(perm[r]);
    const auto dst = static_cast<Eigen::Index>(r);
    out.a.col(dst) = k.a.col(src);
    out.b.col(dst) = k.b.col(src);
    out.c.col(dst) = k.c.col(src);
    out.weights[dst] = k.weights[src];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Daily shares

/// D x R shares of each component in the weight-scaled interday activity.
/// Days with zero total activity have no defined share (std::nullopt).
struct ShareTable {
  std::size_t days = 0;
  std::size_t rank = 0;
  std::vector<std::optional<double>> values;  // row-major (day, component)

  std::optional<double> at(std::size_t day, std::size_t r) const { return values[day * rank + r]; }
};

inline ShareTable component_share(const KruskalTensor& k) {
  const Matrix c = k.scaled_c();
  ShareTable out{static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols()), {}};
  out.values.reserve(out.days * out.rank);
  for (Eigen::Index d = 0; d < c.rows(); ++d) {
    const double total = c.row(d).sum();
    for (Eigen::Index r = 0; r < c.cols(); ++r) {
      if (total > 0.0) {
        out.values.emplace_back(c(d, r) / total);
      } else {
        out.values.emplace_back(std::nullopt);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Affiliation

/// Banks whose loading on each component lies in the top (100 - percentile)%.
/// The cut is the value ranked ceil((100 - percentile)/100 * N)-th from the
/// top; every bank tied with it is included.
inline std::vector<std::vector<std::size_t>> affiliate_banks(const KruskalTensor& k, double percentile = 90.0) {
  if (!(percentile >= 0.0 && percentile < 100.0)) throw std::invalid_argument("percentile must lie in [0, 100)");
  const auto n = static_cast<std::size_t>(k.a.rows());
  std::vector<std::vector<std::size_t>> sets(k.rank());
  if (n == 0) return sets;
  const auto top = static_cast<std::size_t>(std::ceil((100.0 - percentile) * static_cast<double>(n) / 100.0));
  const std::size_t keep = std::clamp<std::size_t>(top, 1, n);
  for (std::size_t r = 0; r < k.rank(); ++r) {
    const auto col = k.a.col(static_cast<Eigen::Index>(r));
    std::vector<double> sorted(col.data(), col.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double cut = sorted[keep - 1];
    for (std::size_t i = 0; i < n; ++i)
      if (col[static_cast<Eigen::Index>(i)] >= cut) sets[r].push_back(i);
  }
  return sets;
}

/// |A ∩ B| / |A ∪ B| on sorted index sets; 0 for two empty sets.
inline double jaccard_overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> inter;
  std::vector<std::size_t> uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline Matrix jaccard_matrix(const std::vector<std::vector<std::size_t>>& sets) {
  const auto r = static_cast<Eigen::Index>(sets.size());
  Matrix m(r, r);
  for (Eigen::Index p = 0; p < r; ++p)
    for (Eigen::Index q = 0; q < r; ++q)
      m(p, q) = p == q ? 1.0 : jaccard_overlap(sets[static_cast<std::size_t>(p)], sets[static_cast<std::size_t>(q)]);
  return m;
}

// ---------------------------------------------------------------------------
// Membership

/// N x D membership levels a_r (w_r c_r)^T.
inline Matrix membership_level(const KruskalTensor& k, std::size_t r) {
  if (r >= k.rank()) throw std::out_of_range("component index out of range");
  const auto col = static_cast<Eigen::Index>(r);
  return k.a.col(col) * (k.weights[col] * k.c.col(col)).transpose();
}

/// Per-day mean membership over the banks in `members`.
inline Vector mean_membership(const KruskalTensor& k, std::size_t r, const std::vector<std::size_t>& members) {
  const Matrix m = membership_level(k, r);
  Vector out = Vector::Zero(m.cols());
  if (members.empty()) return out;
  for (auto i : members) out += m.row(static_cast<Eigen::Index>(i)).transpose();
  return out / static_cast<double>(members.size());
}

// ---------------------------------------------------------------------------
// Attributes

enum class Role { aggressor_lender = 0, quoter_borrower = 1, aggressor_borrower = 2, quoter_lender = 3 };
inline constexpr std::array<const char*, 4> kRoleNames{"aggressor_lender", "quoter_borrower", "aggressor_borrower",
                                                      "quoter_lender"};

/// The aggressor accepts a posted quote; the quoter posted it.
inline Role classify_role(bool is_lender, Proposer proposer) {
  if (is_lender) return proposer == Proposer::borrower ? Role::aggressor_lender : Role::quoter_lender;
  return proposer == Proposer::borrower ? Role::quoter_borrower : Role::aggressor_borrower;
}

struct RoleFrequencies {
  std::vector<std::size_t> banks;                 // tensor rows that had transactions
  std::vector<std::array<double, 4>> per_bank;    // role frequencies, each sums to 1
  std::vector<std::size_t> excluded;              // members without transactions
  std::array<MeanInterval, 4> mean;               // across banks, 95% Student-t
};

inline RoleFrequencies attribute_frequencies(const std::vector<TransactionRecord>& records, const TensorIndex& index,
                                             const std::vector<std::size_t>& members) {
  std::map<std::string, std::size_t, std::less<>> row_of;
  for (std::size_t i = 0; i < index.bank_ids.size(); ++i) row_of.emplace(index.bank_ids[i], i);
  std::map<std::size_t, std::array<double, 4>> counts;
  for (auto i : members) {
    if (i >= index.bank_ids.size()) throw std::out_of_range("affiliated bank outside the tensor index");
    counts.emplace(i, std::array<double, 4>{});
  }
  auto tally = [&](const std::string& id, bool is_lender, Proposer p) {
    const auto it = row_of.find(id);
    if (it == row_of.end()) return;
    const auto c = counts.find(it->second);
    if (c == counts.end()) return;
    c->second[static_cast<std::size_t>(classify_role(is_lender, p))] += 1.0;
  };
  for (const auto& r : records) {
    tally(r.lender_id, true, r.proposer);
    tally(r.borrower_id, false, r.proposer);
  }

  RoleFrequencies out;
  for (const auto& [bank, c] : counts) {
    const double total = c[0] + c[1] + c[2] + c[3];
    if (total == 0.0) {
      out.excluded.push_back(bank);
      continue;
    }
    out.banks.push_back(bank);
    out.per_bank.push_back({c[0] / total, c[1] / total, c[2] / total, c[3] / total});
  }
  for (std::size_t role = 0; role < 4; ++role) {
    std::vector<double> xs;
    xs.reserve(out.per_bank.size());
    for (const auto& f : out.per_bank) xs.push_back(f[role]);
    out.mean[role] = mean_with_t_interval(xs, 0.95);
  }
  return out;
}

struct NationalityReport {
  std::size_t members = 0;
  std::size_t domestic = 0;
  double observed_share = 0.0;
  double p = 0.0;        // population domestic share
  double band_lo = 0.0;  // central 90% of Binomial(members, p) / members
  double band_hi = 0.0;
  bool outside = false;
};

/// Domestic share of `members` against the random-membership band.  `p`
/// defaults to the domestic share of all banks.
inline NationalityReport nationality_test(const std::vector<std::size_t>& members, const std::vector<bool>& domestic,
                                          std::optional<double> p = std::nullopt) {
  if (members.empty()) throw std::invalid_argument("nationality_test: empty bank set");
  NationalityReport out;
  out.members = members.size();
  for (auto i : members) {
    if (i >= domestic.size()) throw std::out_of_range("bank index outside the nationality table");
    out.domestic += domestic[i] ? 1 : 0;
  }
  if (p) {
    out.p = *p;
  } else {
    const auto dom = static_cast<double>(std::count(domestic.begin(), domestic.end(), true));
    out.p = domestic.empty() ? 0.0 : dom / static_cast<double>(domestic.size());
  }
  const double nr = static_cast<double>(out.members);
  out.observed_share = static_cast<double>(out.domestic) / nr;
  out.band_lo = static_cast<double>(binomial_quantile(out.members, out.p, 0.05)) / nr;
  out.band_hi = static_cast<double>(binomial_quantile(out.members, out.p, 0.95)) / nr;
  out.outside = out.observed_share < out.band_lo || out.observed_share > out.band_hi;
  return out;
}

/// Per-bank domestic flag from the ledger (true if any record marks it domestic).
inline std::vector<bool> domestic_flags(const std::vector<TransactionRecord>& records, const TensorIndex& index) {
  std::map<std::string, std::size_t, std::less<>> row_of;
  for (std::size_t i = 0; i < index.bank_ids.size(); ++i) row_of.emplace(index.bank_ids[i], i);
  std::vector<bool> out(index.bank_ids.size(), false);
  for (const auto& r : records) {
    if (auto it = row_of.find(r.lender_id); it != row_of.end() && r.lender_domestic) out[it->second] = true;
    if (auto it = row_of.find(r.borrower_id); it != row_of.end() && r.borrower_domestic) out[it->second] = true;
  }
  return out;
}

}  // namespace ntf

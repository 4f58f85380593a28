#pragma once

// JSON and CSV documents for fits and rank scans.
//
// FitResult document ("ntf.fit_result", version 1):
//   {
//     "schema": "ntf.fit_result", "version": 1,
//     "dims": [N, T, D], "rank": R, "seed": s,
//     "A": [[...R values...] x N], "B": [... x T], "C": [... x D],   row-major, unit-norm columns
//     "weights": [R values],
//     "rel_error": e, "sweeps_used": n, "converged": bool, "status": "ok" | "solver_failure",
//     "objective_trace": [initial, after sweep 1, ...]
//   }

#include "ntf/corcondia.hpp"
#include "ntf/cp_als.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace ntf {

inline constexpr int kFitSchemaVersion = 1;

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("factor row has wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline nlohmann::json fit_to_json(const FitResult& f) {
  const auto& k = f.factors;
  const Dims3 dims = k.dims();
  return {{"schema", "ntf.fit_result"},
          {"version", kFitSchemaVersion},
          {"dims", {dims.n, dims.t, dims.d}},
          {"rank", k.rank()},
          {"seed", f.seed},
          {"A", matrix_to_json(k.a)},
          {"B", matrix_to_json(k.b)},
          {"C", matrix_to_json(k.c)},
          {"weights", std::vector<double>(k.weights.data(), k.weights.data() + k.weights.size())},
          {"rel_error", f.rel_error},
          {"sweeps_used", f.sweeps_used},
          {"converged", f.converged},
          {"status", f.ok() ? "ok" : "solver_failure"},
          {"objective_trace", f.objective_trace}};
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "ntf.fit_result") throw std::invalid_argument("not a fit result document");
  if (j.at("version").get<int>() != kFitSchemaVersion) throw std::invalid_argument("unsupported fit result version");
  FitResult f;
  const auto rank = j.at("rank").get<Eigen::Index>();
  const auto w = j.at("weights").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != rank) throw std::invalid_argument("weight count does not match rank");
  f.factors = KruskalTensor(matrix_from_json(j.at("A"), rank), matrix_from_json(j.at("B"), rank),
                            matrix_from_json(j.at("C"), rank), Eigen::Map<const Vector>(w.data(), rank));
  const auto dims = j.at("dims").get<std::array<std::size_t, 3>>();
  if (f.factors.dims() != Dims3{dims[0], dims[1], dims[2]}) throw std::invalid_argument("factor shapes do not match dims");
  f.seed = j.at("seed").get<std::uint64_t>();
  f.rel_error = j.at("rel_error").get<double>();
  f.sweeps_used = j.at("sweeps_used").get<int>();
  f.converged = j.at("converged").get<bool>();
  f.status = j.at("status").get<std::string>() == "ok" ? FitStatus::ok : FitStatus::solver_failure;
  f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  return f;
}

/// Compact per-restart summary used next to the best fit.
inline nlohmann::json restart_summary(const FitBestResult& fb) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : fb.runs) {
    runs.push_back({{"seed", r.seed},
                    {"rel_error", r.rel_error},
                    {"sweeps_used", r.sweeps_used},
                    {"converged", r.converged},
                    {"status", r.ok() ? "ok" : "solver_failure"},
                    {"message", r.message}});
  }
  return {{"best_index", fb.best_index}, {"runs", runs}};
}

inline nlohmann::json rank_scan_to_json(const RankScanReport& rep) {
  nlohmann::json ranks = nlohmann::json::array();
  for (const auto& r : rep.ranks) {
    ranks.push_back({{"rank", r.rank},
                     {"cc_values", r.cc_values},
                     {"cc_mean", r.cc_mean},
                     {"cc_ci95", {r.cc_lo, r.cc_hi}},
                     {"best_rel_error", r.best_rel_error},
                     {"failed_runs", r.failed_runs},
                     {"degenerate_runs", r.degenerate_runs},
                     {"failed", r.failed},
                     {"message", r.message}});
  }
  nlohmann::json sel = rep.selected_rank ? nlohmann::json(*rep.selected_rank) : nlohmann::json(nullptr);
  return {{"schema", "ntf.rank_scan"},
          {"version", 1},
          {"threshold", rep.threshold},
          {"restarts", rep.config.restarts},
          {"seed", rep.config.seed},
          {"ranks", ranks},
          {"selected_rank", sel}};
}

/// Round-trip-exact decimal rendering for CSV cells.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns R, cc_mean, cc_lo, cc_hi; failed ranks are written as NA.
inline void write_rank_scan_csv(std::ostream& os, const RankScanReport& rep) {
  os << "R,cc_mean,cc_lo,cc_hi\n";
  for (const auto& r : rep.ranks) {
    if (r.failed) {
      os << r.rank << ",NA,NA,NA\n";
    } else {
      os << r.rank << ',' << fmt_double(r.cc_mean) << ',' << fmt_double(r.cc_lo) << ',' << fmt_double(r.cc_hi) << '\n';
    }
  }
}

}  // namespace ntf

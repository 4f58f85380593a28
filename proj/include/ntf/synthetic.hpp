#pragma once

// Synthetic three-group interbank market with known intraday and interday
// activity patterns.
//
// Intraday: bank i in group s has fitness a_s(t) proportional to the normal
// density f(t; mu_s, sigma), t = 1..T, and banks i, j trade in interval t
// with probability a_i(t) a_j(t).
// Interday: bank i in group s enters the market on day d with probability
// q_s(d): flat 0.5, a triangle peaking at D/2, and a ramp.

#include "ntf/random.hpp"
#include "ntf/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ntf {

enum class FitnessScale {
  peak,     // each group's profile rescaled so its grid maximum equals peak_fitness
  raw_pdf,  // the normal density itself
};

struct SyntheticConfig {
  std::size_t n = 120;
  std::size_t t = 20;
  std::size_t d = 1000;
  std::array<std::size_t, 3> group_sizes{40, 40, 40};
  double sigma = 5.0;
  std::array<double, 3> mus{0.0, 10.0, 20.0};
  FitnessScale scale = FitnessScale::peak;
  double peak_fitness = 0.8;
  std::uint64_t seed = 0;

  /// Defaults derived from (N, T, D): equal thirds, mus (0, T/2, T), sigma T/4.
  static SyntheticConfig with_dims(std::size_t n, std::size_t t, std::size_t d, std::uint64_t seed = 0) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.t = t;
    cfg.d = d;
    cfg.group_sizes = {n / 3 + (n % 3 > 0 ? 1 : 0), n / 3 + (n % 3 > 1 ? 1 : 0), n / 3};
    cfg.sigma = static_cast<double>(t) / 4.0;
    cfg.mus = {0.0, static_cast<double>(t) / 2.0, static_cast<double>(t)};
    cfg.seed = seed;
    return cfg;
  }

  void validate() const {
    if (n == 0 || t == 0 || d == 0) throw std::invalid_argument("synthetic market dims must be positive");
    if (group_sizes[0] + group_sizes[1] + group_sizes[2] != n) {
      throw std::invalid_argument("group sizes must sum to N");
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (scale == FitnessScale::peak && !(peak_fitness > 0.0 && peak_fitness <= 1.0)) {
      throw std::invalid_argument("peak fitness must lie in (0, 1]");
    }
  }
};

struct GroundTruth {
  std::vector<int> group;                 // per bank, 0-based group index
  std::array<std::vector<double>, 3> fitness;        // per group, length T
  std::array<std::vector<double>, 3> participation;  // per group, length D
};

inline double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Fitness of a group-`s` bank (s in 1..3) in interval t (1..T).
inline double fitness_profile(int s, std::size_t t, const SyntheticConfig& cfg) {
  if (s < 1 || s > 3) throw std::invalid_argument("group must be 1, 2 or 3");
  if (t < 1 || t > cfg.t) throw std::invalid_argument("interval index out of range");
  const double mu = cfg.mus[static_cast<std::size_t>(s - 1)];
  const double raw = normal_pdf(static_cast<double>(t), mu, cfg.sigma);
  if (cfg.scale == FitnessScale::raw_pdf) return std::min(raw, 1.0);
  double peak = 0.0;
  for (std::size_t u = 1; u <= cfg.t; ++u) peak = std::max(peak, normal_pdf(static_cast<double>(u), mu, cfg.sigma));
  return cfg.peak_fitness * raw / peak;
}

/// Daily participation probability of a group-`s` bank on day d (1..D).
inline double participation(int s, std::size_t d, const SyntheticConfig& cfg) {
  if (s < 1 || s > 3) throw std::invalid_argument("group must be 1, 2 or 3");
  if (d < 1 || d > cfg.d) throw std::invalid_argument("day index out of range");
  const double dd = static_cast<double>(d);
  const double days = static_cast<double>(cfg.d);
  double q = 0.0;
  switch (s) {
    case 1: q = 0.5; break;
    case 2: q = dd <= days / 2.0 ? (2.0 / days) * (dd - 1.0) : (-2.0 / days) * (dd - days); break;
    default: q = (1.0 / days) * (dd - 1.0); break;
  }
  return std::clamp(q, 0.0, 1.0);
}

inline GroundTruth ground_truth(const SyntheticConfig& cfg) {
  cfg.validate();
  GroundTruth gt;
  for (int s = 0; s < 3; ++s) {
    gt.group.insert(gt.group.end(), cfg.group_sizes[static_cast<std::size_t>(s)], s);
    auto& f = gt.fitness[static_cast<std::size_t>(s)];
    auto& q = gt.participation[static_cast<std::size_t>(s)];
    for (std::size_t t = 1; t <= cfg.t; ++t) f.push_back(fitness_profile(s + 1, t, cfg));
    for (std::size_t d = 1; d <= cfg.d; ++d) q.push_back(participation(s + 1, d, cfg));
  }
  return gt;
}

/// One realized trade: banks i < j, interval t and day k (0-based).
struct SyntheticTrade {
  std::size_t i, j, t, k;
};

/// Simulates the market, calling on_day(k, participants) once per day and
/// on_trade for each trade, in generation order.  Random draws: per day, one
/// participation draw per bank, then one draw per (interval, unordered
/// participant pair).
template <class OnTrade, class OnDay>
GroundTruth simulate_market(const SyntheticConfig& cfg, OnTrade&& on_trade, OnDay&& on_day) {
  GroundTruth gt = ground_truth(cfg);
  Rng rng(cfg.seed);
  std::vector<std::size_t> active;
  active.reserve(cfg.n);
  for (std::size_t k = 0; k < cfg.d; ++k) {
    active.clear();
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const auto g = static_cast<std::size_t>(gt.group[i]);
      if (rng.bernoulli(gt.participation[g][k])) active.push_back(i);
    }
    on_day(k, static_cast<const std::vector<std::size_t>&>(active));
    for (std::size_t t = 0; t < cfg.t; ++t)
      for (std::size_t p = 0; p < active.size(); ++p) {
        const std::size_t i = active[p];
        const double ai = gt.fitness[static_cast<std::size_t>(gt.group[i])][t];
        for (std::size_t q = p + 1; q < active.size(); ++q) {
          const std::size_t j = active[q];
          const double aj = gt.fitness[static_cast<std::size_t>(gt.group[j])][t];
          if (rng.bernoulli(ai * aj)) on_trade(SyntheticTrade{i, j, t, k});
        }
      }
  }
  return gt;
}

template <class OnTrade>
GroundTruth simulate_market(const SyntheticConfig& cfg, OnTrade&& on_trade) {
  return simulate_market(cfg, std::forward<OnTrade>(on_trade), [](std::size_t, const std::vector<std::size_t>&) {});
}

struct SyntheticMarket {
  DenseTensor3 tensor;  // trade counts
  GroundTruth truth;
};

inline SyntheticMarket generate(const SyntheticConfig& cfg) {
  cfg.validate();
  DenseTensor3 x({cfg.n, cfg.t, cfg.d});
  GroundTruth gt = simulate_market(cfg, [&](const SyntheticTrade& tr) {
    x(tr.i, tr.t, tr.k) += 1.0;
    x(tr.j, tr.t, tr.k) += 1.0;
  });
  return {std::move(x), std::move(gt)};
}

/// E[x_itk] = q_i(k) a_i(t) sum_{j != i} q_j(k) a_j(t).
inline double expected_count(const GroundTruth& gt, std::size_t i, std::size_t t, std::size_t k) {
  const auto gi = static_cast<std::size_t>(gt.group[i]);
  double s = 0.0;
  for (std::size_t j = 0; j < gt.group.size(); ++j) {
    if (j == i) continue;
    const auto gj = static_cast<std::size_t>(gt.group[j]);
    s += gt.participation[gj][k] * gt.fitness[gj][t];
  }
  return gt.participation[gi][k] * gt.fitness[gi][t] * s;
}

}  // namespace ntf

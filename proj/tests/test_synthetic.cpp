#include "ntf/ingest.hpp"
#include "ntf/synthetic.hpp"
#include "ntf/synthetic_ledger.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace ntf {
namespace {

TEST(FitnessProfile, MiddleGroupPeaksAtNoon) {
  const SyntheticConfig cfg;
  double best = -1.0;
  std::size_t argmax = 0;
  for (std::size_t t = 1; t <= cfg.t; ++t) {
    const double v = fitness_profile(2, t, cfg);
    if (v > best) {
      best = v;
      argmax = t;
    }
  }
  EXPECT_EQ(argmax, cfg.t / 2);
  EXPECT_DOUBLE_EQ(best, cfg.peak_fitness);
}

TEST(FitnessProfile, EarlyGroupDecreasesMonotonically) {
  const SyntheticConfig cfg;
  for (std::size_t t = 2; t <= cfg.t; ++t) EXPECT_LT(fitness_profile(1, t, cfg), fitness_profile(1, t - 1, cfg));
}

TEST(FitnessProfile, EarlyAndLateGroupsMirror) {
  // With mu1 = 0 and mu3 = T on the grid t = 1..T, f1(t) = f3(T - t).
  SyntheticConfig cfg;
  cfg.scale = FitnessScale::raw_pdf;
  for (std::size_t t = 1; t < cfg.t; ++t) {
    EXPECT_NEAR(fitness_profile(1, t, cfg), fitness_profile(3, cfg.t - t, cfg), 1e-12);
    EXPECT_NEAR(fitness_profile(1, t, cfg), normal_pdf(static_cast<double>(t), 0.0, cfg.sigma), 1e-15);
  }
  // Rescaled profiles keep the mirror up to each group's own peak factor.
  cfg.scale = FitnessScale::peak;
  const double ratio = fitness_profile(1, 1, cfg) / fitness_profile(3, cfg.t - 1, cfg);
  for (std::size_t t = 1; t < cfg.t; ++t)
    EXPECT_NEAR(fitness_profile(1, t, cfg) / fitness_profile(3, cfg.t - t, cfg), ratio, 1e-12);
}

TEST(FitnessProfile, AllValuesInUnitInterval) {
  for (auto scale : {FitnessScale::peak, FitnessScale::raw_pdf}) {
    SyntheticConfig cfg;
    cfg.scale = scale;
    for (int s = 1; s <= 3; ++s)
      for (std::size_t t = 1; t <= cfg.t; ++t) {
        const double v = fitness_profile(s, t, cfg);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
  }
}

TEST(Participation, Schedules) {
  const SyntheticConfig cfg;  // D = 1000
  for (std::size_t d : {1u, 250u, 1000u}) EXPECT_EQ(participation(1, d, cfg), 0.5);
  EXPECT_EQ(participation(2, 1, cfg), 0.0);
  EXPECT_DOUBLE_EQ(participation(2, 500, cfg), 1.0 - 2.0 / 1000.0);
  EXPECT_DOUBLE_EQ(participation(2, 501, cfg), (-2.0 / 1000.0) * (501.0 - 1000.0));
  EXPECT_EQ(participation(2, 1000, cfg), 0.0);
  EXPECT_DOUBLE_EQ(participation(3, 1000, cfg), 999.0 / 1000.0);
  EXPECT_EQ(participation(3, 1, cfg), 0.0);
  EXPECT_THROW(participation(1, 0, cfg), std::invalid_argument);
  EXPECT_THROW(participation(4, 1, cfg), std::invalid_argument);
}

TEST(Generate, NoParticipantsGiveZeroTensor) {
  // Group 2 and 3 schedules are 0 on day 1; with every bank in group 3 and D = 1
  // nobody participates.
  SyntheticConfig cfg = SyntheticConfig::with_dims(6, 4, 1, 3);
  cfg.group_sizes = {0, 0, 6};
  EXPECT_EQ(generate(cfg).tensor.sum(), 0.0);
}

TEST(Generate, CertainTradeBetweenOnePair) {
  // Two group-1 banks with fitness 1 everywhere: raw pdf with huge sigma is
  // flat, then rescaled to peak 1.
  SyntheticConfig cfg = SyntheticConfig::with_dims(2, 3, 1, 0);
  cfg.group_sizes = {2, 0, 0};
  cfg.sigma = 1e9;
  cfg.peak_fitness = 1.0;
  // Group 1 participates with probability 0.5; find a seed where both do.
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    cfg.seed = seed;
    const auto m = generate(cfg);
    if (m.tensor.sum() == 0.0) continue;
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_EQ(m.tensor(0, t, 0), 1.0);
      EXPECT_EQ(m.tensor(1, t, 0), 1.0);
    }
    return;
  }
  FAIL() << "no seed produced two participants";
}

TEST(Generate, DeterministicAndBounded) {
  SyntheticConfig cfg = SyntheticConfig::with_dims(30, 10, 40, 5);
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a.tensor, b.tensor);
  for (double v : a.tensor.values()) {
    EXPECT_EQ(v, std::floor(v));
    EXPECT_LE(v, static_cast<double>(cfg.n - 1));
  }
}

TEST(Generate, MonteCarloMeanMatchesAnalyticExpectation) {
  SyntheticConfig cfg = SyntheticConfig::with_dims(6, 4, 2, 0);
  const GroundTruth gt = ground_truth(cfg);
  const int reps = 10000;
  std::vector<double> sum(cfg.n * cfg.t * cfg.d, 0.0), sumsq(sum.size(), 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    cfg.seed = static_cast<std::uint64_t>(rep) + 1000;
    const auto m = generate(cfg);
    for (std::size_t p = 0; p < sum.size(); ++p) {
      sum[p] += m.tensor.values()[p];
      sumsq[p] += m.tensor.values()[p] * m.tensor.values()[p];
    }
  }
  const DenseTensor3 shape({cfg.n, cfg.t, cfg.d});
  for (std::size_t i = 0; i < cfg.n; ++i)
    for (std::size_t t = 0; t < cfg.t; ++t)
      for (std::size_t k = 0; k < cfg.d; ++k) {
        const std::size_t p = shape.offset(i, t, k);
        const double mean = sum[p] / reps;
        const double var = sumsq[p] / reps - mean * mean;
        const double se = std::sqrt(std::max(var, 0.0) / reps);
        const double expected = expected_count(gt, i, t, k);
        if (se == 0.0 && mean == 0.0) {
          // Never observed: the event must be rare enough for that to be plausible.
          EXPECT_LE(expected * reps, 10.0) << i << "," << t << "," << k;
        } else if (se == 0.0) {
          EXPECT_EQ(mean, expected);
        } else {
          EXPECT_LE(std::abs(mean - expected), 3.0 * se + 1e-12) << i << "," << t << "," << k;
        }
      }
}

TEST(Generate, ParticipationFrequencyTracksSchedule) {
  // Cumulative participation count per group against the cumulative
  // schedule: the largest gap over days stays inside a 4-sigma band of the
  // final count (Kolmogorov-Smirnov style).
  SyntheticConfig cfg;
  cfg.seed = 17;
  const GroundTruth gt = ground_truth(cfg);
  std::array<std::vector<double>, 3> daily;
  simulate_market(
      cfg, [](const SyntheticTrade&) {},
      [&](std::size_t, const std::vector<std::size_t>& active) {
        std::array<double, 3> count{};
        for (auto i : active) count[static_cast<std::size_t>(gt.group[i])] += 1.0;
        for (std::size_t s = 0; s < 3; ++s) daily[s].push_back(count[s]);
      });
  for (std::size_t s = 0; s < 3; ++s) {
    ASSERT_EQ(daily[s].size(), cfg.d);
    const double size = static_cast<double>(cfg.group_sizes[s]);
    double observed = 0.0, expected = 0.0, var = 0.0, max_gap = 0.0;
    for (std::size_t d = 0; d < cfg.d; ++d) {
      const double q = participation(static_cast<int>(s) + 1, d + 1, cfg);
      observed += daily[s][d];
      expected += size * q;
      var += size * q * (1.0 - q);
      max_gap = std::max(max_gap, std::abs(observed - expected));
    }
    EXPECT_LE(max_gap, 4.0 * std::sqrt(var) + 1.0) << "group " << s + 1;
  }
}

TEST(SyntheticLedger, IngestsBackToTheSameTensor) {
  SyntheticConfig cfg = SyntheticConfig::with_dims(12, 20, 30, 4);
  const auto market = generate(cfg);
  const auto ledger = synthetic_ledger(cfg);
  const auto built = build_tensor(ledger, 30);
  EXPECT_TRUE(built.out_of_window.empty());
  EXPECT_EQ(built.tensor.sum(), market.tensor.sum());
  // Rows/slabs present in the ledger map back onto the synthetic tensor.
  for (std::size_t i = 0; i < built.index.bank_ids.size(); ++i) {
    const std::size_t bank = std::stoul(built.index.bank_ids[i].substr(1));
    for (std::size_t k = 0; k < built.index.day_dates.size(); ++k) {
      const auto day = parse_date(built.index.day_dates[k]);
      const auto src = static_cast<std::size_t>((day - parse_date("2001-01-01")).count());
      for (std::size_t t = 0; t < cfg.t; ++t) EXPECT_EQ(built.tensor(i, t, k), market.tensor(bank, t, src));
    }
  }
}

TEST(SyntheticConfig, Validation) {
  SyntheticConfig cfg;
  cfg.group_sizes = {40, 40, 41};
  EXPECT_THROW(generate(cfg), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.sigma = 0.0;
  EXPECT_THROW(generate(cfg), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.d = 0;
  EXPECT_THROW(generate(cfg), std::invalid_argument);
}

}  // namespace
}  // namespace ntf

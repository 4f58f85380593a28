#pragma once

#include <cstdint>
#include <random>

namespace ntf {

/// Platform-stable uniform doubles: std::mt19937_64 output is fixed by the
/// standard, while the std:: distributions are not, so the mapping to [0, 1)
/// is done here from the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ntf

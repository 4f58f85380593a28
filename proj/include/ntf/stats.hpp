#pragma once

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>

namespace ntf {

struct MeanInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Sample mean with a two-sided Student-t interval.  With fewer than two
/// samples the interval collapses onto the mean.
inline MeanInterval mean_with_t_interval(std::span<const double> xs, double level = 0.95) {
  MeanInterval out;
  out.count = xs.size();
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  out.lo = out.hi = out.mean;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double v : xs) ss += (v - out.mean) * (v - out.mean);
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  const boost::math::students_t dist(n - 1.0);
  const double q = boost::math::quantile(dist, 0.5 + level / 2.0);
  out.lo = out.mean - q * se;
  out.hi = out.mean + q * se;
  return out;
}

/// Smallest k with P(K <= k) >= q for K ~ Binomial(n, p).
inline std::size_t binomial_quantile(std::size_t n, double p, double q) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_quantile: p must lie in [0, 1]");
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  for (std::size_t k = 0; k < n; ++k) {
    if (boost::math::cdf(dist, static_cast<double>(k)) >= q) return k;
  }
  return n;
}

}  // namespace ntf

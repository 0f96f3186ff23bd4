#pragma once

#include <cmath>
#include <cstdint>

namespace stats {

/// |count - n p| within k binomial standard deviations. A zero-variance cell
/// must match exactly.
inline bool within_sigma(std::uint64_t count, std::uint64_t n, double p, double k = 3.0) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return std::abs(static_cast<double>(count) - mean) <= k * sd + 1e-9;
}

}  // namespace stats

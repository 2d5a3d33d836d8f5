#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "taskfft/error.hpp"

namespace taskfft {

struct OrderStats {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Median, min and max. An even count takes the mean of the two central
/// values. Throws ConfigurationError on an empty sample.
[[nodiscard]] inline OrderStats order_statistics(std::span<const double> samples) {
  if (samples.empty()) throw ConfigurationError("order statistics of an empty sample");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  return OrderStats{median, v.front(), v.back()};
}

}  // namespace taskfft

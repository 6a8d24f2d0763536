#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "cbmbr/core_types.hpp"

namespace cbmbr {

class Stopwatch {
 public:
  using clock = std::chrono::steady_clock;

  Stopwatch() : start_(clock::now()) {}

  void reset() { start_ = clock::now(); }

  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start_).count();
  }

 private:
  clock::time_point start_;
};

/// Median of the samples; the mean of the two middle values for even counts.
inline std::int64_t median(std::vector<std::int64_t> samples) {
  if (samples.empty()) throw Error(Errc::EmptySet, "median of no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[mid];
  return samples[mid - 1] + (samples[mid] - samples[mid - 1]) / 2;
}

}  // namespace cbmbr

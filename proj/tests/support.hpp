// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "clearstream/audio.hpp"
#include "clearstream/rng.hpp"

namespace clearstream::testing {

inline std::vector<double> noise(std::size_t n, uint64_t seed, double amp = 0.5) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-amp, amp);
  return x;
}

inline WaveBuffer stereo_noise(std::size_t n, uint64_t seed, double amp = 0.5) {
  return WaveBuffer::stereo(noise(n, derive_seed(seed, "l"), amp),
                            noise(n, derive_seed(seed, "r"), amp));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace clearstream::testing

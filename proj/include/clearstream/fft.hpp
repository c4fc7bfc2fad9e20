// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace clearstream::fft {

// Thin wrappers over FFTW. Plans are created once per length and shared;
// execution is reentrant.

/// Forward real transform; out must hold n/2 + 1 bins for n = in.size().
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

/// Inverse of rfft including the 1/n scale; out.size() is the transform length.
void irfft(std::span<const std::complex<double>> in, std::span<double> out);

/// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// r[k] = sum_n a[n + k] * b[n] for k in [-max_lag, max_lag], returned with
/// index k + max_lag. Samples outside either input count as zero.
std::vector<double> cross_correlation(std::span<const double> a, std::span<const double> b,
                                      int max_lag);

/// Smallest 2^a 3^b 5^c 7^d >= n.
int good_size(int n);

}  // namespace clearstream::fft

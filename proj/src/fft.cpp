// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace clearstream::fft {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// Planner calls are not thread-safe in FFTW; execution on new arrays is.
const PlanPair& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* r = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(n, r, c, flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, c, r, flags);
  fftw_free(r);
  fftw_free(c);
  if (!p.forward || !p.inverse) throw std::runtime_error("fftw planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  const int n = static_cast<int>(in.size());
  if (n == 0 || out.size() != in.size() / 2 + 1)
    throw std::invalid_argument("rfft: bad sizes");
  const auto& p = plans_for(n);
  // r2c does not modify its input, the const_cast only satisfies the C API.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const std::complex<double>> in, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0 || in.size() != out.size() / 2 + 1)
    throw std::invalid_argument("irfft: bad sizes");
  const auto& p = plans_for(n);
  std::vector<std::complex<double>> scratch(in.begin(), in.end());  // c2r clobbers input
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / n;
  for (double& v : out) v *= scale;
}

int good_size(int n) {
  int best = 1;
  while (best < n) best *= 2;
  for (int a = 1; a < best; a *= 2)
    for (int b = a; b < best; b *= 3)
      for (int c = b; c < best; c *= 5)
        for (int d = c; d < best; d *= 7)
          if (d >= n) best = std::min(best, d);
  return best;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const int n = good_size(static_cast<int>(out_len));
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  rfft(pa, fa);
  rfft(pb, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  irfft(fa, pa);
  pa.resize(out_len);
  return pa;
}

std::vector<double> cross_correlation(std::span<const double> a, std::span<const double> b,
                                      int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  std::vector<double> r(2 * static_cast<std::size_t>(max_lag) + 1, 0.0);
  if (a.empty() || b.empty()) return r;
  // r[k] = sum_n a[n+k] b[n] is the convolution of a with reversed b,
  // evaluated at index k + (b.size() - 1).
  std::vector<double> rb(b.rbegin(), b.rend());
  auto full = convolve(a, rb);
  const long offset = static_cast<long>(b.size()) - 1;
  for (int k = -max_lag; k <= max_lag; ++k) {
    long idx = offset + k;
    if (idx >= 0 && idx < static_cast<long>(full.size())) r[k + max_lag] = full[idx];
  }
  return r;
}

}  // namespace clearstream::fft

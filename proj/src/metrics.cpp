// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clearstream/fft.hpp"

namespace clearstream::metrics {
namespace {

double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::vector<double> centered(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - m;
  return out;
}

double energy(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e;
}

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b)
    throw std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

// Estimate window starting at `from`, zero outside the signal.
std::vector<double> window(std::span<const double> x, long from, std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    const long j = from + static_cast<long>(i);
    if (j >= 0 && j < static_cast<long>(x.size())) out[i] = x[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  check_same_length(reference.size(), estimate.size());
  const auto r = centered(reference);
  const auto e = centered(estimate);
  const double rr = energy(r);
  if (!(rr > 1e-20)) throw std::invalid_argument("si_sdr: reference is silent");
  double er = 0;
  for (std::size_t i = 0; i < r.size(); ++i) er += e[i] * r[i];
  const double alpha = er / rr;
  double sig = 0, err = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double s = alpha * r[i];
    sig += s * s;
    err += (e[i] - s) * (e[i] - s);
  }
  if (sig == 0.0) return -kSiSdrCap;
  if (err <= sig * 1e-10) return kSiSdrCap;
  return std::min(kSiSdrCap, 10.0 * std::log10(sig / err));
}

SiSdrReport si_sdr_improvement(std::span<const double> reference,
                               std::span<const double> mixture_channel,
                               std::span<const double> estimate) {
  SiSdrReport r;
  r.input_si_sdr = si_sdr(reference, mixture_channel);
  r.output_si_sdr = si_sdr(reference, estimate);
  r.improvement = r.output_si_sdr - r.input_si_sdr;
  return r;
}

int best_lag(std::span<const double> reference, std::span<const double> estimate,
             std::size_t start, std::size_t len, int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("max_lag must be non-negative");
  if (start + len > reference.size()) throw std::invalid_argument("chunk exceeds reference");
  const auto seg = window(estimate, static_cast<long>(start) - max_lag, len + 2 * static_cast<std::size_t>(max_lag));
  const auto r = fft::cross_correlation(seg, reference.subspan(start, len), 2 * max_lag);
  // Entry index j holds shift k = j - 2*max_lag into seg, i.e. lag k - max_lag.
  int best = 0;
  double best_v = -INFINITY;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = r[static_cast<std::size_t>(lag + 3 * max_lag)];
    if (v > best_v || (v == best_v && std::abs(lag) < std::abs(best))) {
      best_v = v;
      best = lag;
    }
  }
  return best;
}

ChunkedSdr chunked_output_sdr(std::span<const double> reference, std::span<const double> estimate,
                              std::size_t chunk_samples, int max_lag) {
  if (chunk_samples == 0) throw std::invalid_argument("chunk length must be positive");
  if (reference.size() < chunk_samples)
    throw std::invalid_argument("signal shorter than one chunk");
  ChunkedSdr out;
  double sum = 0;
  for (std::size_t start = 0; start + chunk_samples <= reference.size(); start += chunk_samples) {
    ChunkScore c;
    c.start = start;
    const auto ref = reference.subspan(start, chunk_samples);
    if (energy(centered(ref)) <= 1e-20) {
      c.silent = true;
      out.chunks.push_back(c);
      continue;
    }
    c.lag = best_lag(reference, estimate, start, chunk_samples, max_lag);
    const auto est = window(estimate, static_cast<long>(start) + c.lag, chunk_samples);
    c.si_sdr = energy(centered(est)) > 0 ? si_sdr(ref, est) : -kSiSdrCap;
    sum += c.si_sdr;
    ++out.scored;
    out.chunks.push_back(c);
  }
  if (out.scored > 0) out.aggregate = sum / static_cast<double>(out.scored);
  return out;
}

LossBreakdown loss_total(std::span<const double> target, std::span<const double> output,
                         const dsp::StftConfig& cfg) {
  check_same_length(target.size(), output.size());
  if (target.empty()) throw std::invalid_argument("loss of empty signals");
  LossBreakdown b;
  for (std::size_t i = 0; i < target.size(); ++i) b.l1 += std::abs(target[i] - output[i]);
  b.l1 /= static_cast<double>(target.size());

  const auto st = dsp::stft(target, cfg);
  const auto so = dsp::stft(output, cfg);
  double diff2 = 0, ref2 = 0, logsum = 0;
  for (std::size_t i = 0; i < st.values.size(); ++i) {
    const double a = std::abs(st.values[i]), o = std::abs(so.values[i]);
    diff2 += (a - o) * (a - o);
    ref2 += a * a;
    logsum += std::abs(std::log(a + kLogMagEps) - std::log(o + kLogMagEps));
  }
  b.l_sc = ref2 > 0 ? std::sqrt(diff2) / std::sqrt(ref2) : (diff2 > 0 ? INFINITY : 0.0);
  b.l_mag = logsum / static_cast<double>(st.values.size());
  return b;
}

OracleMaskResult oracle_mask(OracleMaskKind kind, const dsp::ComplexSpectrogram& target,
                             std::span<const dsp::ComplexSpectrogram> interferers,
                             const dsp::StftConfig& cfg, std::size_t out_len) {
  for (const auto& s : interferers)
    if (s.freq_bins != target.freq_bins || s.time_bins != target.time_bins)
      throw std::invalid_argument("oracle_mask: spectrogram shape mismatch");
  OracleMaskResult r;
  r.mask.resize(target.values.size());
  dsp::ComplexSpectrogram mix = target;
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    const double t = std::abs(target.values[i]);
    double power = t * t;
    bool dominant = true;
    for (const auto& s : interferers) {
      const double m = std::abs(s.values[i]);
      power += m * m;
      dominant = dominant && t >= m;
      mix.values[i] += s.values[i];
    }
    if (kind == OracleMaskKind::kIbm)
      r.mask[i] = dominant ? 1.0 : 0.0;
    else
      r.mask[i] = power > 0 ? std::sqrt(t * t / power) : 1.0;
    mix.values[i] *= r.mask[i];
  }
  r.estimate = dsp::istft(mix, cfg, out_len);
  return r;
}

std::string to_string(OracleMaskKind kind) { return kind == OracleMaskKind::kIbm ? "IBM" : "IRM"; }

}  // namespace clearstream::metrics

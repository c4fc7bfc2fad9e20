// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "clearstream/fft.hpp"

namespace clearstream::dsp {

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

namespace {

void check_config(const StftConfig& cfg) {
  if (cfg.win_len <= 0 || cfg.hop <= 0) throw std::invalid_argument("stft: bad config");
  if (cfg.hop > cfg.win_len) throw std::invalid_argument("stft: hop exceeds window");
}

}  // namespace

ComplexSpectrogram stft(std::span<const double> x, const StftConfig& cfg) {
  check_config(cfg);
  if (x.empty()) throw std::invalid_argument("stft: empty input");
  const int n_frames = static_cast<int>((x.size() + cfg.hop - 1) / cfg.hop);
  const auto window = hann_window(cfg.win_len);
  ComplexSpectrogram spec(cfg.freq_bins(), n_frames);
  const long len = static_cast<long>(x.size());

#pragma omp parallel
  {
    std::vector<double> frame(cfg.win_len);
#pragma omp for schedule(static)
    for (int t = 0; t < n_frames; ++t) {
      const long start = static_cast<long>(t) * cfg.hop;
      for (int i = 0; i < cfg.win_len; ++i) {
        long n = start + i;
        frame[i] = n < len ? x[n] * window[i] : 0.0;
      }
      fft::rfft(frame, spec.frame(t));
    }
  }
  return spec;
}

ComplexSpectrogram stft(const WaveBuffer& wave, const StftConfig& cfg) {
  if (wave.num_channels() != 1) throw std::invalid_argument("stft: expected mono input");
  return stft(wave.channels[0], cfg);
}

std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                          std::size_t out_len) {
  check_config(cfg);
  if (spec.freq_bins != cfg.freq_bins() ||
      spec.values.size() != static_cast<std::size_t>(spec.freq_bins) * spec.time_bins)
    throw std::invalid_argument("istft: spectrogram shape does not match config");

  const auto window = hann_window(cfg.win_len);
  const std::size_t span_len =
      static_cast<std::size_t>(spec.time_bins) * cfg.hop + cfg.win_len;
  std::vector<double> acc(span_len, 0.0), env(span_len, 0.0);
  std::vector<double> frames(static_cast<std::size_t>(spec.time_bins) * cfg.win_len);

#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.time_bins; ++t) {
    std::span<double> out(frames.data() + static_cast<std::size_t>(t) * cfg.win_len,
                          static_cast<std::size_t>(cfg.win_len));
    fft::irfft(spec.frame(t), out);
  }
  // Overlap-add stays serial so the summation order is fixed.
  for (int t = 0; t < spec.time_bins; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    const double* f = frames.data() + static_cast<std::size_t>(t) * cfg.win_len;
    for (int i = 0; i < cfg.win_len; ++i) {
      acc[start + i] += f[i] * window[i];
      env[start + i] += window[i] * window[i];
    }
  }

  std::vector<double> y(out_len, 0.0);
  const std::size_t n = std::min(out_len, span_len);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = env[i] > kEnvelopeFloor ? acc[i] / env[i] : 0.0;
  return y;
}

// ---- mel --------------------------------------------------------------------

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double MelFilterbank::center_hz(int m, double fs) const {
  const double n_fft = 2.0 * (n_fft_bins - 1);
  return center_bins[m + 1] * fs / n_fft;
}

MelFilterbank mel_filterbank(int n_mel, int n_fft, double fs) {
  if (n_mel <= 0 || n_fft <= 0 || fs <= 0) throw std::invalid_argument("mel: bad arguments");
  if (n_mel >= n_fft / 2) throw std::invalid_argument("mel: n_mel must be < n_fft / 2");

  MelFilterbank fb;
  fb.n_mel = n_mel;
  fb.n_fft_bins = n_fft / 2 + 1;
  const int top = fb.n_fft_bins - 1;
  const double mel_max = hz_to_mel(fs / 2.0);

  // Edges equally spaced in mel, snapped to bins and kept strictly increasing
  // so every triangle has a peak sample of exactly 1.
  fb.center_bins.resize(n_mel + 2);
  for (int i = 0; i < n_mel + 2; ++i) {
    double hz = mel_to_hz(mel_max * i / (n_mel + 1));
    int bin = static_cast<int>(std::lround(hz * n_fft / fs));
    bin = std::clamp(bin, 0, top);
    if (i > 0) bin = std::max(bin, fb.center_bins[i - 1] + 1);
    fb.center_bins[i] = bin;
  }
  if (fb.center_bins.back() > top)
    throw std::invalid_argument("mel: too many filters for this transform");

  fb.weights.assign(static_cast<std::size_t>(n_mel) * fb.n_fft_bins, 0.0);
  for (int m = 0; m < n_mel; ++m) {
    const int lo = fb.center_bins[m], mid = fb.center_bins[m + 1], hi = fb.center_bins[m + 2];
    for (int b = lo + 1; b <= mid; ++b)
      fb.weights[static_cast<std::size_t>(m) * fb.n_fft_bins + b] =
          static_cast<double>(b - lo) / (mid - lo);
    for (int b = mid + 1; b < hi; ++b)
      fb.weights[static_cast<std::size_t>(m) * fb.n_fft_bins + b] =
          static_cast<double>(hi - b) / (hi - mid);
  }
  return fb;
}

MelSpectrogram mel_project(const ComplexSpectrogram& spec, const MelFilterbank& fb) {
  if (spec.freq_bins != fb.n_fft_bins)
    throw std::invalid_argument("mel_project: filterbank does not match spectrogram");
  MelSpectrogram mel;
  mel.mel_bins = fb.n_mel;
  mel.time_bins = spec.time_bins;
  mel.values.assign(static_cast<std::size_t>(fb.n_mel) * spec.time_bins, 0.0);

  std::vector<double> mag(spec.values.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(spec.values[i]);

#pragma omp parallel for schedule(static)
  for (int m = 0; m < fb.n_mel; ++m) {
    const int lo = fb.center_bins[m], hi = fb.center_bins[m + 2];
    for (int t = 0; t < spec.time_bins; ++t) {
      const double* frame = mag.data() + static_cast<std::size_t>(t) * spec.freq_bins;
      double acc = 0.0;
      for (int b = lo; b <= hi && b < fb.n_fft_bins; ++b) acc += fb.weight(m, b) * frame[b];
      mel.at(m, t) = acc;
    }
  }
  return mel;
}

std::vector<int> linear_bin_owner(const MelFilterbank& fb) {
  std::vector<int> owner(fb.n_fft_bins, 0);
  for (int b = 0; b < fb.n_fft_bins; ++b) {
    int best = -1;
    double best_w = 0.0;
    for (int m = 0; m < fb.n_mel; ++m) {
      double w = fb.weight(m, b);
      if (w > best_w) {
        best_w = w;
        best = m;
      }
    }
    if (best < 0) {
      int best_dist = 1 << 30;
      for (int m = 0; m < fb.n_mel; ++m) {
        int d = std::abs(fb.center_bins[m + 1] - b);
        if (d < best_dist) {
          best_dist = d;
          best = m;
        }
      }
    }
    owner[b] = best;
  }
  return owner;
}

BinaryMask mel_mask_expand(const BinaryMask& mel_mask, const MelFilterbank& fb) {
  if (mel_mask.rows != fb.n_mel)
    throw std::invalid_argument("mel_mask_expand: mask rows do not match filterbank");
  const auto owner = linear_bin_owner(fb);
  BinaryMask lin(fb.n_fft_bins, mel_mask.cols);
  for (int b = 0; b < fb.n_fft_bins; ++b)
    for (int t = 0; t < mel_mask.cols; ++t) lin.at(b, t) = mel_mask.at(owner[b], t) ? 1 : 0;
  return lin;
}

void apply_mask(ComplexSpectrogram& spec, const BinaryMask& mask) {
  if (mask.rows != spec.freq_bins || mask.cols != spec.time_bins)
    throw std::invalid_argument("apply_mask: shape mismatch");
  for (int t = 0; t < spec.time_bins; ++t)
    for (int f = 0; f < spec.freq_bins; ++f)
      if (!mask.at(f, t)) spec.at(f, t) = 0.0;
}

// ---- decimation -------------------------------------------------------------

namespace {

// 31-tap equiripple low-pass for 31250 Hz input: passband 0-5 kHz, stopband
// from 7812.5 Hz (the decimated Nyquist) at -46 dB. Normalized to unity DC gain.
constexpr double kDecimatorTaps[31] = {
    0.0033329789449898319,  -0.0015167556513199765, -0.0058851266432748293,
    -0.0011108324921686816, 0.010215095906989005,   0.0083686732745119497,
    -0.012349345761708935,  -0.021875286101346047,  0.0066339916546796166,
    0.040532379582627509,   0.015257974134282331,   -0.060410047277184048,
    -0.071396712969597736,  0.075759627282241948,   0.30542852840826645,
    0.4180297154160233,     0.30542852840826645,    0.075759627282241948,
    -0.071396712969597736,  -0.060410047277184048,  0.015257974134282331,
    0.040532379582627509,   0.0066339916546796166,  -0.021875286101346047,
    -0.012349345761708935,  0.0083686732745119497,  0.010215095906989005,
    -0.0011108324921686816, -0.0058851266432748293, -0.0015167556513199765,
    0.0033329789449898319,
};
constexpr int kDecimatorDelay = 15;

}  // namespace

std::span<const double> decimator_taps() { return kDecimatorTaps; }

std::vector<double> decimate_by_2(std::span<const double> x) {
  if (x.size() % 2 != 0) throw std::invalid_argument("decimate_by_2: odd input length");
  const long len = static_cast<long>(x.size());
  std::vector<double> y(x.size() / 2);
  for (long i = 0; i < static_cast<long>(y.size()); ++i) {
    const long n = 2 * i + kDecimatorDelay;
    double acc = 0.0;
    for (int k = 0; k < 31; ++k) {
      long src = n - k;
      if (src >= 0 && src < len) acc += kDecimatorTaps[k] * x[src];
    }
    y[i] = acc;
  }
  return y;
}

WaveBuffer decimate_by_2(const WaveBuffer& wave) {
  WaveBuffer out;
  out.sample_rate = wave.sample_rate / 2;
  for (const auto& ch : wave.channels) out.channels.push_back(decimate_by_2(ch));
  return out;
}

}  // namespace clearstream::dsp

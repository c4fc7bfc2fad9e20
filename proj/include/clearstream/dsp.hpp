// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "clearstream/audio.hpp"

namespace clearstream::dsp {

using Complex = std::complex<double>;

struct StftConfig {
  int hop = 350;
  int win_len = 1024;  // also the transform length
  int freq_bins() const { return win_len / 2 + 1; }
};

/// STFT values stored frame-major: values[t * freq_bins + f].
struct ComplexSpectrogram {
  int freq_bins = 0;
  int time_bins = 0;
  std::vector<Complex> values;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int freq, int time)
      : freq_bins(freq), time_bins(time), values(static_cast<std::size_t>(freq) * time) {}

  Complex& at(int f, int t) { return values[static_cast<std::size_t>(t) * freq_bins + f]; }
  const Complex& at(int f, int t) const {
    return values[static_cast<std::size_t>(t) * freq_bins + f];
  }
  std::span<Complex> frame(int t) {
    return {values.data() + static_cast<std::size_t>(t) * freq_bins,
            static_cast<std::size_t>(freq_bins)};
  }
  std::span<const Complex> frame(int t) const {
    return {values.data() + static_cast<std::size_t>(t) * freq_bins,
            static_cast<std::size_t>(freq_bins)};
  }
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Frame t covers samples [t*hop, t*hop + win_len) of the input, zero-padded
/// past the end; there are ceil(len / hop) frames.
ComplexSpectrogram stft(std::span<const double> x, const StftConfig& cfg = {});
ComplexSpectrogram stft(const WaveBuffer& wave, const StftConfig& cfg = {});

/// Weighted overlap-add with the Hann synthesis window, normalized per sample
/// by the summed squared window. Samples whose envelope falls below
/// kEnvelopeFloor (only the window edges at the signal boundary) come out 0.
std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                          std::size_t out_len);

inline constexpr double kEnvelopeFloor = 1e-8;

// ---- mel ------------------------------------------------------------------

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters, one row per mel band. weights[m * n_fft_bins + b].
struct MelFilterbank {
  int n_mel = 0;
  int n_fft_bins = 0;
  std::vector<int> center_bins;  // n_mel + 2 edges; row m peaks at center_bins[m + 1]
  std::vector<double> weights;

  double weight(int m, int b) const {
    return weights[static_cast<std::size_t>(m) * n_fft_bins + b];
  }
  double center_hz(int m, double fs) const;
};

MelFilterbank mel_filterbank(int n_mel = 128, int n_fft = 1024, double fs = kSampleRate);

/// Row-major mel x time magnitudes: values[m * time_bins + t].
struct MelSpectrogram {
  int mel_bins = 0;
  int time_bins = 0;
  std::vector<double> values;

  double& at(int m, int t) { return values[static_cast<std::size_t>(m) * time_bins + t]; }
  double at(int m, int t) const {
    return values[static_cast<std::size_t>(m) * time_bins + t];
  }
};

MelSpectrogram mel_project(const ComplexSpectrogram& spec, const MelFilterbank& fb);

/// Row-major rows x cols mask with values in {0, 1}.
struct BinaryMask {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int r, int c, uint8_t fill = 0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

  uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// For each linear bin, the mel band that owns it: largest filter weight,
/// nearest center when every weight is zero, lower index on ties.
std::vector<int> linear_bin_owner(const MelFilterbank& fb);

/// Expands a mel-domain mask (n_mel x T) to linear bins (n_fft_bins x T).
BinaryMask mel_mask_expand(const BinaryMask& mel_mask, const MelFilterbank& fb);

/// Multiplies each linear bin of spec by mask (n_fft_bins x T).
void apply_mask(ComplexSpectrogram& spec, const BinaryMask& mask);

// ---- decimation -----------------------------------------------------------

/// Anti-alias low-pass taps used by decimate_by_2 (31 taps, linear phase).
std::span<const double> decimator_taps();

/// Low-pass then keep every second sample. Group delay is removed, so output
/// sample i lines up with input sample 2i. Throws on odd lengths.
std::vector<double> decimate_by_2(std::span<const double> x);
WaveBuffer decimate_by_2(const WaveBuffer& wave);

}  // namespace clearstream::dsp

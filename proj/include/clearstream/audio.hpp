// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clearstream {

/// Canonical processing rate of the enhancement engine.
inline constexpr int kSampleRate = 15625;
/// Rate at which the earbuds capture PCM before firmware decimation.
inline constexpr int kCaptureRate = 31250;

/// Multichannel sampled audio. Amplitudes are nominally in [-1, 1].
struct WaveBuffer {
  int sample_rate = kSampleRate;
  std::vector<std::vector<double>> channels;

  static WaveBuffer mono(std::vector<double> samples, int rate = kSampleRate);
  static WaveBuffer stereo(std::vector<double> left, std::vector<double> right,
                           int rate = kSampleRate);

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }

  // Throws std::invalid_argument when channels disagree in length, the rate
  // is not positive or a sample is not finite.
  void validate() const;
};

/// Saturating float -> 16-bit conversion, scale 32768.
int16_t to_pcm16(double x);
double from_pcm16(int16_t s);

enum class WavSampleFormat { kPcm16, kFloat32 };

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

WaveBuffer read_wav(const std::filesystem::path& path);
WaveBuffer parse_wav(std::span<const uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const WaveBuffer& wave,
               WavSampleFormat format = WavSampleFormat::kPcm16);
std::vector<uint8_t> encode_wav(const WaveBuffer& wave, WavSampleFormat format);

}  // namespace clearstream

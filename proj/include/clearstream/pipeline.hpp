// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "clearstream/audio.hpp"
#include "clearstream/dsp.hpp"
#include "clearstream/tcn.hpp"
#include "clearstream/unet.hpp"
#include "clearstream/weights.hpp"

namespace clearstream::pipeline {

struct PipelineConfig {
  tcn::TcnConfig tcn;
  unet::UNetConfig unet;
  int sample_rate = kSampleRate;

  void validate() const;  // throws std::invalid_argument

  int window() const { return tcn.window; }
  int lookahead() const { return tcn.lookahead; }
  int unet_window_samples() const { return unet.time_bins * tcn.window; }
  dsp::StftConfig stft() const { return {tcn.window, 1024}; }
  /// Window column whose start is the first emitted sample.
  int target_column() const { return unet.time_bins - 1 - lookahead() / window(); }
};

/// TCN and UNet tensors of one bundle.
std::vector<TensorSpec> tensor_specs(const PipelineConfig& cfg);

enum class MaskOverride { kNone, kAllOnes, kAllZeros };

class Engines {
 public:
  Engines(const WeightBundle& weights, PipelineConfig cfg);

  const PipelineConfig& config() const { return cfg_; }
  std::shared_ptr<const tcn::Model> tcn() const { return tcn_; }
  std::shared_ptr<const unet::Model> unet() const { return unet_; }
  const dsp::MelFilterbank& filterbank() const { return fb_; }
  const std::vector<int>& bin_owner() const { return owner_; }

  /// Mel mask for one mixture window, honoring the override.
  dsp::BinaryMask mel_mask(std::span<const double> mono_window, MaskOverride mode,
                           kernels::OpCounter* ops = nullptr) const;

  /// Masks the STFT of a TCN-output window and returns the W samples that
  /// start at the target column.
  std::vector<double> masked_packet(std::span<const double> tcn_window,
                                    const dsp::BinaryMask& mel_mask) const;

 private:
  PipelineConfig cfg_;
  std::shared_ptr<const tcn::Model> tcn_;
  std::shared_ptr<const unet::Model> unet_;
  dsp::MelFilterbank fb_;
  std::vector<int> owner_;
};

/// One stream of CB-Net processing. push() takes W new stereo samples and
/// returns W enhanced samples delayed by the lookahead; the first two
/// packets come out silent.
class Pipeline {
 public:
  explicit Pipeline(std::shared_ptr<const Engines> engines,
                    tcn::Mode tcn_mode = tcn::Mode::kCached);

  std::vector<double> push(std::span<const double> left, std::span<const double> right);

  void set_mask_override(MaskOverride m) { override_ = m; }
  uint64_t packets_pushed() const { return packets_; }
  const dsp::BinaryMask& last_mel_mask() const { return last_mask_; }

 private:
  std::shared_ptr<const Engines> engines_;
  tcn::Mode mode_;
  std::unique_ptr<tcn::StreamState> stream_;
  std::vector<double> raw_l_, raw_r_;  // uncached mode: trailing input context
  std::vector<double> mix_;            // trailing mono window
  std::vector<double> tcn_hist_;       // TCN output preceding the unknown tail
  MaskOverride override_ = MaskOverride::kNone;
  uint64_t packets_ = 0;
  dsp::BinaryMask last_mask_;
};

/// Output of packets_for(n) pushes over a zero-padded input, as the stream
/// would emit it: sample s of the result is enhanced input sample s - lookahead.
std::size_t packets_for(const PipelineConfig& cfg, std::size_t samples);

/// Batch oracle: TCN over the whole padded signal in one pass, then one
/// UNet forward and one masked iSTFT per window, with no state carried
/// between packets.
std::vector<double> offline_stream(const Engines& engines, const WaveBuffer& stereo,
                                   std::size_t packets, MaskOverride mode = MaskOverride::kNone);

/// Stereo WAV content in (15625 Hz, or 31250 Hz which is decimated first),
/// delay-compensated mono out with the same length as the input.
WaveBuffer process_file(const WaveBuffer& input, const Engines& engines,
                        MaskOverride mode = MaskOverride::kNone);
WaveBuffer process_file_offline(const WaveBuffer& input, const Engines& engines,
                                MaskOverride mode = MaskOverride::kNone);

struct LatencyBudget {
  double pcm_buffer_ms = 5.76;
  double ble_interval_ms = 15.0;
  double buffering_ms = 67.2;
  double inference_ms = 21.4;
  double bound_ms = 200.0;
};

struct LatencyReport {
  double total_ms = 0;
  double allowance_ms = 0;
  long total_rounded = 0;
  long allowance_rounded = 0;
  bool over_budget = false;
};

/// Throws std::invalid_argument on negative components.
LatencyReport latency_total(const LatencyBudget& b);

struct BenchStats {
  int packets = 0;
  double mean_ms = 0, median_ms = 0, p95_ms = 0, max_ms = 0;
  uint64_t tcn_flops = 0, unet_flops = 0, total_flops = 0;
  bool realtime = false;  // p95 < packet duration
};

/// Times push() on random input after a short warm-up.
BenchStats bench_packet(std::shared_ptr<const Engines> engines, int n_packets, tcn::Mode mode,
                        uint64_t seed = 1);

}  // namespace clearstream::pipeline

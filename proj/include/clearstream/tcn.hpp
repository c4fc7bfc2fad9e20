// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "clearstream/audio.hpp"
#include "clearstream/kernels.hpp"
#include "clearstream/weights.hpp"

// Time-domain separation network: strided encoder, stack of dilated
// depthwise-separable convolutions with residual connections, sigmoid latent
// mask and a linear decoder. Convolutions are unpadded, so a full-context pass
// over input_samples() samples yields exactly one packet of output; the
// streaming state caches every layer's recent frames and computes only the
// frames_per_packet() newest ones per packet.
//
// Tensor names: enc.w [N,2,L]  enc.b [N]
//               tcn.{i}.dw.w [N,K]  tcn.{i}.pw.w [N,N]  tcn.{i}.pw.b [N]
//               dec.w [L,N]  dec.b [L]
namespace clearstream::tcn {

struct TcnConfig {
  int enc_kernel = 50;         // L, also the encoder stride
  int window = 350;            // W, samples per packet
  int latent_channels = 512;   // N
  int conv_kernel = 3;         // K, depthwise taps
  int lookahead = 700;         // samples of future context
  int in_channels = 2;
  std::vector<int> dilations = {1, 2, 4, 8, 16, 32, 64, 1, 2, 4, 8, 16, 32, 64};

  void validate() const;  // throws std::invalid_argument

  int layers() const { return static_cast<int>(dilations.size()); }
  int frames_per_packet() const { return window / enc_kernel; }
  int lookahead_frames() const { return lookahead / enc_kernel; }

  /// Future frames each layer looks at. Layers are centered (lookahead
  /// (K-1)/2 * d) first-fit in order until the budget is used, the rest are
  /// causal.
  std::vector<int> layer_lookahead() const;

  /// Input frames one output frame depends on: 1 + (K-1) * sum(d).
  int receptive_frames() const;
  int past_frames() const { return receptive_frames() - 1 - lookahead_frames(); }
  /// Frames a full-context pass needs for one packet of output.
  int input_frames() const { return receptive_frames() + frames_per_packet() - 1; }
  int past_context() const { return past_frames() * enc_kernel; }
  int input_samples() const { return input_frames() * enc_kernel; }
};

std::vector<TensorSpec> tensor_specs(const TcnConfig& cfg);

enum class Mode { kCached, kUncached };

/// Exact 2 x MAC count for one steady-state packet. Cached computes only the
/// newest frames of every layer; uncached recomputes the whole context.
uint64_t flop_count(const TcnConfig& cfg, Mode mode);

/// Latent frames held by a streaming state.
std::size_t state_buffer_frames(const TcnConfig& cfg);

/// Frames of one layer; frame i sits at time first_time + i, where time is
/// the encoder frame index the frame is aligned with.
struct LayerFrames {
  long first_time = 0;
  int frames = 0;
  int channels = 0;
  std::vector<float> data;  // frame-major

  std::span<const float> frame(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }
};

/// Output of a full-context pass. layers[0] is the encoder output,
/// layers[i] the output of TCN layer i.
struct Activations {
  std::vector<LayerFrames> layers;
  std::vector<double> output;  // decoder samples
  long first_output_time = 0;  // time of the first decoded frame
};

class Model {
 public:
  Model(const WeightBundle& weights, TcnConfig cfg);

  const TcnConfig& config() const { return cfg_; }

  /// Full-context pass over the trailing input_samples() of a stereo buffer;
  /// returns the W samples of the last packet before the lookahead region.
  std::vector<double> full_forward(const WaveBuffer& stereo,
                                   kernels::OpCounter* ops = nullptr) const;

  /// Batch pass over the whole buffer with every intermediate kept. The
  /// buffer length must be a multiple of L and at least receptive_frames()
  /// frames.
  Activations forward_all(const WaveBuffer& stereo, kernels::OpCounter* ops = nullptr) const;

  // Building blocks shared by the batch and streaming paths.
  void encode(const float* left, const float* right, int frames, float* out,
              kernels::OpCounter* ops) const;
  /// in holds out_frames + (K-1)*d frames; out frame f is aligned with input
  /// frame f + (K-1)*d - lookahead of that layer.
  void layer(int index, const float* in, int out_frames, float* out,
             kernels::OpCounter* ops) const;
  /// mask and enc are frame-major; mask is overwritten with sigmoid(mask) * enc.
  void apply_latent_mask(float* mask, const float* enc, int frames) const;
  void decode(const float* latent, int frames, float* out, kernels::OpCounter* ops) const;

  int layer_shrink(int index) const { return (cfg_.conv_kernel - 1) * cfg_.dilations[index]; }
  int layer_lookahead(int index) const { return lookahead_[index]; }
  int total_lookahead_frames() const { return cfg_.lookahead_frames(); }

 private:
  TcnConfig cfg_;
  std::vector<int> lookahead_;
  std::vector<float> enc_w_, enc_b_, dec_w_, dec_b_;
  struct Layer {
    std::vector<float> dw, pw, pw_b;
  };
  std::vector<Layer> layers_;
};

/// Sliding activation cache of one stream. Starts as if preceded by silence.
/// Single owner; the model may be shared.
class StreamState {
 public:
  explicit StreamState(std::shared_ptr<const Model> model);

  /// Takes W new samples per channel and returns the W output samples of the
  /// packet that ended lookahead samples ago.
  std::vector<double> push(std::span<const double> left, std::span<const double> right);

  uint64_t frames_seen() const { return frames_seen_; }
  uint64_t packets_seen() const { return frames_seen_ / model_->config().frames_per_packet(); }
  const Model& model() const { return *model_; }

  /// Cached frames of layer l (0 = encoder); only layers 0..layers()-1 are
  /// cached, the last layer's output is consumed immediately.
  const std::vector<float>& window(int l) const { return windows_[l]; }
  int window_frames(int l) const { return window_frames_[l]; }
  /// Time of the newest frame in window l.
  long newest_time(int l) const;
  std::size_t buffer_frames() const;

  kernels::OpCounter& ops() { return ops_; }

 private:
  void slide_in(int l, const float* frames);

  std::shared_ptr<const Model> model_;
  std::vector<std::vector<float>> windows_;
  std::vector<int> window_frames_;
  std::vector<int> cum_lookahead_;
  uint64_t frames_seen_ = 0;
  kernels::OpCounter ops_;
  std::vector<float> scratch_in_, scratch_out_, scratch_l_, scratch_r_;
};

// Convenience wrappers with the module's operation names.
std::vector<double> tcn_full_forward(const WaveBuffer& stereo, const WeightBundle& weights,
                                     const TcnConfig& cfg);
StreamState tcn_stream_init(const WeightBundle& weights, const TcnConfig& cfg);

}  // namespace clearstream::tcn

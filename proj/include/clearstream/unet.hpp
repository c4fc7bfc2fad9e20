// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clearstream/dsp.hpp"
#include "clearstream/kernels.hpp"
#include "clearstream/weights.hpp"

// Mel-mask UNet. Input is log1p of a mel magnitude window (mel bins as rows,
// frames as columns). Every down level is a depthwise-separable 3x3 conv with
// ReLU followed by 2x2 max pooling; the pre-pool output is kept as the skip.
// Every up level is a depthwise-separable conv halving the channel count, a
// 2x2 stride-2 transposed conv, then concatenation [upsampled, skip]. A 1x1
// conv and a sigmoid give the probability map.
//
// With base b and depth D, level i (1-based) uses
//   down{i}: cin = (i == 1 ? 1 : b * 2^(i-2)), cout = b * 2^(i-1)
//   up{i}:   cin = (i == D ? b * 2^(D-1) : 3 * b * 2^(i-1)), cout = b * 2^(i-2)
//   out:     3 * b / 2 -> 1
//
// Tensor names: unet.down{i}.dw.w [cin,3,3]  .pw.w [cout,cin]  .pw.b [cout]
//               unet.up{i}.dw.w  .pw.w  .pw.b  .tconv.w [cout,cout,2,2]  .tconv.b
//               unet.out.w [1,C]  unet.out.b [1]
namespace clearstream::unet {

struct UNetConfig {
  int mel_bins = 128;
  int time_bins = 64;
  int depth = 4;
  int base_channels = 64;
  double threshold = 0.5;

  void validate() const;  // throws std::invalid_argument

  int down_in(int level) const;
  int down_out(int level) const;
  int up_in(int level) const;
  int up_out(int level) const;
  int head_channels() const { return 3 * base_channels / 2; }
};

std::vector<TensorSpec> tensor_specs(const UNetConfig& cfg);

/// Exact 2 x MAC count of one forward pass.
uint64_t flop_count(const UNetConfig& cfg);

/// Row-major rows x cols probabilities.
struct ProbabilityMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

class Model {
 public:
  Model(const WeightBundle& weights, UNetConfig cfg);

  const UNetConfig& config() const { return cfg_; }

  ProbabilityMap forward(const dsp::MelSpectrogram& mel, kernels::OpCounter* ops = nullptr) const;

 private:
  struct DsConv {
    int cin = 0, cout = 0;
    std::vector<float> dw, pw, pw_b;
  };
  struct Up {
    DsConv conv;
    std::vector<float> tconv_packed, tconv_b;
  };

  void ds_conv(const DsConv& c, const float* in, int h, int w, float* out,
               kernels::OpCounter* ops) const;

  UNetConfig cfg_;
  std::vector<DsConv> down_;
  std::vector<Up> up_;  // up_[i] is level i + 1
  std::vector<float> out_w_, out_b_;
};

ProbabilityMap unet_forward(const dsp::MelSpectrogram& mel, const WeightBundle& weights,
                            const UNetConfig& cfg);

/// 1 where prob >= threshold.
dsp::BinaryMask threshold_mask(const ProbabilityMap& probs, double threshold = 0.5);

/// 1 where the target magnitude is at least every interferer's.
dsp::BinaryMask ibm_training_target(const dsp::MelSpectrogram& target,
                                    std::span<const dsp::MelSpectrogram> interferers);

}  // namespace clearstream::unet

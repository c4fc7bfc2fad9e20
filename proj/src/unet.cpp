// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/unet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace clearstream::unet {

namespace {

std::string up_name(int i, const char* leaf) { return "unet.up" + std::to_string(i) + "." + leaf; }

void add_ds_specs(std::vector<TensorSpec>& s, const std::string& prefix, int cin, int cout) {
  const auto ci = static_cast<uint32_t>(cin), co = static_cast<uint32_t>(cout);
  s.push_back({prefix + ".dw.w", {ci, 3, 3}, 9});
  s.push_back({prefix + ".pw.w", {co, ci}, ci});
  s.push_back({prefix + ".pw.b", {co}, ci});
}

}  // namespace

void UNetConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("unet config: " + m); };
  if (depth < 1 || depth > 12) fail("depth out of range");
  if (base_channels < 2 || base_channels % 2 != 0) fail("base_channels must be even");
  const int div = 1 << depth;
  if (mel_bins <= 0 || time_bins <= 0 || mel_bins % div != 0 || time_bins % div != 0)
    fail("input dims must be divisible by 2^depth");
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must be in [0, 1]");
}

int UNetConfig::down_in(int level) const {
  return level == 1 ? 1 : base_channels << (level - 2);
}
int UNetConfig::down_out(int level) const { return base_channels << (level - 1); }
int UNetConfig::up_in(int level) const {
  return level == depth ? down_out(depth) : 3 * (base_channels << (level - 1));
}
int UNetConfig::up_out(int level) const { return (base_channels << (level - 1)) / 2; }

std::vector<TensorSpec> tensor_specs(const UNetConfig& cfg) {
  cfg.validate();
  std::vector<TensorSpec> s;
  for (int i = 1; i <= cfg.depth; ++i)
    add_ds_specs(s, "unet.down" + std::to_string(i), cfg.down_in(i), cfg.down_out(i));
  for (int i = cfg.depth; i >= 1; --i) {
    const int c = cfg.up_out(i);
    const auto cu = static_cast<uint32_t>(c);
    add_ds_specs(s, "unet.up" + std::to_string(i), cfg.up_in(i), c);
    s.push_back({up_name(i, "tconv.w"), {cu, cu, 2, 2}, cu});
    s.push_back({up_name(i, "tconv.b"), {cu}, cu});
  }
  const auto h = static_cast<uint32_t>(cfg.head_channels());
  s.push_back({"unet.out.w", {1, h}, h});
  s.push_back({"unet.out.b", {1}, h});
  return s;
}

uint64_t flop_count(const UNetConfig& cfg) {
  cfg.validate();
  auto ds = [](uint64_t px, uint64_t cin, uint64_t cout) { return px * (9 * cin + cin * cout); };
  uint64_t macs = 0;
  uint64_t px = static_cast<uint64_t>(cfg.mel_bins) * cfg.time_bins;
  for (int i = 1; i <= cfg.depth; ++i) {
    macs += ds(px, cfg.down_in(i), cfg.down_out(i));
    px /= 4;
  }
  for (int i = cfg.depth; i >= 1; --i) {
    const uint64_t c = cfg.up_out(i);
    macs += ds(px, cfg.up_in(i), c);
    macs += px * 4 * c * c;
    px *= 4;
  }
  macs += px * cfg.head_channels();
  return 2 * macs;
}

Model::Model(const WeightBundle& weights, UNetConfig cfg) : cfg_(std::move(cfg)) {
  weights.check(tensor_specs(cfg_));
  auto get = [&](const std::string& name) { return weights.find(name)->data; };
  auto load_ds = [&](const std::string& prefix, int cin, int cout) {
    DsConv c;
    c.cin = cin;
    c.cout = cout;
    c.dw = get(prefix + ".dw.w");
    c.pw = get(prefix + ".pw.w");
    c.pw_b = get(prefix + ".pw.b");
    return c;
  };
  for (int i = 1; i <= cfg_.depth; ++i)
    down_.push_back(load_ds("unet.down" + std::to_string(i), cfg_.down_in(i), cfg_.down_out(i)));
  up_.resize(cfg_.depth);
  for (int i = 1; i <= cfg_.depth; ++i) {
    Up& u = up_[i - 1];
    const int c = cfg_.up_out(i);
    u.conv = load_ds("unet.up" + std::to_string(i), cfg_.up_in(i), c);
    // [cin, cout, 2, 2] -> one cout x cin matrix per tap.
    const auto w = get(up_name(i, "tconv.w"));
    u.tconv_packed.resize(w.size());
    for (int ci = 0; ci < c; ++ci)
      for (int co = 0; co < c; ++co)
        for (int t = 0; t < 4; ++t)
          u.tconv_packed[(static_cast<std::size_t>(t) * c + co) * c + ci] =
              w[(static_cast<std::size_t>(ci) * c + co) * 4 + t];
    u.tconv_b = get(up_name(i, "tconv.b"));
  }
  out_w_ = get("unet.out.w");
  out_b_ = get("unet.out.b");
}

void Model::ds_conv(const DsConv& c, const float* in, int h, int w, float* out,
                    kernels::OpCounter* ops) const {
  const long px = static_cast<long>(h) * w;
  thread_local std::vector<float> mid;
  mid.resize(static_cast<std::size_t>(c.cin) * px);
  kernels::depthwise3x3(in, c.cin, h, w, c.dw.data(), mid.data());
  kernels::gemm_weights_by_cols(c.pw.data(), c.cout, c.cin, mid.data(), static_cast<int>(px),
                                c.pw_b.data(), out);
  kernels::relu(out, c.cout * px);
  if (ops) {
    ops->depthwise += static_cast<uint64_t>(px) * 9 * c.cin;
    ops->pointwise += static_cast<uint64_t>(px) * c.cin * c.cout;
  }
}

ProbabilityMap Model::forward(const dsp::MelSpectrogram& mel, kernels::OpCounter* ops) const {
  if (mel.mel_bins != cfg_.mel_bins || mel.time_bins != cfg_.time_bins)
    throw std::invalid_argument("unet: expected " + std::to_string(cfg_.mel_bins) + "x" +
                                std::to_string(cfg_.time_bins) + " input, got " +
                                std::to_string(mel.mel_bins) + "x" +
                                std::to_string(mel.time_bins));
  int h = cfg_.mel_bins, w = cfg_.time_bins;
  // Reused across calls; every kernel overwrites its whole output.
  thread_local std::vector<float> x, mid;
  thread_local std::vector<std::vector<float>> skips;
  x.resize(mel.values.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = static_cast<float>(std::log1p(std::max(mel.values[i], 0.0)));

  skips.resize(cfg_.depth);
  for (int i = 0; i < cfg_.depth; ++i) {
    const DsConv& c = down_[i];
    auto& skip = skips[i];
    skip.resize(static_cast<std::size_t>(c.cout) * h * w);
    ds_conv(c, x.data(), h, w, skip.data(), ops);
    x.resize(static_cast<std::size_t>(c.cout) * (h / 2) * (w / 2));
    kernels::maxpool2x2(skip.data(), c.cout, h, w, x.data());
    h /= 2;
    w /= 2;
  }

  for (int i = cfg_.depth - 1; i >= 0; --i) {
    const Up& u = up_[i];
    const int c = u.conv.cout;
    mid.resize(static_cast<std::size_t>(c) * h * w);
    ds_conv(u.conv, x.data(), h, w, mid.data(), ops);
    const auto& skip = skips[i];
    const std::size_t up_size = static_cast<std::size_t>(c) * 4 * h * w;
    x.resize(up_size + skip.size());
    kernels::transposed2x2(mid.data(), c, h, w, u.tconv_packed.data(), u.tconv_b.data(), c,
                           x.data());
    if (ops) ops->transposed += static_cast<uint64_t>(h) * w * 4 * c * c;
    std::copy(skip.begin(), skip.end(), x.begin() + static_cast<long>(up_size));
    h *= 2;
    w *= 2;
  }

  const long px = static_cast<long>(h) * w;
  std::vector<float> logits(static_cast<std::size_t>(px));
  kernels::gemm_weights_by_cols(out_w_.data(), 1, cfg_.head_channels(), x.data(),
                                static_cast<int>(px), out_b_.data(), logits.data());
  if (ops) ops->pointwise += static_cast<uint64_t>(px) * cfg_.head_channels();
  kernels::sigmoid(logits.data(), px);

  ProbabilityMap p{h, w, {logits.begin(), logits.end()}};
  return p;
}

ProbabilityMap unet_forward(const dsp::MelSpectrogram& mel, const WeightBundle& weights,
                            const UNetConfig& cfg) {
  return Model(weights, cfg).forward(mel);
}

dsp::BinaryMask threshold_mask(const ProbabilityMap& probs, double threshold) {
  dsp::BinaryMask m(probs.rows, probs.cols);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = probs.values[i] >= threshold ? 1 : 0;
  return m;
}

dsp::BinaryMask ibm_training_target(const dsp::MelSpectrogram& target,
                                    std::span<const dsp::MelSpectrogram> interferers) {
  for (const auto& s : interferers)
    if (s.mel_bins != target.mel_bins || s.time_bins != target.time_bins)
      throw std::invalid_argument("ibm: spectrogram shapes differ");
  dsp::BinaryMask m(target.mel_bins, target.time_bins, 1);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    for (const auto& s : interferers)
      if (s.values[i] > target.values[i]) {
        m.values[i] = 0;
        break;
      }
  return m;
}

}  // namespace clearstream::unet

// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "clearstream/rng.hpp"

namespace clearstream::pipeline {

namespace {

void slide(std::vector<double>& buf, std::span<const double> in) {
  const std::size_t n = in.size();
  std::copy(buf.begin() + static_cast<long>(n), buf.end(), buf.begin());
  std::copy(in.begin(), in.end(), buf.end() - static_cast<long>(n));
}

}  // namespace

void PipelineConfig::validate() const {
  tcn.validate();
  unet.validate();
  if (sample_rate != kSampleRate)
    throw std::invalid_argument("pipeline: sample rate must be " + std::to_string(kSampleRate));
  if (lookahead() % window() != 0 || lookahead() / window() >= unet.time_bins)
    throw std::invalid_argument("pipeline: lookahead does not fit the UNet window");
  if (stft().win_len < window())
    throw std::invalid_argument("pipeline: STFT window shorter than the hop");
}

std::vector<TensorSpec> tensor_specs(const PipelineConfig& cfg) {
  auto s = tcn::tensor_specs(cfg.tcn);
  auto u = unet::tensor_specs(cfg.unet);
  s.insert(s.end(), u.begin(), u.end());
  return s;
}

Engines::Engines(const WeightBundle& weights, PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  tcn_ = std::make_shared<const tcn::Model>(weights, cfg_.tcn);
  unet_ = std::make_shared<const unet::Model>(weights, cfg_.unet);
  fb_ = dsp::mel_filterbank(cfg_.unet.mel_bins, cfg_.stft().win_len, cfg_.sample_rate);
  owner_ = dsp::linear_bin_owner(fb_);
}

dsp::BinaryMask Engines::mel_mask(std::span<const double> mono_window, MaskOverride mode,
                                  kernels::OpCounter* ops) const {
  const int rows = cfg_.unet.mel_bins, cols = cfg_.unet.time_bins;
  if (mode == MaskOverride::kAllOnes) return dsp::BinaryMask(rows, cols, 1);
  if (mode == MaskOverride::kAllZeros) return dsp::BinaryMask(rows, cols, 0);
  auto mel = dsp::mel_project(dsp::stft(mono_window, cfg_.stft()), fb_);
  return unet::threshold_mask(unet_->forward(mel, ops), cfg_.unet.threshold);
}

std::vector<double> Engines::masked_packet(std::span<const double> tcn_window,
                                           const dsp::BinaryMask& mel_mask) const {
  const auto sc = cfg_.stft();
  auto spec = dsp::stft(tcn_window, sc);
  if (mel_mask.rows != fb_.n_mel || mel_mask.cols != spec.time_bins)
    throw std::invalid_argument("pipeline: mask shape does not match the window");
  for (int t = 0; t < spec.time_bins; ++t) {
    auto frame = spec.frame(t);
    for (int b = 0; b < spec.freq_bins; ++b)
      if (!mel_mask.at(owner_[b], t)) frame[b] = 0.0;
  }
  auto y = dsp::istft(spec, sc, tcn_window.size());
  const std::size_t start = static_cast<std::size_t>(cfg_.target_column()) * sc.hop;
  return {y.begin() + static_cast<long>(start),
          y.begin() + static_cast<long>(start + cfg_.window())};
}

Pipeline::Pipeline(std::shared_ptr<const Engines> engines, tcn::Mode tcn_mode)
    : engines_(std::move(engines)), mode_(tcn_mode) {
  if (!engines_) throw std::invalid_argument("pipeline: engines not initialized");
  const auto& cfg = engines_->config();
  if (mode_ == tcn::Mode::kCached) {
    stream_ = std::make_unique<tcn::StreamState>(engines_->tcn());
  } else {
    raw_l_.assign(cfg.tcn.input_samples(), 0.0);
    raw_r_.assign(cfg.tcn.input_samples(), 0.0);
  }
  mix_.assign(cfg.unet_window_samples(), 0.0);
  tcn_hist_.assign(cfg.unet_window_samples() - cfg.lookahead(), 0.0);
}

std::vector<double> Pipeline::push(std::span<const double> left, std::span<const double> right) {
  const auto& cfg = engines_->config();
  const std::size_t W = cfg.window();
  if (left.size() != W || right.size() != W)
    throw std::invalid_argument("pipeline: packet must hold exactly " + std::to_string(W) +
                                " samples per channel");

  std::vector<double> t;
  if (mode_ == tcn::Mode::kCached) {
    t = stream_->push(left, right);
  } else {
    slide(raw_l_, left);
    slide(raw_r_, right);
    t = engines_->tcn()->full_forward(WaveBuffer::stereo(raw_l_, raw_r_));
  }
  // The first packets' TCN output belongs to time before the stream began.
  if (packets_ < static_cast<uint64_t>(cfg.lookahead() / cfg.window())) std::fill(t.begin(), t.end(), 0.0);
  slide(tcn_hist_, t);

  std::vector<double> mono(W);
  for (std::size_t i = 0; i < W; ++i) mono[i] = left[i] + right[i];
  slide(mix_, mono);

  last_mask_ = engines_->mel_mask(mix_, override_);
  std::vector<double> x(tcn_hist_);
  x.resize(mix_.size(), 0.0);
  ++packets_;
  return engines_->masked_packet(x, last_mask_);
}

std::size_t packets_for(const PipelineConfig& cfg, std::size_t samples) {
  const std::size_t W = cfg.window();
  return (samples + cfg.lookahead() + W - 1) / W;
}

std::vector<double> offline_stream(const Engines& engines, const WaveBuffer& stereo,
                                   std::size_t packets, MaskOverride mode) {
  if (stereo.num_channels() != 2) throw std::invalid_argument("pipeline: input must be stereo");
  const auto& cfg = engines.config();
  const long W = cfg.window(), A = cfg.lookahead(), U = cfg.unet_window_samples();
  const long Z = cfg.tcn.input_samples();
  const long n = static_cast<long>(stereo.length());
  const long total = static_cast<long>(packets) * W;

  auto padded = [&](int ch) {
    std::vector<double> v(Z + total, 0.0);
    std::copy_n(stereo.channels[ch].begin(), std::min(n, total), v.begin() + Z);
    return v;
  };
  auto act = engines.tcn()->forward_all(WaveBuffer::stereo(padded(0), padded(1)));
  const long out0 = act.first_output_time * cfg.tcn.enc_kernel - Z;
  auto tcn_at = [&](long t) {
    const long i = t - out0;
    return t < 0 || i < 0 || i >= static_cast<long>(act.output.size()) ? 0.0 : act.output[i];
  };
  auto mix_at = [&](long t) {
    return t < 0 || t >= n ? 0.0 : stereo.channels[0][t] + stereo.channels[1][t];
  };

  std::vector<double> out;
  out.reserve(total);
  std::vector<double> mono(U), x(U);
  for (long k = 0; k < static_cast<long>(packets); ++k) {
    const long s0 = (k + 1) * W - U;
    for (long i = 0; i < U; ++i) {
      mono[i] = mix_at(s0 + i);
      x[i] = i < U - A ? tcn_at(s0 + i) : 0.0;
    }
    auto y = engines.masked_packet(x, engines.mel_mask(mono, mode));
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

namespace {

WaveBuffer prepare_input(const WaveBuffer& input) {
  input.validate();
  if (input.num_channels() != 2)
    throw std::invalid_argument("pipeline: expected 2 channels, got " +
                                std::to_string(input.num_channels()));
  if (input.sample_rate == kSampleRate) return input;
  if (input.sample_rate != kCaptureRate)
    throw std::invalid_argument("pipeline: unsupported sample rate " +
                                std::to_string(input.sample_rate));
  WaveBuffer even = input;
  if (even.length() % 2)
    for (auto& c : even.channels) c.push_back(0.0);
  return dsp::decimate_by_2(even);
}

WaveBuffer trim(const std::vector<double>& stream, std::size_t offset, std::size_t n) {
  return WaveBuffer::mono({stream.begin() + static_cast<long>(offset),
                           stream.begin() + static_cast<long>(offset + n)});
}

}  // namespace

WaveBuffer process_file(const WaveBuffer& input, const Engines& engines, MaskOverride mode) {
  const WaveBuffer x = prepare_input(input);
  const auto& cfg = engines.config();
  const std::size_t n = x.length(), W = cfg.window();
  const std::size_t packets = packets_for(cfg, n);
  Pipeline p(std::shared_ptr<const Engines>(&engines, [](const Engines*) {}));
  p.set_mask_override(mode);
  std::vector<double> stream;
  stream.reserve(packets * W);
  std::vector<double> l(W), r(W);
  for (std::size_t k = 0; k < packets; ++k) {
    for (std::size_t i = 0; i < W; ++i) {
      const std::size_t s = k * W + i;
      l[i] = s < n ? x.channels[0][s] : 0.0;
      r[i] = s < n ? x.channels[1][s] : 0.0;
    }
    auto y = p.push(l, r);
    stream.insert(stream.end(), y.begin(), y.end());
  }
  return trim(stream, cfg.lookahead(), n);
}

WaveBuffer process_file_offline(const WaveBuffer& input, const Engines& engines,
                                MaskOverride mode) {
  const WaveBuffer x = prepare_input(input);
  const auto& cfg = engines.config();
  const std::size_t n = x.length();
  return trim(offline_stream(engines, x, packets_for(cfg, n), mode), cfg.lookahead(), n);
}

LatencyReport latency_total(const LatencyBudget& b) {
  for (double v : {b.pcm_buffer_ms, b.ble_interval_ms, b.buffering_ms, b.inference_ms, b.bound_ms})
    if (!(v >= 0.0)) throw std::invalid_argument("latency: components must be nonnegative");
  LatencyReport r;
  r.total_ms = b.pcm_buffer_ms + b.ble_interval_ms + b.buffering_ms + b.inference_ms;
  r.allowance_ms = b.bound_ms - r.total_ms;
  r.total_rounded = std::lround(r.total_ms);
  r.allowance_rounded = std::lround(r.allowance_ms);
  r.over_budget = r.total_ms > b.bound_ms;
  return r;
}

BenchStats bench_packet(std::shared_ptr<const Engines> engines, int n_packets, tcn::Mode mode,
                        uint64_t seed) {
  if (n_packets <= 0) throw std::invalid_argument("bench: packet count must be positive");
  const auto& cfg = engines->config();
  Pipeline p(engines, mode);
  Rng rng(seed);
  const std::size_t W = cfg.window();
  std::vector<double> l(W), r(W);
  auto fill = [&] {
    for (std::size_t i = 0; i < W; ++i) {
      l[i] = rng.uniform(-0.5, 0.5);
      r[i] = rng.uniform(-0.5, 0.5);
    }
  };
  for (int i = 0; i < 3; ++i) {
    fill();
    p.push(l, r);
  }
  std::vector<double> ms;
  ms.reserve(n_packets);
  for (int i = 0; i < n_packets; ++i) {
    fill();
    const auto t0 = std::chrono::steady_clock::now();
    p.push(l, r);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  BenchStats s;
  s.packets = n_packets;
  double sum = 0.0;
  for (double v : ms) sum += v;
  s.mean_ms = sum / n_packets;
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) {
    const std::size_t i = static_cast<std::size_t>(std::ceil(q * n_packets)) - 1;
    return sorted[std::min<std::size_t>(i, sorted.size() - 1)];
  };
  s.median_ms = n_packets % 2 ? sorted[n_packets / 2]
                              : 0.5 * (sorted[n_packets / 2 - 1] + sorted[n_packets / 2]);
  s.p95_ms = pct(0.95);
  s.max_ms = sorted.back();
  s.tcn_flops = tcn::flop_count(cfg.tcn, mode);
  s.unet_flops = unet::flop_count(cfg.unet);
  s.total_flops = s.tcn_flops + s.unet_flops;
  s.realtime = s.p95_ms < 1000.0 * cfg.window() / cfg.sample_rate;
  return s;
}

}  // namespace clearstream::pipeline

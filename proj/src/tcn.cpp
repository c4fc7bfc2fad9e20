// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/tcn.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

namespace clearstream::tcn {

namespace {

using kernels::OpCounter;

std::string layer_name(int i, const char* leaf) { return "tcn." + std::to_string(i) + "." + leaf; }

std::vector<float> take(const WeightBundle& w, const TensorSpec& spec) {
  return w.require(spec.name, spec.dims).data;
}

}  // namespace

void TcnConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("tcn config: " + m); };
  if (enc_kernel <= 0 || window <= 0 || latent_channels <= 0 || conv_kernel <= 0)
    fail("sizes must be positive");
  if (in_channels != 2) fail("in_channels must be 2");
  if (window % enc_kernel != 0) fail("window must be a multiple of enc_kernel");
  if (lookahead % enc_kernel != 0) fail("lookahead must be a multiple of enc_kernel");
  if (lookahead != 2 * window) fail("lookahead must equal 2 * window");
  if (dilations.empty()) fail("no layers");
  for (int d : dilations)
    if (d <= 0) fail("dilations must be positive");
  auto la = layer_lookahead();
  if (std::accumulate(la.begin(), la.end(), 0) != lookahead_frames())
    fail("lookahead cannot be split into centered layers");
}

std::vector<int> TcnConfig::layer_lookahead() const {
  std::vector<int> out(dilations.size(), 0);
  int remaining = lookahead_frames();
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    const int centered = (conv_kernel - 1) / 2 * dilations[i];
    if (centered > 0 && centered <= remaining) {
      out[i] = centered;
      remaining -= centered;
    }
  }
  return out;
}

int TcnConfig::receptive_frames() const {
  return 1 + (conv_kernel - 1) * std::accumulate(dilations.begin(), dilations.end(), 0);
}

std::vector<TensorSpec> tensor_specs(const TcnConfig& cfg) {
  const auto N = static_cast<uint32_t>(cfg.latent_channels);
  const auto L = static_cast<uint32_t>(cfg.enc_kernel);
  const auto K = static_cast<uint32_t>(cfg.conv_kernel);
  const auto C = static_cast<uint32_t>(cfg.in_channels);
  std::vector<TensorSpec> s;
  s.push_back({"enc.w", {N, C, L}, C * L});
  s.push_back({"enc.b", {N}, C * L});
  for (int i = 0; i < cfg.layers(); ++i) {
    s.push_back({layer_name(i, "dw.w"), {N, K}, K});
    s.push_back({layer_name(i, "pw.w"), {N, N}, N});
    s.push_back({layer_name(i, "pw.b"), {N}, N});
  }
  s.push_back({"dec.w", {L, N}, N});
  s.push_back({"dec.b", {L}, N});
  return s;
}

uint64_t flop_count(const TcnConfig& cfg, Mode mode) {
  cfg.validate();
  const uint64_t N = cfg.latent_channels, L = cfg.enc_kernel, K = cfg.conv_kernel;
  const uint64_t C = cfg.in_channels, P = cfg.frames_per_packet();
  const uint64_t per_layer_frame = N * K + N * N;
  uint64_t macs = P * N * L;  // decoder
  if (mode == Mode::kCached) {
    macs += P * C * L * N + P * per_layer_frame * cfg.layers();
  } else {
    uint64_t frames = cfg.input_frames();
    macs += frames * C * L * N;
    for (int d : cfg.dilations) {
      frames -= (K - 1) * d;
      macs += frames * per_layer_frame;
    }
  }
  return 2 * macs;
}

std::size_t state_buffer_frames(const TcnConfig& cfg) {
  cfg.validate();
  const int P = cfg.frames_per_packet(), K = cfg.conv_kernel;
  std::size_t total = std::max(P + (K - 1) * cfg.dilations[0], P + cfg.lookahead_frames());
  for (int i = 1; i < cfg.layers(); ++i) total += P + (K - 1) * cfg.dilations[i];
  return total;
}

Model::Model(const WeightBundle& weights, TcnConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  lookahead_ = cfg_.layer_lookahead();
  auto specs = tensor_specs(cfg_);
  weights.check(specs);
  std::size_t k = 0;
  enc_w_ = take(weights, specs[k++]);
  enc_b_ = take(weights, specs[k++]);
  layers_.resize(cfg_.layers());
  for (auto& l : layers_) {
    l.dw = take(weights, specs[k++]);
    l.pw = take(weights, specs[k++]);
    l.pw_b = take(weights, specs[k++]);
  }
  dec_w_ = take(weights, specs[k++]);
  dec_b_ = take(weights, specs[k++]);
}

void Model::encode(const float* left, const float* right, int frames, float* out,
                   OpCounter* ops) const {
  const int L = cfg_.enc_kernel, N = cfg_.latent_channels;
  std::vector<float> patches(static_cast<std::size_t>(frames) * 2 * L);
  for (int f = 0; f < frames; ++f) {
    float* p = patches.data() + static_cast<std::size_t>(f) * 2 * L;
    std::copy_n(left + static_cast<std::size_t>(f) * L, L, p);
    std::copy_n(right + static_cast<std::size_t>(f) * L, L, p + L);
  }
  kernels::gemm_rows_by_weights(patches.data(), frames, 2 * L, enc_w_.data(), N, enc_b_.data(),
                                out);
  kernels::relu(out, static_cast<long>(frames) * N);
  if (ops) ops->encoder += static_cast<uint64_t>(frames) * 2 * L * N;
}

void Model::layer(int index, const float* in, int out_frames, float* out, OpCounter* ops) const {
  const int N = cfg_.latent_channels, K = cfg_.conv_kernel;
  const int d = cfg_.dilations[index];
  const Layer& w = layers_[index];
  std::vector<float> mid(static_cast<std::size_t>(out_frames) * N);
  kernels::depthwise_dilated(in, N, out_frames, d, w.dw.data(), K, mid.data());
  kernels::gemm_rows_by_weights(mid.data(), out_frames, N, w.pw.data(), N, w.pw_b.data(), out);
  kernels::relu(out, static_cast<long>(out_frames) * N);
  const float* res = in + static_cast<std::size_t>(layer_shrink(index) - lookahead_[index]) * N;
  const long n = static_cast<long>(out_frames) * N;
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) out[i] += res[i];
  if (ops) {
    ops->depthwise += static_cast<uint64_t>(out_frames) * N * K;
    ops->pointwise += static_cast<uint64_t>(out_frames) * N * N;
  }
}

void Model::apply_latent_mask(float* mask, const float* enc, int frames) const {
  const long n = static_cast<long>(frames) * cfg_.latent_channels;
  kernels::sigmoid(mask, n);
  for (long i = 0; i < n; ++i) mask[i] *= enc[i];
}

void Model::decode(const float* latent, int frames, float* out, OpCounter* ops) const {
  const int L = cfg_.enc_kernel, N = cfg_.latent_channels;
  kernels::gemm_rows_by_weights(latent, frames, N, dec_w_.data(), L, dec_b_.data(), out);
  if (ops) ops->decoder += static_cast<uint64_t>(frames) * N * L;
}

Activations Model::forward_all(const WaveBuffer& stereo, OpCounter* ops) const {
  if (stereo.num_channels() != 2) throw std::invalid_argument("tcn: input must be stereo");
  const int L = cfg_.enc_kernel, N = cfg_.latent_channels;
  if (stereo.length() % L != 0)
    throw std::invalid_argument("tcn: input length must be a multiple of enc_kernel");
  const int frames = static_cast<int>(stereo.length() / L);
  if (frames < cfg_.receptive_frames())
    throw std::invalid_argument("tcn: insufficient context, need at least " +
                                std::to_string(cfg_.receptive_frames() * L) + " samples");

  std::vector<float> left(stereo.channels[0].begin(), stereo.channels[0].end());
  std::vector<float> right(stereo.channels[1].begin(), stereo.channels[1].end());

  Activations act;
  act.layers.resize(cfg_.layers() + 1);
  LayerFrames& enc = act.layers[0];
  enc.first_time = 0;
  enc.frames = frames;
  enc.channels = N;
  enc.data.resize(static_cast<std::size_t>(frames) * N);
  encode(left.data(), right.data(), frames, enc.data.data(), ops);

  for (int i = 0; i < cfg_.layers(); ++i) {
    const LayerFrames& in = act.layers[i];
    LayerFrames& out = act.layers[i + 1];
    out.frames = in.frames - layer_shrink(i);
    out.first_time = in.first_time + layer_shrink(i) - lookahead_[i];
    out.channels = N;
    out.data.resize(static_cast<std::size_t>(out.frames) * N);
    layer(i, in.data.data(), out.frames, out.data.data(), ops);
  }

  const LayerFrames& top = act.layers.back();
  std::vector<float> latent = top.data;
  apply_latent_mask(latent.data(), enc.data.data() + static_cast<std::size_t>(top.first_time) * N,
                    top.frames);
  std::vector<float> samples(static_cast<std::size_t>(top.frames) * L);
  decode(latent.data(), top.frames, samples.data(), ops);
  act.output.assign(samples.begin(), samples.end());
  act.first_output_time = top.first_time;
  return act;
}

std::vector<double> Model::full_forward(const WaveBuffer& stereo, OpCounter* ops) const {
  if (stereo.num_channels() != 2) throw std::invalid_argument("tcn: input must be stereo");
  const std::size_t need = cfg_.input_samples();
  if (stereo.length() < need)
    throw std::invalid_argument("tcn: insufficient context, need " + std::to_string(need) +
                                " samples, got " + std::to_string(stereo.length()));
  const std::size_t start = stereo.length() - need;
  WaveBuffer tail = WaveBuffer::stereo(
      {stereo.channels[0].begin() + static_cast<long>(start), stereo.channels[0].end()},
      {stereo.channels[1].begin() + static_cast<long>(start), stereo.channels[1].end()},
      stereo.sample_rate);
  return forward_all(tail, ops).output;
}

StreamState::StreamState(std::shared_ptr<const Model> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("tcn: null model");
  const TcnConfig& cfg = model_->config();
  const int P = cfg.frames_per_packet(), N = cfg.latent_channels, layers = cfg.layers();

  window_frames_.resize(layers);
  window_frames_[0] =
      std::max(P + model_->layer_shrink(0), P + model_->total_lookahead_frames());
  for (int l = 1; l < layers; ++l) window_frames_[l] = P + model_->layer_shrink(l);

  cum_lookahead_.assign(layers, 0);
  for (int l = 1; l < layers; ++l)
    cum_lookahead_[l] = cum_lookahead_[l - 1] + model_->layer_lookahead(l - 1);

  // Steady state of a silent input, computed by the same kernels.
  std::vector<float> zeros(cfg.enc_kernel, 0.0f);
  std::vector<float> frame(N);
  model_->encode(zeros.data(), zeros.data(), 1, frame.data(), nullptr);
  windows_.resize(layers);
  for (int l = 0; l < layers; ++l) {
    if (l > 0) {
      const int span = 1 + model_->layer_shrink(l - 1);
      std::vector<float> in(static_cast<std::size_t>(span) * N);
      for (int f = 0; f < span; ++f) std::copy(frame.begin(), frame.end(), in.begin() + f * N);
      model_->layer(l - 1, in.data(), 1, frame.data(), nullptr);
    }
    auto& w = windows_[l];
    w.resize(static_cast<std::size_t>(window_frames_[l]) * N);
    for (int f = 0; f < window_frames_[l]; ++f)
      std::copy(frame.begin(), frame.end(), w.begin() + static_cast<long>(f) * N);
  }

  scratch_l_.resize(cfg.window);
  scratch_r_.resize(cfg.window);
  scratch_in_.resize(static_cast<std::size_t>(P) * N);
  scratch_out_.resize(static_cast<std::size_t>(P) * N);
}

long StreamState::newest_time(int l) const {
  return static_cast<long>(frames_seen_) - 1 - cum_lookahead_[l];
}

std::size_t StreamState::buffer_frames() const {
  return std::accumulate(window_frames_.begin(), window_frames_.end(), std::size_t{0});
}

void StreamState::slide_in(int l, const float* frames) {
  const std::size_t N = model_->config().latent_channels;
  const std::size_t P = model_->config().frames_per_packet();
  auto& w = windows_[l];
  std::memmove(w.data(), w.data() + P * N, (w.size() - P * N) * sizeof(float));
  std::memcpy(w.data() + w.size() - P * N, frames, P * N * sizeof(float));
}

std::vector<double> StreamState::push(std::span<const double> left,
                                      std::span<const double> right) {
  const TcnConfig& cfg = model_->config();
  const int P = cfg.frames_per_packet(), N = cfg.latent_channels, W = cfg.window;
  if (left.size() != static_cast<std::size_t>(W) || right.size() != static_cast<std::size_t>(W))
    throw std::invalid_argument("tcn: packet must hold exactly " + std::to_string(W) +
                                " samples per channel");
  std::copy(left.begin(), left.end(), scratch_l_.begin());
  std::copy(right.begin(), right.end(), scratch_r_.begin());

  model_->encode(scratch_l_.data(), scratch_r_.data(), P, scratch_out_.data(), &ops_);
  slide_in(0, scratch_out_.data());
  frames_seen_ += P;

  for (int i = 0; i < cfg.layers(); ++i) {
    const int need = P + model_->layer_shrink(i);
    const float* in =
        windows_[i].data() + static_cast<std::size_t>(window_frames_[i] - need) * N;
    model_->layer(i, in, P, scratch_out_.data(), &ops_);
    if (i + 1 < cfg.layers()) slide_in(i + 1, scratch_out_.data());
  }

  const int A = model_->total_lookahead_frames();
  const float* enc =
      windows_[0].data() + static_cast<std::size_t>(window_frames_[0] - A - P) * N;
  model_->apply_latent_mask(scratch_out_.data(), enc, P);
  std::vector<float> samples(static_cast<std::size_t>(W));
  model_->decode(scratch_out_.data(), P, samples.data(), &ops_);
  return {samples.begin(), samples.end()};
}

std::vector<double> tcn_full_forward(const WaveBuffer& stereo, const WeightBundle& weights,
                                     const TcnConfig& cfg) {
  return Model(weights, cfg).full_forward(stereo);
}

StreamState tcn_stream_init(const WeightBundle& weights, const TcnConfig& cfg) {
  return StreamState(std::make_shared<const Model>(weights, cfg));
}

}  // namespace clearstream::tcn

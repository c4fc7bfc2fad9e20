// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clearstream::reference {

void gemm_rows_by_weights(const float* a, int rows, int inner, const float* w, int outs,
                          const float* bias, float* out) {
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < outs; ++o) {
      float acc = 0.0f;
      for (int i = 0; i < inner; ++i) acc += a[r * inner + i] * w[o * inner + i];
      out[r * outs + o] = acc + (bias ? bias[o] : 0.0f);
    }
}

void gemm_weights_by_cols(const float* w, int outs, int inner, const float* x, int cols,
                          const float* bias, float* out) {
  for (int o = 0; o < outs; ++o)
    for (int c = 0; c < cols; ++c) {
      float acc = 0.0f;
      for (int i = 0; i < inner; ++i) acc += w[o * inner + i] * x[static_cast<long>(i) * cols + c];
      out[static_cast<long>(o) * cols + c] = acc + (bias ? bias[o] : 0.0f);
    }
}

void depthwise_dilated(const float* in, int channels, int out_frames, int dilation,
                       const float* w, int taps, float* out) {
  for (int f = 0; f < out_frames; ++f)
    for (int c = 0; c < channels; ++c) {
      float acc = 0.0f;
      for (int k = 0; k < taps; ++k)
        acc += w[c * taps + k] * in[static_cast<long>(f + k * dilation) * channels + c];
      out[static_cast<long>(f) * channels + c] = acc;
    }
}

void depthwise3x3(const float* in, int channels, int height, int width, const float* w,
                  float* out) {
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        float acc = 0.0f;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
            acc += w[c * 9 + (dy + 1) * 3 + dx + 1] *
                   in[(static_cast<long>(c) * height + yy) * width + xx];
          }
        out[(static_cast<long>(c) * height + y) * width + x] = acc;
      }
}

void maxpool2x2(const float* in, int channels, int height, int width, float* out) {
  const int oh = height / 2, ow = width / 2;
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        float m = -INFINITY;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            m = std::max(m, in[(static_cast<long>(c) * height + 2 * y + i) * width + 2 * x + j]);
        out[(static_cast<long>(c) * oh + y) * ow + x] = m;
      }
}

void transposed2x2(const float* in, int cin, int height, int width, const float* packed,
                   const float* bias, int cout, float* out) {
  const int oh = 2 * height, ow = 2 * width;
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const int t = (y % 2) * 2 + x % 2;
        float acc = 0.0f;
        for (int i = 0; i < cin; ++i)
          acc += packed[(static_cast<long>(t) * cout + o) * cin + i] *
                 in[(static_cast<long>(i) * height + y / 2) * width + x / 2];
        out[(static_cast<long>(o) * oh + y) * ow + x] = acc + (bias ? bias[o] : 0.0f);
      }
}

namespace {

const std::vector<float>& tensor(const WeightBundle& w, const std::string& name) {
  const TensorRecord* r = w.find(name);
  if (!r) throw WeightError(WeightError::Kind::kMissingTensor, name);
  return r->data;
}

}  // namespace

TcnTrace tcn_oracle(const WaveBuffer& stereo, const WeightBundle& w, const tcn::TcnConfig& cfg) {
  const int L = cfg.enc_kernel, N = cfg.latent_channels, K = cfg.conv_kernel;
  const long T = static_cast<long>(stereo.length()) / L;

  std::vector<int> future;
  int budget = cfg.lookahead / L;
  for (int d : cfg.dilations) {
    int a = (K / 2) * d;
    if (a > budget) a = 0;
    budget -= a;
    future.push_back(a);
  }

  TcnTrace tr;
  tr.layers.resize(cfg.dilations.size() + 1);
  {
    const auto& ew = tensor(w, "enc.w");
    const auto& eb = tensor(w, "enc.b");
    auto& enc = tr.layers[0];
    enc.first_time = 0;
    enc.frames.assign(T, std::vector<double>(N));
    for (long t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n) {
        double acc = eb[n];
        for (int ch = 0; ch < 2; ++ch)
          for (int k = 0; k < L; ++k)
            acc += static_cast<double>(ew[(n * 2 + ch) * L + k]) * stereo.channels[ch][t * L + k];
        enc.frames[t][n] = std::max(acc, 0.0);
      }
  }

  for (std::size_t l = 0; l < cfg.dilations.size(); ++l) {
    const int d = cfg.dilations[l], a = future[l];
    const std::string p = "tcn." + std::to_string(l) + ".";
    const auto& dw = tensor(w, p + "dw.w");
    const auto& pw = tensor(w, p + "pw.w");
    const auto& pb = tensor(w, p + "pw.b");
    const auto& in = tr.layers[l];
    auto& out = tr.layers[l + 1];
    const long in_end = in.first_time + static_cast<long>(in.frames.size());
    out.first_time = in.first_time + (K - 1) * d - a;
    const long out_end = in_end - a;
    std::vector<double> mid(N);
    for (long t = out.first_time; t < out_end; ++t) {
      for (int c = 0; c < N; ++c) {
        double acc = 0.0;
        for (int j = 0; j < K; ++j)
          acc += static_cast<double>(dw[c * K + j]) *
                 in.frames[t - (K - 1 - j) * d + a - in.first_time][c];
        mid[c] = acc;
      }
      std::vector<double> y(N);
      for (int o = 0; o < N; ++o) {
        double acc = pb[o];
        for (int c = 0; c < N; ++c) acc += static_cast<double>(pw[o * N + c]) * mid[c];
        y[o] = std::max(acc, 0.0) + in.frames[t - in.first_time][o];
      }
      out.frames.push_back(std::move(y));
    }
  }

  const auto& dec_w = tensor(w, "dec.w");
  const auto& dec_b = tensor(w, "dec.b");
  const auto& top = tr.layers.back();
  const auto& enc = tr.layers[0];
  tr.first_output_time = top.first_time;
  for (std::size_t f = 0; f < top.frames.size(); ++f) {
    const long t = top.first_time + static_cast<long>(f);
    std::vector<double> latent(N);
    for (int n = 0; n < N; ++n)
      latent[n] = enc.frames[t][n] / (1.0 + std::exp(-top.frames[f][n]));
    for (int k = 0; k < L; ++k) {
      double acc = dec_b[k];
      for (int n = 0; n < N; ++n) acc += static_cast<double>(dec_w[k * N + n]) * latent[n];
      tr.output.push_back(acc);
    }
  }
  return tr;
}

namespace {

// Channel-major feature map in double.
struct Map {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  Map(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
  double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const {
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
};

Map ds_conv(const Map& in, const WeightBundle& wb, const std::string& prefix, int cout) {
  const auto& dw = tensor(wb, prefix + ".dw.w");
  const auto& pw = tensor(wb, prefix + ".pw.w");
  const auto& pb = tensor(wb, prefix + ".pw.b");
  Map mid(in.c, in.h, in.w);
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const int yy = y + i - 1, xx = x + j - 1;
            if (yy >= 0 && yy < in.h && xx >= 0 && xx < in.w)
              acc += static_cast<double>(dw[(c * 3 + i) * 3 + j]) * in.at(c, yy, xx);
          }
        mid.at(c, y, x) = acc;
      }
  Map out(cout, in.h, in.w);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        double acc = pb[o];
        for (int c = 0; c < in.c; ++c)
          acc += static_cast<double>(pw[static_cast<std::size_t>(o) * in.c + c]) * mid.at(c, y, x);
        out.at(o, y, x) = std::max(acc, 0.0);
      }
  return out;
}

}  // namespace

std::vector<double> unet_oracle(const dsp::MelSpectrogram& mel, const WeightBundle& wb,
                                const unet::UNetConfig& cfg) {
  Map x(1, mel.mel_bins, mel.time_bins);
  for (int m = 0; m < mel.mel_bins; ++m)
    for (int t = 0; t < mel.time_bins; ++t) x.at(0, m, t) = std::log1p(mel.at(m, t));

  std::vector<Map> skips;
  int ch = cfg.base_channels;
  for (int i = 1; i <= cfg.depth; ++i, ch *= 2) {
    Map y = ds_conv(x, wb, "unet.down" + std::to_string(i), ch);
    Map p(ch, y.h / 2, y.w / 2);
    for (int c = 0; c < ch; ++c)
      for (int r = 0; r < p.h; ++r)
        for (int s = 0; s < p.w; ++s)
          p.at(c, r, s) = std::max(std::max(y.at(c, 2 * r, 2 * s), y.at(c, 2 * r, 2 * s + 1)),
                                   std::max(y.at(c, 2 * r + 1, 2 * s), y.at(c, 2 * r + 1, 2 * s + 1)));
    skips.push_back(std::move(y));
    x = std::move(p);
  }

  for (int i = cfg.depth; i >= 1; --i) {
    const Map& skip = skips[i - 1];
    const int c = skip.c / 2;
    const std::string p = "unet.up" + std::to_string(i);
    Map y = ds_conv(x, wb, p, c);
    const auto& tw = tensor(wb, p + ".tconv.w");
    const auto& tb = tensor(wb, p + ".tconv.b");
    Map cat(c + skip.c, 2 * y.h, 2 * y.w);
    for (int o = 0; o < c; ++o)
      for (int r = 0; r < cat.h; ++r)
        for (int s = 0; s < cat.w; ++s) {
          double acc = tb[o];
          for (int in = 0; in < c; ++in)
            acc += static_cast<double>(tw[((static_cast<std::size_t>(in) * c + o) * 2 + r % 2) * 2 + s % 2]) *
                   y.at(in, r / 2, s / 2);
          cat.at(o, r, s) = acc;
        }
    for (int k = 0; k < skip.c; ++k)
      for (int r = 0; r < cat.h; ++r)
        for (int s = 0; s < cat.w; ++s) cat.at(c + k, r, s) = skip.at(k, r, s);
    x = std::move(cat);
  }

  const auto& ow = tensor(wb, "unet.out.w");
  const auto& ob = tensor(wb, "unet.out.b");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.h) * x.w);
  for (int r = 0; r < x.h; ++r)
    for (int s = 0; s < x.w; ++s) {
      double acc = ob[0];
      for (int k = 0; k < x.c; ++k) acc += static_cast<double>(ow[k]) * x.at(k, r, s);
      out.push_back(1.0 / (1.0 + std::exp(-acc)));
    }
  return out;
}

}  // namespace clearstream::reference

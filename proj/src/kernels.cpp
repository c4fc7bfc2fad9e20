// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

namespace clearstream::kernels {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

}  // namespace

void gemm_rows_by_weights(const float* a, int rows, int inner, const float* w, int outs,
                          const float* bias, float* out) {
  MapConst am(a, rows, inner);
  MapConst wm(w, outs, inner);
  Map om(out, rows, outs);
  om.noalias() = am * wm.transpose();
  if (bias) {
    Eigen::Map<const Eigen::RowVectorXf> bv(bias, outs);
    om.rowwise() += bv;
  }
}

void gemm_weights_by_cols(const float* w, int outs, int inner, const float* x, int cols,
                          const float* bias, float* out) {
  MapConst wm(w, outs, inner);
  MapConst xm(x, inner, cols);
  Map om(out, outs, cols);
  om.noalias() = wm * xm;
  if (bias) {
    Eigen::Map<const Eigen::VectorXf> bv(bias, outs);
    om.colwise() += bv;
  }
}

void depthwise_dilated(const float* in, int channels, int out_frames, int dilation,
                       const float* w, int taps, float* out) {
#pragma omp parallel for schedule(static)
  for (int f = 0; f < out_frames; ++f) {
    float* o = out + static_cast<long>(f) * channels;
    std::fill(o, o + channels, 0.0f);
    for (int k = 0; k < taps; ++k) {
      const float* src = in + static_cast<long>(f + k * dilation) * channels;
#pragma omp simd
      for (int c = 0; c < channels; ++c) o[c] += w[c * taps + k] * src[c];
    }
  }
}

void depthwise3x3(const float* in, int channels, int height, int width, const float* w,
                  float* out) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float* src = in + static_cast<long>(c) * height * width;
    float* dst = out + static_cast<long>(c) * height * width;
    const float* k = w + c * 9;
    std::fill(dst, dst + static_cast<long>(height) * width, 0.0f);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const float kv = k[(dy + 1) * 3 + (dx + 1)];
        const int x0 = std::max(0, -dx), x1 = std::min(width, width - dx);
        for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
          const float* s = src + static_cast<long>(y + dy) * width + dx;
          float* d = dst + static_cast<long>(y) * width;
#pragma omp simd
          for (int x = x0; x < x1; ++x) d[x] += kv * s[x];
        }
      }
    }
  }
}

void maxpool2x2(const float* in, int channels, int height, int width, float* out) {
  const int oh = height / 2, ow = width / 2;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float* src = in + static_cast<long>(c) * height * width;
    float* dst = out + static_cast<long>(c) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const float* r0 = src + static_cast<long>(2 * y) * width;
      const float* r1 = r0 + width;
      for (int x = 0; x < ow; ++x)
        dst[y * ow + x] =
            std::max(std::max(r0[2 * x], r0[2 * x + 1]), std::max(r1[2 * x], r1[2 * x + 1]));
    }
  }
}

void transposed2x2(const float* in, int cin, int height, int width, const float* packed,
                   const float* bias, int cout, float* out) {
  const long px = static_cast<long>(height) * width;
  const int ow = 2 * width;
  // The four taps stacked form one (4 * cout) x cin matrix.
  thread_local std::vector<float> tap;
  tap.resize(static_cast<std::size_t>(4) * cout * px);
  gemm_weights_by_cols(packed, 4 * cout, cin, in, static_cast<int>(px), nullptr, tap.data());
  const float* taps = tap.data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < cout; ++o) {
    const float b = bias ? bias[o] : 0.0f;
    float* dst = out + static_cast<long>(o) * 4 * px;
    for (int i = 0; i < 2; ++i) {
      const float* t0 = taps + (static_cast<long>(2 * i) * cout + o) * px;
      const float* t1 = t0 + static_cast<long>(cout) * px;
      for (int y = 0; y < height; ++y) {
        float* row = dst + static_cast<long>(2 * y + i) * ow;
        const float* a = t0 + static_cast<long>(y) * width;
        const float* c = t1 + static_cast<long>(y) * width;
        for (int x = 0; x < width; ++x) {
          row[2 * x] = a[x] + b;
          row[2 * x + 1] = c[x] + b;
        }
      }
    }
  }
}

void relu(float* x, long n) {
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void sigmoid(float* x, long n) {
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) x[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

}  // namespace clearstream::kernels

// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

namespace clearstream::kernels {

/// Multiply-accumulates actually executed, by layer kind. Engines add to it
/// as they run, which gives an instrumented count independent of the
/// analytic FLOP formulas.
struct OpCounter {
  uint64_t encoder = 0;
  uint64_t depthwise = 0;
  uint64_t pointwise = 0;
  uint64_t transposed = 0;
  uint64_t decoder = 0;

  uint64_t total_macs() const {
    return encoder + depthwise + pointwise + transposed + decoder;
  }
  uint64_t flops() const { return 2 * total_macs(); }
};

// OpenMP-parallel float kernels. The serial reference versions used by the
// tests and the benchmark live in tests/reference.

/// out[r][o] = bias[o] + sum_i a[r][i] * w[o][i]
/// a: rows x inner, w: outs x inner, out: rows x outs (all row-major).
void gemm_rows_by_weights(const float* a, int rows, int inner, const float* w, int outs,
                          const float* bias, float* out);

/// out[o][c] = bias[o] + sum_i w[o][i] * x[i][c]
/// w: outs x inner, x: inner x cols, out: outs x cols. bias may be null.
void gemm_weights_by_cols(const float* w, int outs, int inner, const float* x, int cols,
                          const float* bias, float* out);

/// Frame-major dilated depthwise convolution without padding:
/// out[f][c] = sum_k w[c][k] * in[f + k * dilation][c], f in [0, out_frames).
void depthwise_dilated(const float* in, int channels, int out_frames, int dilation,
                       const float* w, int taps, float* out);

/// Channel-major 3x3 depthwise convolution with zero "same" padding.
void depthwise3x3(const float* in, int channels, int height, int width, const float* w,
                  float* out);

/// Channel-major 2x2 max pooling, stride 2.
void maxpool2x2(const float* in, int channels, int height, int width, float* out);

/// Channel-major transposed convolution, kernel 2x2, stride 2.
/// packed: 4 matrices (one per kernel tap, row-major tap = 2*i + j) of
/// shape cout x cin. out has shape cout x 2h x 2w.
void transposed2x2(const float* in, int cin, int height, int width, const float* packed,
                   const float* bias, int cout, float* out);

void relu(float* x, long n);
void sigmoid(float* x, long n);

}  // namespace clearstream::kernels

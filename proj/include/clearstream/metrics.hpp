// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <string>
#include <vector>

#include "clearstream/dsp.hpp"

namespace clearstream::metrics {

inline constexpr double kSiSdrCap = 100.0;

/// Scale-invariant SDR in dB over zero-meaned signals, capped at +100 dB.
/// Throws std::invalid_argument on length mismatch or a silent reference.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

struct SiSdrReport {
  double input_si_sdr = 0;
  double output_si_sdr = 0;
  double improvement = 0;
};

/// Improvement of estimate over the mixture channel (the left one in
/// evaluation reports), both scored against the same reference.
SiSdrReport si_sdr_improvement(std::span<const double> reference,
                               std::span<const double> mixture_channel,
                               std::span<const double> estimate);

struct ChunkScore {
  std::size_t start = 0;
  int lag = 0;  // estimate sample start + lag lines up with reference sample start
  double si_sdr = 0;
  bool silent = false;
};

struct ChunkedSdr {
  std::vector<ChunkScore> chunks;
  double aggregate = 0;  // mean of the non-silent chunk values in dB
  std::size_t scored = 0;
};

/// Whole chunks of the reference only; the trailing partial chunk is
/// dropped. Throws when the signal is shorter than one chunk.
ChunkedSdr chunked_output_sdr(std::span<const double> reference, std::span<const double> estimate,
                              std::size_t chunk_samples = 15625, int max_lag = 1600);

/// Lag in [-max_lag, max_lag] maximizing sum_i ref[start + i] * est[start + i + lag]
/// over i in [0, len); estimate samples outside its range count as zero.
int best_lag(std::span<const double> reference, std::span<const double> estimate,
             std::size_t start, std::size_t len, int max_lag);

struct LossBreakdown {
  double l1 = 0;
  double l_sc = 0;
  double l_mag = 0;
  double total() const { return l1 + l_sc + l_mag; }
};

inline constexpr double kLogMagEps = 1e-8;

LossBreakdown loss_total(std::span<const double> target, std::span<const double> output,
                         const dsp::StftConfig& cfg = {});

enum class OracleMaskKind { kIbm, kIrm };

struct OracleMaskResult {
  std::vector<double> mask;  // frame-major, like ComplexSpectrogram::values
  std::vector<double> estimate;
};

/// Masks the mixture (target plus interferers) with the ideal binary or
/// ratio mask computed from the separated spectrograms.
OracleMaskResult oracle_mask(OracleMaskKind kind, const dsp::ComplexSpectrogram& target,
                             std::span<const dsp::ComplexSpectrogram> interferers,
                             const dsp::StftConfig& cfg, std::size_t out_len);

std::string to_string(OracleMaskKind kind);

}  // namespace clearstream::metrics

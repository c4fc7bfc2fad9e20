// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>

#include "clearstream/pipeline.hpp"
#include "support.hpp"

namespace clearstream::testing {

inline WeightBundle with_zero_biases(const WeightBundle& w) {
  WeightBundle z;
  for (auto [name, rec] : w.records()) {
    if (name.ends_with(".b")) std::fill(rec.data.begin(), rec.data.end(), 0.0f);
    z.insert(std::move(rec));
  }
  return z;
}

inline double mask_density(const dsp::BinaryMask& m) {
  double on = 0;
  for (auto v : m.values) on += v;
  return on / static_cast<double>(m.values.size());
}

/// Random weights whose UNet output bias is shifted so that about half of
/// the mask is on for a noise window. Plain random UNets tend to saturate
/// to all-on or all-off masks, which would hide mask handling from the tests.
inline std::shared_ptr<const pipeline::Engines> balanced_engines(
    const pipeline::PipelineConfig& cfg, uint64_t seed) {
  WeightBundle w = random_init(pipeline::tensor_specs(cfg), seed);
  auto probe = noise(cfg.unet_window_samples(), derive_seed(seed, "probe"), 0.8);
  auto density_at = [&](float shift) {
    WeightBundle t;
    for (auto [name, rec] : w.records()) {
      if (name == "unet.out.b") rec.data[0] += shift;
      t.insert(std::move(rec));
    }
    pipeline::Engines e(t, cfg);
    return std::make_pair(mask_density(e.mel_mask(probe, pipeline::MaskOverride::kNone)),
                          std::move(t));
  };
  float lo = -50.0f, hi = 50.0f;
  for (int i = 0; i < 30; ++i) {
    const float mid = 0.5f * (lo + hi);
    if (density_at(mid).first < 0.5) lo = mid; else hi = mid;
  }
  return std::make_shared<const pipeline::Engines>(density_at(0.5f * (lo + hi)).second, cfg);
}

}  // namespace clearstream::testing

// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/syncsim.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

#include "clearstream/rng.hpp"

namespace clearstream::syncsim {
namespace {

int64_t circular(int64_t d) {
  const int64_t m = kTimerMax;
  d = ((d % m) + m) % m;
  return d >= m / 2 ? d - m : d;
}

enum class Kind { kReport, kBeaconTx, kBeaconRx };

struct Event {
  double t;
  uint64_t order;
  Kind kind;
  uint32_t payload = 0;  // primary timer at TX

  bool operator>(const Event& o) const { return t != o.t ? t > o.t : order > o.order; }
};

}  // namespace

uint32_t ClockModel::timer(double t) const {
  double v = std::fmod(std::floor(ticks(t)), static_cast<double>(kTimerMax));
  if (v < 0) v += kTimerMax;
  return static_cast<uint32_t>(v);
}

Correction RateEncoder::step(double diff_us) {
  if (diff_us >= static_cast<double>(multiple_ + 1) * kCaptureSampleUs) {
    ++multiple_;
    return Correction::kRemove;
  }
  if (diff_us <= static_cast<double>(multiple_ - 1) * kCaptureSampleUs) {
    --multiple_;
    return Correction::kInsert;
  }
  return Correction::kNone;
}

StartupDrop startup_align(uint32_t primary_tick, uint32_t secondary_tick) {
  if (primary_tick >= kTimerMax || secondary_tick >= kTimerMax)
    throw std::invalid_argument("start ticks must lie in [0, 800000)");
  // The receipts are close in time, so the shorter way round the dial tells
  // which node heard START first.
  const int64_t d = circular(static_cast<int64_t>(secondary_tick) - primary_tick);
  StartupDrop r;
  if (d > 0 && secondary_tick < primary_tick) r.primary = kWrapDropSamples;
  if (d < 0 && primary_tick < secondary_tick) r.secondary = kWrapDropSamples;
  return r;
}

void SimConfig::validate() const {
  if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");
  if (!(beacon_hz > 0)) throw std::invalid_argument("beacon rate must be positive");
  if (!(beacon_loss >= 0 && beacon_loss <= 1)) throw std::invalid_argument("beacon loss must be in [0, 1]");
  if (!(report_interval_s > 0)) throw std::invalid_argument("report interval must be positive");
  if (prop_delay_us < 0 || jitter_us < 0) throw std::invalid_argument("delays must be non-negative");
  if (std::abs(primary_ppm) >= 1e5 || std::abs(secondary_ppm) >= 1e5)
    throw std::invalid_argument("ppm offset out of range");
}

double drift_us_per_min(double primary_ppm, double secondary_ppm) {
  return std::abs(primary_ppm - secondary_ppm) * 60.0;
}

SyncSimReport run_sim(const SimConfig& cfg) {
  cfg.validate();
  const ClockModel primary{cfg.primary_ppm, 0.0};
  const ClockModel secondary{cfg.secondary_ppm, 0.0};
  const double tp = kCaptureSampleUs * 1e-6 / (1.0 + cfg.primary_ppm * 1e-6);
  const double ts = kCaptureSampleUs * 1e-6 / (1.0 + cfg.secondary_ppm * 1e-6);
  const double nominal_delay_ticks = cfg.prop_delay_us * 1e-6 * kTimerHz;

  Rng rng(derive_seed(cfg.seed, "syncsim"));
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  uint64_t order = 0;
  const auto reports = static_cast<uint64_t>(std::floor(cfg.duration_s / cfg.report_interval_s + 1e-9));
  for (uint64_t j = 0; j <= reports; ++j)
    queue.push({static_cast<double>(j) * cfg.report_interval_s, order++, Kind::kReport});
  if (cfg.sync) queue.push({0.0, order++, Kind::kBeaconTx});

  SyncSimReport rep;
  RateEncoder enc;
  long shift = 0;  // removes minus inserts on the secondary
  double diff_us = 0.0;
  int64_t last_raw = circular(static_cast<int64_t>(secondary.timer(0)) - primary.timer(0));
  uint64_t beacon_index = 0;

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    if (ev.t > cfg.duration_s) continue;
    switch (ev.kind) {
      case Kind::kBeaconTx: {
        ++rep.beacons_sent;
        if (rng.bernoulli(cfg.beacon_loss)) {
          ++rep.beacons_lost;
          rep.events.push_back({ev.t, "beacon_lost"});
        } else {
          const double jitter = cfg.jitter_us > 0 ? rng.uniform(-cfg.jitter_us, cfg.jitter_us) : 0.0;
          const double delay = std::max(0.0, cfg.prop_delay_us + jitter) * 1e-6;
          queue.push({ev.t + delay, order++, Kind::kBeaconRx, primary.timer(ev.t)});
        }
        ++beacon_index;
        const double next_local = static_cast<double>(beacon_index) / cfg.beacon_hz;
        queue.push({next_local / (1.0 + cfg.primary_ppm * 1e-6), order++, Kind::kBeaconTx});
        break;
      }
      case Kind::kBeaconRx: {
        const auto estimate = static_cast<int64_t>(std::llround(ev.payload + nominal_delay_ticks));
        const int64_t raw = circular(static_cast<int64_t>(secondary.timer(ev.t)) - estimate);
        diff_us += static_cast<double>(circular(raw - last_raw)) / (kTimerHz * 1e-6);
        last_raw = raw;
        for (;;) {
          const Correction c = enc.step(diff_us);
          if (c == Correction::kNone) break;
          if (c == Correction::kRemove) {
            ++shift;
            ++rep.removes;
            rep.events.push_back({ev.t, "remove"});
          } else {
            --shift;
            ++rep.inserts;
            rep.events.push_back({ev.t, "insert"});
          }
        }
        break;
      }
      case Kind::kReport: {
        const auto n = static_cast<long>(std::floor(ev.t / tp));
        const double err = (static_cast<double>(n) * (ts - tp) + static_cast<double>(shift) * ts) * 1e6;
        const long count_p = n + 1;
        const long count_s = static_cast<long>(std::floor(ev.t / ts)) + 1 - shift;
        TracePoint p{ev.t, err, std::lround(err / kOutputSampleUs), count_s - count_p};
        rep.trace.push_back(p);
        rep.max_error_us = std::max(rep.max_error_us, std::abs(err));
        rep.max_count_difference = std::max(rep.max_count_difference, std::abs(p.count_difference));
        break;
      }
    }
  }

  if (!rep.trace.empty()) rep.final_error_us = rep.trace.back().error_us;
  if (rep.trace.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : rep.trace) {
      const double x = p.t_s / 60.0;
      sx += x;
      sy += p.error_us;
      sxx += x * x;
      sxy += x * p.error_us;
    }
    const double n = static_cast<double>(rep.trace.size());
    const double den = n * sxx - sx * sx;
    if (den > 0) rep.slope_us_per_min = (n * sxy - sx * sy) / den;
  }
  return rep;
}

}  // namespace clearstream::syncsim

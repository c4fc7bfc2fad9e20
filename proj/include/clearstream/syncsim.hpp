// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Two-earbud clock synchronization: drifting 16 MHz timers that wrap at
// 800000 ticks, 200 Hz beacons from the primary, and 32 us rate encoding on
// the secondary's capture buffer.
namespace clearstream::syncsim {

inline constexpr double kTimerHz = 16e6;
inline constexpr uint32_t kTimerMax = 800000;
inline constexpr double kCaptureSampleUs = 32.0;
inline constexpr double kOutputSampleUs = 64.0;
inline constexpr int kWrapDropSamples = 781;  // 50 ms at 15625 Hz, truncated

struct ClockModel {
  double ppm = 0.0;
  double phase_ticks = 0.0;

  /// Local elapsed seconds at true time t.
  double local_seconds(double t) const { return (1.0 + ppm * 1e-6) * t; }
  double ticks(double t) const { return phase_ticks + local_seconds(t) * kTimerHz; }
  /// Hardware register value, in [0, 800000).
  uint32_t timer(double t) const;
};

enum class Correction { kNone, kInsert, kRemove };

class RateEncoder {
 public:
  /// One decision for the accumulated clock difference; call repeatedly
  /// until kNone to catch up on several multiples.
  Correction step(double diff_us);
  long multiple() const { return multiple_; }

 private:
  long multiple_ = 0;
};

struct StartupDrop {
  int primary = 0;
  int secondary = 0;
};

/// Each node starts capture at its next timer wrap after receiving START;
/// if the two receipt ticks straddle a wrap, the earlier one drops 781.
/// Throws std::invalid_argument for ticks outside [0, 800000).
StartupDrop startup_align(uint32_t primary_tick, uint32_t secondary_tick);

struct SimConfig {
  double primary_ppm = 20.0;
  double secondary_ppm = -20.0;
  double duration_s = 60.0;
  bool sync = true;
  double beacon_hz = 200.0;
  double beacon_loss = 0.0;
  double prop_delay_us = 5.0;
  double jitter_us = 0.0;  // uniform in [-j, j], added to the propagation delay
  double report_interval_s = 0.1;
  uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct TracePoint {
  double t_s = 0;
  double error_us = 0;
  long error_samples = 0;    // at the 15625 Hz output rate
  long count_difference = 0;  // buffered samples, secondary minus primary
};

struct SimEvent {
  double t_s = 0;
  std::string kind;  // beacon_lost, insert, remove
};

struct SyncSimReport {
  std::vector<TracePoint> trace;
  std::vector<SimEvent> events;
  double max_error_us = 0;
  double final_error_us = 0;
  double slope_us_per_min = 0;  // least-squares fit over the trace
  long max_count_difference = 0;
  uint64_t beacons_sent = 0;
  uint64_t beacons_lost = 0;
  uint64_t inserts = 0;
  uint64_t removes = 0;
};

SyncSimReport run_sim(const SimConfig& cfg);

/// Analytic unsynchronized drift, in us per minute.
double drift_us_per_min(double primary_ppm, double secondary_ppm);

}  // namespace clearstream::syncsim

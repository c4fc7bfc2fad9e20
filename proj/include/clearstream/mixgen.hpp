// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clearstream/audio.hpp"
#include "clearstream/metrics.hpp"

// Synthetic binaural mixtures: shoebox rooms simulated with image sources,
// two free-field microphones at ear spacing, and SI-SDR-controlled mixing.
//
// Coordinates are meters with the origin at a room corner. The array sits at
// the room's horizontal center at ear height; the wearer faces +y and the
// right ear is at +x. Azimuth is measured from +y towards +x.
namespace clearstream::mixgen {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr int kSincTaps = 81;
inline constexpr int kMaxOrderCap = 10;
inline constexpr double kEarHeight = 1.6;
inline constexpr double kDefaultSpacing = 0.175;
/// Mouth relative to the array center.
inline constexpr Vec3 kMouthOffset{0.0, 0.10, -0.10};
/// Closest any source may come to a wall.
inline constexpr double kWallMargin = 0.25;

double distance(const Vec3& a, const Vec3& b);

struct RoomSpec {
  Vec3 dims{10.0, 10.0, 10.0};
  double rt60 = 0.5;
  double speed_of_sound = kSpeedOfSound;

  void validate() const;  // throws std::invalid_argument
  bool contains(const Vec3& p) const;  // strictly inside
};

/// Uniform wall absorption from Sabine's formula, clamped to 1 (anechoic).
double sabine_absorption(const RoomSpec& room);
/// Pressure reflection coefficient sqrt(1 - alpha).
double reflection_coefficient(const RoomSpec& room);
/// ceil(rt60 * c / shortest side), at most 10.
int default_max_order(const RoomSpec& room);

struct Rir {
  std::vector<double> taps;
  int max_order = 0;
  double direct_delay = 0;  // samples
  std::size_t images = 0;
};

/// Throws std::invalid_argument when either point is not strictly inside.
Rir compute_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic, int max_order,
                int sample_rate = kSampleRate);

/// Full convolution of a mono signal with the left and right responses.
WaveBuffer render_binaural(std::span<const double> dry, const Rir& left, const Rir& right);

struct Placement {
  Vec3 array_center{};
  double mic_spacing = kDefaultSpacing;
  Vec3 target{};
  Vec3 interferer{};
  double interferer_azimuth_deg = 0;
  double interferer_distance = 0;
  Vec3 background{};

  Vec3 left_mic() const { return {array_center[0] - mic_spacing / 2, array_center[1], array_center[2]}; }
  Vec3 right_mic() const { return {array_center[0] + mic_spacing / 2, array_center[1], array_center[2]}; }
};

/// Array at the room center, mouth in front of it, interferer in the
/// horizontal plane at the given azimuth. The interferer distance is cut
/// back if needed to keep kWallMargin from every wall.
Placement place_sources(const RoomSpec& room, double mic_spacing, double azimuth_deg,
                        double distance, const Vec3& background);

/// Left-minus-right direct-path arrival difference, in samples.
double interaural_delay(const Placement& p, const Vec3& src, double c = kSpeedOfSound,
                        int sample_rate = kSampleRate);

/// Lag maximizing sum left[n] * right[n - lag]; positive when the sound
/// reaches the right ear first, matching interaural_delay.
int measured_interaural_lag(std::span<const double> left, std::span<const double> right, int max_lag);

// ---- corpus ---------------------------------------------------------------

struct Corpus {
  std::vector<std::vector<double>> speech;
  std::vector<std::vector<double>> noise;

  bool empty() const { return speech.empty(); }

  /// Harmonic, syllable-modulated tones standing in for voices, plus
  /// colored noise for backgrounds. Deterministic for a seed.
  static Corpus tones(uint64_t seed = 1, int voices = 16, int noises = 4, double seconds = 4.0);
  /// Mono (or downmixed) WAVs at 15625 Hz from two directories; the noise
  /// directory may be empty. Throws std::invalid_argument when no speech is found.
  static Corpus from_dirs(const std::filesystem::path& speech_dir,
                          const std::filesystem::path& noise_dir = {});
};

// ---- mixtures -------------------------------------------------------------

struct MixConfig {
  double duration_s = 3.0;
  double mic_spacing = kDefaultSpacing;
  std::optional<Vec3> dims;             // uniform in [5, 20] per side when unset
  std::optional<double> rt60;           // uniform in [0, 1] when unset
  std::optional<double> azimuth_deg;    // uniform in [0, 360) when unset
  std::optional<double> distance;       // uniform in [1, 5] when unset
  std::optional<int> max_order;         // default_max_order when unset
  bool interferer = true;
  bool background = true;
  double background_db = -10.0;  // background level relative to the interferer
  double si_sdr_lo = -5.0, si_sdr_hi = 5.0;

  void validate() const;
};

struct MixtureMeta {
  uint64_t seed = 0;
  int sample_rate = kSampleRate;
  double duration_s = 0;
  RoomSpec room;
  double absorption = 0;
  int max_order = 0;
  Placement placement;
  std::size_t target_clip = 0, interferer_clip = 0, background_clip = 0;
  double requested_si_sdr_db = 0;
  double input_si_sdr_db = 0;  // left channel against the left ground truth
  double interferer_gain = 0, background_gain = 0, output_scale = 1;
};

struct MixtureBundle {
  WaveBuffer mixture;       // stereo
  WaveBuffer ground_truth;  // stereo, reverberant target at the mics
  std::vector<std::pair<std::string, WaveBuffer>> stems;  // target first
  MixtureMeta meta;
};

/// Throws std::invalid_argument on an empty corpus or bad config.
MixtureBundle make_mixture(uint64_t seed, const Corpus& corpus, const MixConfig& cfg = {});

std::string meta_json(const MixtureMeta& meta);

/// <dir>/mixture.wav, gt.wav, stems/<name>.wav (32-bit float) and meta.json.
void write_bundle(const std::filesystem::path& dir, const MixtureBundle& b);
/// Reads a bundle written by write_bundle; meta is left default except the seed.
MixtureBundle read_bundle(const std::filesystem::path& dir);

// ---- sweeps ---------------------------------------------------------------

enum class SweepKind { kAngle, kRt60, kSpacing };

SweepKind parse_sweep_kind(const std::string& s);
std::string to_string(SweepKind k);
std::vector<double> default_grid(SweepKind k);

/// Mono estimate of the left ground-truth channel.
using Estimator = std::function<std::vector<double>(const MixtureBundle&)>;

/// Oracle mask on the left channel from the bundle's stems.
Estimator oracle_estimator(metrics::OracleMaskKind kind);

struct SweepRow {
  double value = 0;
  int trial = 0;
  uint64_t seed = 0;
  metrics::SiSdrReport score;
  double interferer_delay = 0;  // samples
};

/// Mixtures that differ only in the swept parameter. Throws on an empty grid.
/// jobs > 1 spreads trials over threads; results do not depend on it.
std::vector<SweepRow> sweep(SweepKind kind, std::span<const double> grid, int trials, uint64_t seed,
                            const Corpus& corpus, const MixConfig& base, const Estimator& estimate,
                            int jobs = 1);

void write_sweep_csv(std::ostream& out, SweepKind kind, std::span<const SweepRow> rows);

}  // namespace clearstream::mixgen

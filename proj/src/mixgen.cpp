// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/mixgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "clearstream/dsp.hpp"
#include "clearstream/fft.hpp"
#include "clearstream/rng.hpp"

namespace clearstream::mixgen {
namespace {

using std::numbers::pi;

struct Image {
  double delay;  // samples
  double gain;
};

void add_fractional_impulse(std::vector<double>& h, double tau, double gain) {
  const double half = kSincTaps / 2.0;
  const long lo = static_cast<long>(std::ceil(tau - half));
  const long hi = static_cast<long>(std::floor(tau + half));
  for (long n = std::max(lo, 0L); n <= hi; ++n) {
    const double x = static_cast<double>(n) - tau;
    if (std::abs(x) >= half) continue;
    const double w = 0.5 * (1.0 + std::cos(2.0 * pi * x / kSincTaps));
    const double s = x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x);
    h[static_cast<std::size_t>(n)] += gain * w * s;
  }
}

double rms(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return x.empty() ? 0.0 : std::sqrt(e / static_cast<double>(x.size()));
}

std::vector<double> unit_rms(std::vector<double> x) {
  const double r = rms(x);
  if (r > 0)
    for (double& v : x) v /= r;
  return x;
}

// n samples from a clip starting at a random offset; short clips repeat.
std::vector<double> excerpt(const std::vector<double>& clip, std::size_t n, double u) {
  std::vector<double> out(n);
  if (clip.empty()) return out;
  const std::size_t span = clip.size() >= n ? clip.size() - n + 1 : clip.size();
  const auto start = std::min(span - 1, static_cast<std::size_t>(u * static_cast<double>(span)));
  for (std::size_t i = 0; i < n; ++i) out[i] = clip[(start + i) % clip.size()];
  return out;
}

WaveBuffer truncated(WaveBuffer w, std::size_t n) {
  for (auto& c : w.channels) c.resize(n, 0.0);
  return w;
}

nlohmann::ordered_json vec_json(const Vec3& v) { return {v[0], v[1], v[2]}; }

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

void RoomSpec::validate() const {
  for (double d : dims)
    if (!(d > 0) || !std::isfinite(d)) throw std::invalid_argument("room dimensions must be positive");
  if (!(rt60 >= 0) || !std::isfinite(rt60)) throw std::invalid_argument("rt60 must be non-negative");
  if (!(speed_of_sound > 0)) throw std::invalid_argument("speed of sound must be positive");
}

bool RoomSpec::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a)
    if (!(p[a] > 0.0 && p[a] < dims[a])) return false;
  return true;
}

double sabine_absorption(const RoomSpec& room) {
  room.validate();
  if (room.rt60 == 0.0) return 1.0;
  const auto& d = room.dims;
  const double volume = d[0] * d[1] * d[2];
  const double surface = 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  return std::min(1.0, 0.161 * volume / (surface * room.rt60));
}

double reflection_coefficient(const RoomSpec& room) {
  return std::sqrt(1.0 - sabine_absorption(room));
}

int default_max_order(const RoomSpec& room) {
  room.validate();
  const double shortest = *std::min_element(room.dims.begin(), room.dims.end());
  return std::min(kMaxOrderCap, static_cast<int>(std::ceil(room.rt60 * room.speed_of_sound / shortest)));
}

Rir compute_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic, int max_order,
                int sample_rate) {
  room.validate();
  if (!room.contains(src)) throw std::invalid_argument("source lies outside the room");
  if (!room.contains(mic)) throw std::invalid_argument("microphone lies outside the room");
  if (max_order < 0) throw std::invalid_argument("max_order must be non-negative");
  const double beta = reflection_coefficient(room);
  const double per_meter = sample_rate / room.speed_of_sound;

  Rir rir;
  rir.max_order = max_order;
  std::vector<Image> images;
  double longest = 0;
  const int m_max = (max_order + 1) / 2;
  for (int px = 0; px <= 1; ++px)
    for (int py = 0; py <= 1; ++py)
      for (int pz = 0; pz <= 1; ++pz)
        for (int mx = -m_max; mx <= m_max; ++mx)
          for (int my = -m_max; my <= m_max; ++my)
            for (int mz = -m_max; mz <= m_max; ++mz) {
              const int order = std::abs(2 * mx - px) + std::abs(2 * my - py) + std::abs(2 * mz - pz);
              if (order > max_order) continue;
              if (order > 0 && beta == 0.0) continue;
              const int p[3] = {px, py, pz}, m[3] = {mx, my, mz};
              Vec3 img;
              for (int a = 0; a < 3; ++a) img[a] = (1 - 2 * p[a]) * src[a] + 2.0 * m[a] * room.dims[a];
              const double d = distance(img, mic);
              const double tau = d * per_meter;
              images.push_back({tau, std::pow(beta, order) / (4.0 * pi * d)});
              if (order == 0) rir.direct_delay = tau;
              longest = std::max(longest, tau);
            }
  rir.images = images.size();
  rir.taps.assign(static_cast<std::size_t>(std::floor(longest + kSincTaps / 2.0)) + 1, 0.0);
  for (const auto& im : images) add_fractional_impulse(rir.taps, im.delay, im.gain);
  return rir;
}

WaveBuffer render_binaural(std::span<const double> dry, const Rir& left, const Rir& right) {
  return WaveBuffer::stereo(fft::convolve(dry, left.taps), fft::convolve(dry, right.taps));
}

Placement place_sources(const RoomSpec& room, double mic_spacing, double azimuth_deg,
                        double dist, const Vec3& background) {
  room.validate();
  if (!(mic_spacing > 0)) throw std::invalid_argument("mic spacing must be positive");
  if (!(dist > 0)) throw std::invalid_argument("interferer distance must be positive");
  Placement p;
  p.mic_spacing = mic_spacing;
  p.array_center = {room.dims[0] / 2, room.dims[1] / 2, kEarHeight};
  for (int a = 0; a < 3; ++a) {
    const double lo = p.array_center[a] + std::min(0.0, kMouthOffset[a]) - mic_spacing;
    const double hi = p.array_center[a] + std::max(0.0, kMouthOffset[a]) + mic_spacing;
    if (lo < kWallMargin || hi > room.dims[a] - kWallMargin)
      throw std::invalid_argument("room too small for the listener");
  }
  for (int a = 0; a < 3; ++a) p.target[a] = p.array_center[a] + kMouthOffset[a];

  const double az = azimuth_deg * pi / 180.0;
  const double u[2] = {std::sin(az), std::cos(az)};
  double reach = dist;
  for (int a = 0; a < 2; ++a) {
    if (std::abs(u[a]) < 1e-12) continue;
    const double bound = u[a] > 0 ? room.dims[a] - kWallMargin : kWallMargin;
    reach = std::min(reach, (bound - p.array_center[a]) / u[a]);
  }
  p.interferer_azimuth_deg = azimuth_deg;
  p.interferer_distance = reach;
  p.interferer = {p.array_center[0] + reach * u[0], p.array_center[1] + reach * u[1], kEarHeight};
  if (!room.contains(background)) throw std::invalid_argument("background source lies outside the room");
  p.background = background;
  return p;
}

double interaural_delay(const Placement& p, const Vec3& src, double c, int sample_rate) {
  return (distance(src, p.left_mic()) - distance(src, p.right_mic())) / c * sample_rate;
}

int measured_interaural_lag(std::span<const double> left, std::span<const double> right, int max_lag) {
  const auto r = fft::cross_correlation(left, right, max_lag);
  const auto best = std::max_element(r.begin(), r.end());
  return static_cast<int>(best - r.begin()) - max_lag;
}

// ---- corpus ---------------------------------------------------------------

Corpus Corpus::tones(uint64_t seed, int voices, int noises, double seconds) {
  if (voices < 1 || noises < 0 || !(seconds > 0)) throw std::invalid_argument("bad tone corpus size");
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  const double fs = kSampleRate;
  Corpus c;
  for (int v = 0; v < voices; ++v) {
    Rng rng(derive_seed(seed, "voice" + std::to_string(v)));
    const double f0 = rng.uniform(95.0, 260.0);
    const double vib_rate = rng.uniform(3.0, 6.0), vib_depth = rng.uniform(0.01, 0.04);
    const double glide = rng.uniform(-0.15, 0.15);  // relative pitch change over the clip
    const double formant[2] = {rng.uniform(400.0, 1000.0), rng.uniform(1200.0, 2600.0)};
    const int harmonics = std::max(1, static_cast<int>(3500.0 / (f0 * 1.2)));
    std::vector<double> amp(harmonics), phase(harmonics);
    for (int k = 0; k < harmonics; ++k) {
      const double f = (k + 1) * f0;
      double a = 0.3 / (k + 1);
      for (double fm : formant) a += std::exp(-0.5 * std::pow((f - fm) / 150.0, 2.0));
      amp[k] = a;
      phase[k] = rng.uniform(0.0, 2 * pi);
    }
    // Syllables: raised-cosine voiced bursts separated by short pauses, some
    // led by an unvoiced (high-passed noise) onset.
    std::vector<double> env(n, 0.0), fric(n, 0.0);
    for (double t = rng.uniform(0.0, 0.1); t < seconds;) {
      const double len = rng.uniform(0.12, 0.35), gap = rng.uniform(0.03, 0.15);
      const double level = rng.uniform(0.5, 1.0);
      if (rng.bernoulli(0.5)) {
        const double flen = rng.uniform(0.04, 0.10);
        const auto a = static_cast<std::size_t>(std::max(0.0, t - flen) * fs);
        const auto b = std::min(n, static_cast<std::size_t>(t * fs));
        for (std::size_t i = a; i < b; ++i)
          fric[i] = 0.6 * level * std::sin(pi * static_cast<double>(i - a) / static_cast<double>(b - a));
      }
      const auto a = static_cast<std::size_t>(t * fs), b = std::min(n, static_cast<std::size_t>((t + len) * fs));
      for (std::size_t i = a; i < b; ++i)
        env[i] = level * 0.5 * (1.0 - std::cos(2 * pi * static_cast<double>(i - a) / static_cast<double>(b - a)));
      t += len + gap;
    }
    std::vector<double> x(n, 0.0);
    double theta = 0;  // fundamental phase
    double prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double f = f0 * (1.0 + glide * t / seconds) * (1.0 + vib_depth * std::sin(2 * pi * vib_rate * t));
      theta += 2 * pi * f / fs;
      const double w = rng.normal();
      const double hiss = w - prev;  // first difference tilts white noise upwards
      prev = w;
      double s = 0;
      if (env[i] != 0.0)
        for (int k = 0; k < harmonics; ++k) s += amp[k] * std::sin((k + 1) * theta + phase[k]);
      x[i] = env[i] * (s + 0.1 * hiss) + fric[i] * hiss;
    }
    c.speech.push_back(unit_rms(std::move(x)));
  }
  for (int k = 0; k < noises; ++k) {
    Rng rng(derive_seed(seed, "noise" + std::to_string(k)));
    const double pole = rng.uniform(0.5, 0.97);
    std::vector<double> x(n);
    double y = 0;
    for (auto& v : x) {
      y = pole * y + rng.normal();
      v = y;
    }
    c.noise.push_back(unit_rms(std::move(x)));
  }
  return c;
}

Corpus Corpus::from_dirs(const std::filesystem::path& speech_dir,
                         const std::filesystem::path& noise_dir) {
  auto load = [](const std::filesystem::path& dir) {
    std::vector<std::vector<double>> out;
    if (dir.empty()) return out;
    if (!std::filesystem::is_directory(dir))
      throw std::invalid_argument("corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      WaveBuffer w = read_wav(f);
      if (w.sample_rate == kCaptureRate) {
        for (auto& ch : w.channels)
          if (ch.size() % 2) ch.push_back(0.0);
        w = dsp::decimate_by_2(w);
      }
      if (w.sample_rate != kSampleRate)
        throw std::invalid_argument(f.string() + ": corpus audio must be 15625 or 31250 Hz");
      std::vector<double> mono(w.length(), 0.0);
      for (const auto& ch : w.channels)
        for (std::size_t i = 0; i < mono.size(); ++i) mono[i] += ch[i] / static_cast<double>(w.num_channels());
      if (rms(mono) > 0) out.push_back(unit_rms(std::move(mono)));
    }
    return out;
  };
  Corpus c;
  c.speech = load(speech_dir);
  c.noise = load(noise_dir);
  if (c.speech.empty()) throw std::invalid_argument("no speech WAVs in " + speech_dir.string());
  return c;
}

// ---- mixtures -------------------------------------------------------------

void MixConfig::validate() const {
  if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");
  if (!(mic_spacing > 0)) throw std::invalid_argument("mic spacing must be positive");
  if (!(si_sdr_lo <= si_sdr_hi)) throw std::invalid_argument("empty SI-SDR range");
  if (rt60 && !(*rt60 >= 0)) throw std::invalid_argument("rt60 must be non-negative");
  if (distance && !(*distance > 0)) throw std::invalid_argument("distance must be positive");
  if (max_order && *max_order < 0) throw std::invalid_argument("max_order must be non-negative");
}

MixtureBundle make_mixture(uint64_t seed, const Corpus& corpus, const MixConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("empty source corpus");
  Rng rng(derive_seed(seed, "mixture"));
  // Every draw happens regardless of overrides so that two configs differing
  // in one field share all the other random choices.
  Vec3 dims;
  for (double& d : dims) d = rng.uniform(5.0, 20.0);
  const double rt60 = rng.uniform(0.0, 1.0);
  const double azimuth = rng.uniform(0.0, 360.0);
  const double dist = rng.uniform(1.0, 5.0);
  const std::size_t target_clip = rng.below(corpus.speech.size());
  std::size_t interferer_clip = rng.below(corpus.speech.size());
  if (corpus.speech.size() > 1 && interferer_clip == target_clip)
    interferer_clip = (interferer_clip + 1) % corpus.speech.size();
  const std::size_t background_clip = rng.below(std::max<std::size_t>(1, corpus.noise.size()));
  const double offsets[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
  const double bg_u[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
  const double requested = rng.uniform(cfg.si_sdr_lo, cfg.si_sdr_hi);

  MixtureMeta meta;
  meta.seed = seed;
  meta.duration_s = cfg.duration_s;
  meta.room.dims = cfg.dims.value_or(dims);
  meta.room.rt60 = cfg.rt60.value_or(rt60);
  meta.absorption = sabine_absorption(meta.room);
  meta.max_order = cfg.max_order.value_or(default_max_order(meta.room));
  Vec3 bg;
  for (int a = 0; a < 3; ++a) bg[a] = kWallMargin + bg_u[a] * (meta.room.dims[a] - 2 * kWallMargin);
  meta.placement = place_sources(meta.room, cfg.mic_spacing, cfg.azimuth_deg.value_or(azimuth),
                                 cfg.distance.value_or(dist), bg);
  meta.target_clip = target_clip;
  meta.interferer_clip = interferer_clip;
  meta.background_clip = background_clip;
  meta.requested_si_sdr_db = requested;

  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * kSampleRate));
  const auto& P = meta.placement;
  auto render = [&](const std::vector<double>& dry, const Vec3& src) {
    const Rir l = compute_rir(meta.room, src, P.left_mic(), meta.max_order);
    const Rir r = compute_rir(meta.room, src, P.right_mic(), meta.max_order);
    return truncated(render_binaural(dry, l, r), n);
  };

  WaveBuffer target = render(excerpt(corpus.speech[target_clip], n, offsets[0]), P.target);
  const WaveBuffer silent = WaveBuffer::stereo(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
  WaveBuffer inter = cfg.interferer ? render(excerpt(corpus.speech[interferer_clip], n, offsets[1]), P.interferer)
                                    : silent;
  const bool use_bg = cfg.background && !corpus.noise.empty();
  WaveBuffer back = use_bg ? render(excerpt(corpus.noise[background_clip], n, offsets[2]), P.background) : silent;

  // Background level is tied to the interferer (or stands alone without one).
  const double inter_rms = rms(inter.channels[0]);
  const double back_rms = rms(back.channels[0]);
  double bg_rel = 0;
  if (back_rms > 0)
    bg_rel = (inter_rms > 0 ? inter_rms : 1.0) * std::pow(10.0, cfg.background_db / 20.0) / back_rms;

  std::vector<double> noise_l(n);
  for (std::size_t i = 0; i < n; ++i) noise_l[i] = inter.channels[0][i] + bg_rel * back.channels[0][i];

  double g = 0;
  const auto& gt_l = target.channels[0];
  if (rms(noise_l) > 0) {
    auto score = [&](double x) {
      std::vector<double> m(n);
      const double gain = std::pow(10.0, x);
      for (std::size_t i = 0; i < n; ++i) m[i] = gt_l[i] + gain * noise_l[i];
      return metrics::si_sdr(gt_l, m);
    };
    double lo = -8, hi = 8;  // log10 gain; SI-SDR falls as the gain grows
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (score(mid) > requested ? lo : hi) = mid;
    }
    g = std::pow(10.0, 0.5 * (lo + hi));
  }

  double peak = 0;
  std::vector<std::vector<double>> mix(2, std::vector<double>(n));
  for (int ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < n; ++i) {
      const double v = target.channels[ch][i] + g * inter.channels[ch][i] + g * bg_rel * back.channels[ch][i];
      peak = std::max(peak, std::abs(v));
    }
  const double scale = peak > 0.9 ? 0.9 / peak : 1.0;
  meta.interferer_gain = g * scale;
  meta.background_gain = g * bg_rel * scale;
  meta.output_scale = scale;

  MixtureBundle b;
  auto scaled = [n](const WaveBuffer& w, double k) {
    WaveBuffer out = w;
    for (auto& c : out.channels)
      for (std::size_t i = 0; i < n; ++i) c[i] *= k;
    return out;
  };
  b.stems.emplace_back("target", scaled(target, scale));
  if (cfg.interferer) b.stems.emplace_back("interferer", scaled(inter, meta.interferer_gain));
  if (use_bg) b.stems.emplace_back("background", scaled(back, meta.background_gain));
  b.ground_truth = b.stems.front().second;
  b.mixture = silent;
  for (int ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0;
      for (const auto& s : b.stems) v += s.second.channels[ch][i];
      b.mixture.channels[ch][i] = v;
    }
  meta.input_si_sdr_db = metrics::si_sdr(b.ground_truth.channels[0], b.mixture.channels[0]);
  b.meta = meta;
  return b;
}

std::string meta_json(const MixtureMeta& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["sample_rate"] = m.sample_rate;
  j["duration_s"] = m.duration_s;
  j["room"] = {{"dims_m", vec_json(m.room.dims)},
               {"rt60_s", m.room.rt60},
               {"speed_of_sound", m.room.speed_of_sound},
               {"absorption", m.absorption},
               {"max_order", m.max_order}};
  const auto& p = m.placement;
  j["placement"] = {{"array_center", vec_json(p.array_center)},
                    {"mic_spacing_m", p.mic_spacing},
                    {"left_mic", vec_json(p.left_mic())},
                    {"right_mic", vec_json(p.right_mic())},
                    {"target", vec_json(p.target)},
                    {"interferer", vec_json(p.interferer)},
                    {"interferer_azimuth_deg", p.interferer_azimuth_deg},
                    {"interferer_distance_m", p.interferer_distance},
                    {"azimuth_distribution", "uniform, horizontal plane at ear height"},
                    {"background", vec_json(p.background)}};
  j["clips"] = {{"target", m.target_clip}, {"interferer", m.interferer_clip}, {"background", m.background_clip}};
  j["gains"] = {{"interferer", m.interferer_gain}, {"background", m.background_gain}, {"output_scale", m.output_scale}};
  j["requested_si_sdr_db"] = m.requested_si_sdr_db;
  j["input_si_sdr_db"] = m.input_si_sdr_db;
  j["si_sdr_reference"] = "left channel";
  return j.dump(2) + "\n";
}

void write_bundle(const std::filesystem::path& dir, const MixtureBundle& b) {
  std::filesystem::create_directories(dir / "stems");
  write_wav(dir / "mixture.wav", b.mixture, WavSampleFormat::kFloat32);
  write_wav(dir / "gt.wav", b.ground_truth, WavSampleFormat::kFloat32);
  for (const auto& [name, w] : b.stems) write_wav(dir / "stems" / (name + ".wav"), w, WavSampleFormat::kFloat32);
  std::ofstream(dir / "meta.json") << meta_json(b.meta);
}

MixtureBundle read_bundle(const std::filesystem::path& dir) {
  MixtureBundle b;
  b.mixture = read_wav(dir / "mixture.wav");
  b.ground_truth = read_wav(dir / "gt.wav");
  for (const char* name : {"target", "interferer", "background"}) {
    const auto path = dir / "stems" / (std::string(name) + ".wav");
    if (std::filesystem::exists(path)) b.stems.emplace_back(name, read_wav(path));
  }
  if (b.mixture.num_channels() != 2 || b.ground_truth.num_channels() != 2 ||
      b.mixture.length() != b.ground_truth.length())
    throw std::invalid_argument(dir.string() + ": mixture and ground truth must be stereo and equal length");
  std::ifstream meta(dir / "meta.json");
  if (meta) {
    const auto j = nlohmann::json::parse(meta, nullptr, false);
    if (!j.is_discarded() && j.contains("seed")) b.meta.seed = j["seed"].get<uint64_t>();
    if (!j.is_discarded() && j.contains("input_si_sdr_db")) b.meta.input_si_sdr_db = j["input_si_sdr_db"];
  }
  b.meta.duration_s = static_cast<double>(b.mixture.length()) / b.mixture.sample_rate;
  return b;
}

// ---- sweeps ---------------------------------------------------------------

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "angle") return SweepKind::kAngle;
  if (s == "rt60") return SweepKind::kRt60;
  if (s == "spacing") return SweepKind::kSpacing;
  throw std::invalid_argument("unknown sweep kind '" + s + "' (angle, rt60, spacing)");
}

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kAngle: return "angle";
    case SweepKind::kRt60: return "rt60";
    case SweepKind::kSpacing: return "spacing";
  }
  return "?";
}

std::vector<double> default_grid(SweepKind k) {
  std::vector<double> g;
  switch (k) {
    case SweepKind::kAngle:
      for (int a = 0; a <= 180; a += 15) g.push_back(a);
      break;
    case SweepKind::kRt60:
      for (int i = 0; i <= 8; ++i) g.push_back(0.5 * i);
      break;
    case SweepKind::kSpacing:
      for (int i = 0; i <= 6; ++i) g.push_back(0.10 + 0.025 * i);
      break;
  }
  return g;
}

Estimator oracle_estimator(metrics::OracleMaskKind kind) {
  return [kind](const MixtureBundle& b) {
    // Leading zeros keep the masked iSTFT away from the first frame's
    // vanishing window, where inconsistent spectra would be amplified.
    const dsp::StftConfig cfg;
    const std::size_t pad = static_cast<std::size_t>(cfg.win_len);
    auto padded_stft = [&](const std::vector<double>& x) {
      std::vector<double> p(pad, 0.0);
      p.insert(p.end(), x.begin(), x.end());
      return dsp::stft(std::span<const double>(p), cfg);
    };
    const auto target = padded_stft(b.ground_truth.channels[0]);
    std::vector<dsp::ComplexSpectrogram> others;
    for (std::size_t i = 1; i < b.stems.size(); ++i) others.push_back(padded_stft(b.stems[i].second.channels[0]));
    auto est = metrics::oracle_mask(kind, target, others, cfg, b.mixture.length() + pad).estimate;
    return std::vector<double>(est.begin() + static_cast<long>(pad), est.end());
  };
}

std::vector<SweepRow> sweep(SweepKind kind, std::span<const double> grid, int trials, uint64_t seed,
                            const Corpus& corpus, const MixConfig& base, const Estimator& estimate,
                            int jobs) {
  if (grid.empty()) throw std::invalid_argument("empty sweep grid");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  const long total = static_cast<long>(grid.size()) * trials;
  std::vector<SweepRow> rows(static_cast<std::size_t>(total));
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (long idx = 0; idx < total; ++idx) {
    try {
      SweepRow& row = rows[static_cast<std::size_t>(idx)];
      row.value = grid[static_cast<std::size_t>(idx / trials)];
      row.trial = static_cast<int>(idx % trials);
      row.seed = derive_seed(seed, "trial" + std::to_string(row.trial));
      MixConfig cfg = base;
      switch (kind) {
        case SweepKind::kAngle: cfg.azimuth_deg = row.value; break;
        case SweepKind::kRt60: cfg.rt60 = row.value; break;
        case SweepKind::kSpacing: cfg.mic_spacing = row.value; break;
      }
      const auto b = make_mixture(row.seed, corpus, cfg);
      const auto est = estimate(b);
      row.score = metrics::si_sdr_improvement(b.ground_truth.channels[0], b.mixture.channels[0], est);
      row.interferer_delay = interaural_delay(b.meta.placement, b.meta.placement.interferer);
    } catch (const std::exception& e) {
#pragma omp critical
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("sweep failed: " + error);
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepKind kind, std::span<const SweepRow> rows) {
  out << "kind,value,trial,seed,input_si_sdr_db,output_si_sdr_db,si_sdri_db,interferer_itd_samples\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6g,%d,%llu,%.6f,%.6f,%.6f,%.4f\n", to_string(kind).c_str(), r.value,
                  r.trial, static_cast<unsigned long long>(r.seed), r.score.input_si_sdr, r.score.output_si_sdr,
                  r.score.improvement, r.interferer_delay);
    out << buf;
  }
}

}  // namespace clearstream::mixgen

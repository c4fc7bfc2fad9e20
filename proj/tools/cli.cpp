// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clearstream/metrics.hpp"
#include "clearstream/rng.hpp"
#include "clearstream/wire.hpp"

namespace clearstream::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Common {
  std::string out;
  std::string config;
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool verbose = false;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool verbose = false;

  void log(const std::string& msg) const {
    if (verbose) err << msg << '\n';
  }
};

void add_common(CLI::App* sub, Common& c, bool jobs) {
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--seed", c.seed, "Seed (falls back to CLEARSTREAM_SEED)");
  if (jobs) sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::Range(1, 256));
  sub->add_flag("-v,--verbose", c.verbose, "Progress on stderr");
}

Config config_for(const Common& c) { return c.config.empty() ? Config{} : load_config(c.config); }

fs::path prepare_out(const Common& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + c.out);
  return dir;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::is_regular_file(path))
    throw UsageError(std::string(what) + " not found: " + (path.empty() ? "(none)" : path));
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Json latency_json(const pipeline::LatencyBudget& b) {
  const auto r = pipeline::latency_total(b);
  Json j;
  j["pcm_buffer_ms"] = b.pcm_buffer_ms;
  j["ble_interval_ms"] = b.ble_interval_ms;
  j["buffering_ms"] = b.buffering_ms;
  j["inference_ms"] = b.inference_ms;
  j["total_ms"] = r.total_ms;
  j["total_rounded_ms"] = r.total_rounded;
  j["allowance_ms"] = r.allowance_ms;
  j["allowance_rounded_ms"] = r.allowance_rounded;
  j["bound_ms"] = b.bound_ms;
  j["over_budget"] = r.over_budget;
  return j;
}

Json flops_json(const pipeline::PipelineConfig& cfg) {
  Json j;
  j["tcn_cached"] = tcn::flop_count(cfg.tcn, tcn::Mode::kCached);
  j["tcn_uncached"] = tcn::flop_count(cfg.tcn, tcn::Mode::kUncached);
  j["unet"] = unet::flop_count(cfg.unet);
  j["total_cached"] = tcn::flop_count(cfg.tcn, tcn::Mode::kCached) + unet::flop_count(cfg.unet);
  return j;
}

std::shared_ptr<const pipeline::Engines> load_engines(const std::string& path,
                                                      const pipeline::PipelineConfig& cfg) {
  require_file(path, "weights file");
  return std::make_shared<const pipeline::Engines>(load_weights_file(path), cfg);
}

mixgen::Corpus corpus_for(bool tones, const std::string& speech, const std::string& noise,
                          uint64_t seed) {
  if (!speech.empty()) {
    if (!fs::is_directory(speech)) throw UsageError("speech directory not found: " + speech);
    if (!noise.empty() && !fs::is_directory(noise)) throw UsageError("noise directory not found: " + noise);
    return mixgen::Corpus::from_dirs(speech, noise);
  }
  if (!tones) throw UsageError("no corpus: pass --tones or --speech DIR");
  return mixgen::Corpus::tones(derive_seed(seed, "corpus"));
}

// ---- enhance ----------------------------------------------------------------

struct EnhanceArgs {
  Common common;
  std::string input, weights;
  bool oracle = false;
};

int cmd_enhance(const EnhanceArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  require_file(a.input, "input WAV");
  require_file(a.weights, "weights file");
  const fs::path dir = prepare_out(a.common);

  const auto engines = load_engines(a.weights, cfg.pipeline);
  const WaveBuffer in = read_wav(a.input);
  ctx.log("enhancing " + a.input + " (" + std::to_string(in.length()) + " samples)");
  const auto t0 = std::chrono::steady_clock::now();
  const WaveBuffer y = pipeline::process_file(in, *engines);
  const double elapsed = seconds_since(t0);
  write_wav(dir / "enhanced.wav", y, WavSampleFormat::kFloat32);

  const auto& pc = engines->config();
  Json r;
  r["input"] = a.input;
  r["weights"] = a.weights;
  r["input_sample_rate"] = in.sample_rate;
  r["samples"] = y.length();
  r["packets"] = pipeline::packets_for(pc, y.length());
  r["duration_s"] = static_cast<double>(y.length()) / pc.sample_rate;
  r["elapsed_s"] = elapsed;
  r["flops_per_packet"] = flops_json(pc);
  r["latency"] = latency_json({});
  if (a.oracle) {
    const WaveBuffer o = pipeline::process_file_offline(in, *engines);
    write_wav(dir / "oracle.wav", o, WavSampleFormat::kFloat32);
    const double d = max_abs_diff(y.channels[0], o.channels[0]);
    r["oracle_max_abs_diff"] = d;
    r["oracle_match"] = d <= 1e-4;
  }
  write_json(dir / "report.json", r);
  ctx.out << r.dump(2) << '\n';
  return a.oracle && !r["oracle_match"].get<bool>() ? kExitFailure : kExitOk;
}

// ---- init-weights -----------------------------------------------------------

struct InitArgs {
  Common common;
  bool zero_bias = false;
};

int cmd_init_weights(const InitArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  const uint64_t seed = resolve_seed(a.common.seed);
  const fs::path dir = prepare_out(a.common);
  WeightBundle w = random_init(pipeline::tensor_specs(cfg.pipeline), seed);
  if (a.zero_bias) {
    WeightBundle z;
    for (auto [name, rec] : w.records()) {
      if (name.ends_with(".b")) std::fill(rec.data.begin(), rec.data.end(), 0.0f);
      z.insert(std::move(rec));
    }
    w = std::move(z);
  }
  const fs::path path = dir / "weights.cbw";
  save_weights_file(w, path.string());
  Json r;
  r["path"] = path.string();
  r["seed"] = seed;
  r["zero_bias"] = a.zero_bias;
  r["tensors"] = w.size();
  r["bytes"] = fs::file_size(path);
  std::ostringstream digest;
  digest << std::hex << std::setw(16) << std::setfill('0') << w.config_digest();
  r["config_digest"] = digest.str();
  ctx.out << r.dump(2) << '\n';
  return kExitOk;
}

// ---- genmix -----------------------------------------------------------------

struct GenmixArgs {
  Common common;
  int count = 1;
  bool tones = false;
  std::string speech, noise;
};

int cmd_genmix(const GenmixArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  const uint64_t seed = resolve_seed(a.common.seed);
  const auto corpus = corpus_for(a.tones, a.speech, a.noise, seed);
  const fs::path dir = prepare_out(a.common);

  std::vector<mixgen::MixtureMeta> metas(static_cast<std::size_t>(a.count));
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(a.common.jobs)
  for (int i = 0; i < a.count; ++i) {
    try {
      const auto b = mixgen::make_mixture(seed + static_cast<uint64_t>(i), corpus, cfg.mix);
      std::ostringstream name;
      name << "mix_" << std::setw(4) << std::setfill('0') << i;
      mixgen::write_bundle(dir / name.str(), b);
      metas[static_cast<std::size_t>(i)] = b.meta;
    } catch (const std::exception& e) {
#pragma omp critical
      error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);

  Json index = Json::array();
  for (int i = 0; i < a.count; ++i) {
    const auto& m = metas[static_cast<std::size_t>(i)];
    std::ostringstream name;
    name << "mix_" << std::setw(4) << std::setfill('0') << i;
    index.push_back({{"bundle", name.str()},
                     {"seed", m.seed},
                     {"input_si_sdr_db", m.input_si_sdr_db},
                     {"rt60", m.room.rt60},
                     {"interferer_azimuth_deg", m.placement.interferer_azimuth_deg}});
    ctx.log("wrote " + name.str());
  }
  Json r;
  r["seed"] = seed;
  r["corpus"] = a.speech.empty() ? "tones" : a.speech;
  r["bundles"] = index;
  write_json(dir / "genmix.json", r);
  ctx.out << r.dump(2) << '\n';
  return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string kind = "angle";
  std::vector<double> grid;
  int trials = 5;
  std::string mask = "irm";
  bool tones = false;
  std::string speech, noise;
};

int cmd_sweep(const SweepArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  const uint64_t seed = resolve_seed(a.common.seed);
  mixgen::SweepKind kind;
  try {
    kind = mixgen::parse_sweep_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto mask = a.mask == "ibm" ? metrics::OracleMaskKind::kIbm : metrics::OracleMaskKind::kIrm;
  const auto corpus = corpus_for(a.tones, a.speech, a.noise, seed);
  const fs::path dir = prepare_out(a.common);
  const auto grid = a.grid.empty() ? mixgen::default_grid(kind) : a.grid;

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = mixgen::sweep(kind, grid, a.trials, seed, corpus, cfg.mix,
                                  mixgen::oracle_estimator(mask), a.common.jobs);
  ctx.log("sweep took " + std::to_string(seconds_since(t0)) + " s");
  const fs::path csv = dir / ("sweep_" + mixgen::to_string(kind) + ".csv");
  {
    std::ofstream f(csv);
    if (!f) throw std::runtime_error("cannot write " + csv.string());
    mixgen::write_sweep_csv(f, kind, rows);
  }

  Json summary = Json::array();
  for (double v : grid) {
    double sum = 0, itd = 0;
    int n = 0;
    for (const auto& r : rows)
      if (r.value == v) sum += r.score.improvement, itd += r.interferer_delay, ++n;
    summary.push_back({{"value", v},
                       {"mean_si_sdri_db", sum / n},
                       {"mean_interferer_itd_samples", itd / n}});
  }
  Json r;
  r["kind"] = mixgen::to_string(kind);
  r["mask"] = metrics::to_string(mask);
  r["trials"] = a.trials;
  r["seed"] = seed;
  r["csv"] = csv.string();
  r["summary"] = summary;
  write_json(dir / ("sweep_" + mixgen::to_string(kind) + ".json"), r);
  ctx.out << r.dump(2) << '\n';
  return kExitOk;
}

// ---- syncsim ----------------------------------------------------------------

struct SyncArgs {
  Common common;
  std::vector<double> ppm;
  std::string sync;
  std::optional<double> duration, beacon_loss, jitter, interval;
};

int cmd_syncsim(const SyncArgs& a, const Context& ctx) {
  Config cfg = config_for(a.common);
  auto& s = cfg.sync;
  if (!a.ppm.empty()) {
    s.primary_ppm = a.ppm[0];
    s.secondary_ppm = a.ppm[1];
  }
  if (!a.sync.empty()) s.sync = a.sync == "on";
  if (a.duration) s.duration_s = *a.duration;
  if (a.beacon_loss) s.beacon_loss = *a.beacon_loss;
  if (a.jitter) s.jitter_us = *a.jitter;
  if (a.interval) s.report_interval_s = *a.interval;
  s.seed = resolve_seed(a.common.seed);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(a.common);

  const auto rep = syncsim::run_sim(s);
  {
    std::ofstream f(dir / "syncsim_trace.csv");
    f << "t_s,error_us,error_samples,count_difference\n" << std::setprecision(10);
    for (const auto& p : rep.trace)
      f << p.t_s << ',' << p.error_us << ',' << p.error_samples << ',' << p.count_difference << '\n';
  }
  {
    std::ofstream f(dir / "syncsim_events.csv");
    f << "t_s,kind\n" << std::setprecision(10);
    for (const auto& e : rep.events) f << e.t_s << ',' << e.kind << '\n';
  }
  Json r;
  r["primary_ppm"] = s.primary_ppm;
  r["secondary_ppm"] = s.secondary_ppm;
  r["sync"] = s.sync;
  r["duration_s"] = s.duration_s;
  r["seed"] = s.seed;
  r["max_error_us"] = rep.max_error_us;
  r["final_error_us"] = rep.final_error_us;
  r["slope_us_per_min"] = rep.slope_us_per_min;
  r["expected_drift_us_per_min"] = syncsim::drift_us_per_min(s.primary_ppm, s.secondary_ppm);
  r["within_one_sample"] = rep.max_error_us <= syncsim::kOutputSampleUs;
  r["max_count_difference"] = rep.max_count_difference;
  r["beacons_sent"] = rep.beacons_sent;
  r["beacons_lost"] = rep.beacons_lost;
  r["inserts"] = rep.inserts;
  r["removes"] = rep.removes;
  write_json(dir / "syncsim_summary.json", r);
  ctx.out << r.dump(2) << '\n';
  return kExitOk;
}

// ---- wiresim ----------------------------------------------------------------

struct WireArgs {
  Common common;
  double drop = 0.0;
  int packets = 1000;
  bool dump = false;
  std::string replay;
};

std::vector<int16_t> wire_content(std::size_t n, uint64_t seed) {
  Rng rng(derive_seed(seed, "wiresim/content"));
  std::vector<int16_t> pcm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    pcm[i] = to_pcm16(0.3 * std::sin(2 * std::numbers::pi * 440.0 * t) + 0.1 * rng.uniform(-1.0, 1.0));
  }
  return pcm;
}

int cmd_wiresim(const WireArgs& a, const Context& ctx) {
  const uint64_t seed = resolve_seed(a.common.seed);
  std::vector<wire::DumpRecord> frames;  // arrival order
  uint64_t packets = 0;
  std::array<std::vector<uint16_t>, 2> dropped;
  if (!a.replay.empty()) {
    require_file(a.replay, "replay file");
    std::ifstream f(a.replay);
    frames = wire::read_hex_dump(f);
    std::array<uint64_t, 2> highest{0, 0};
    for (const auto& r : frames) {
      auto& h = highest[r.channel == 'L' ? 0 : 1];
      h = std::max<uint64_t>(h, r.packet.seq + 1u);
    }
    packets = std::max(highest[0], highest[1]);
  } else {
    if (!(a.drop >= 0.0 && a.drop <= 1.0)) throw UsageError("--drop must be in [0, 1]");
    packets = static_cast<uint64_t>(a.packets);
    if (packets > 65536) throw UsageError("--packets above 65536 would wrap sequence numbers");
    const auto pcm = wire_content(packets * wire::kSamplesPerPacket, seed);
    const auto sent = wire::packetize(pcm);
    for (int ch = 0; ch < 2; ++ch) {
      const char name = ch == 0 ? 'L' : 'R';
      auto loss = wire::simulate_loss(sent, a.drop, derive_seed(seed, std::string("wiresim/") + name));
      dropped[ch] = std::move(loss.dropped);
      for (const auto& p : loss.delivered) frames.push_back({name, p});
    }
  }
  const fs::path dir = prepare_out(a.common);

  std::array<wire::StreamReassembler, 2> rx;
  for (const auto& r : frames) rx[r.channel == 'L' ? 0 : 1].push(r.packet);
  for (auto& s : rx) s.pad_to(packets);

  std::array<std::vector<double>, 2> pcm;
  for (int ch = 0; ch < 2; ++ch)
    for (int16_t v : rx[ch].output()) pcm[ch].push_back(from_pcm16(v));
  const int lag = mixgen::measured_interaural_lag(pcm[0], pcm[1], 4 * static_cast<int>(wire::kSamplesPerPacket));
  write_wav(dir / "reassembled.wav", WaveBuffer::stereo(pcm[0], pcm[1]));
  {
    std::ofstream f(dir / "wiresim_drops.csv");
    f << "channel,seq\n";
    for (int ch = 0; ch < 2; ++ch)
      for (uint16_t s : dropped[ch]) f << (ch == 0 ? 'L' : 'R') << ',' << s << '\n';
  }
  if (a.dump) {
    std::ofstream f(dir / "wiresim_frames.hex");
    f << "# clearstream wire dump, arrival order\n";
    wire::write_hex_dump(f, frames);
  }
  Json r;
  r["packets"] = packets;
  r["drop_probability"] = a.replay.empty() ? Json(a.drop) : Json(nullptr);
  r["seed"] = seed;
  for (int ch = 0; ch < 2; ++ch) {
    Json c;
    c["dropped"] = a.replay.empty() ? dropped[ch].size() : rx[ch].concealed();
    c["concealed"] = rx[ch].concealed();
    c["duplicates"] = rx[ch].duplicates();
    c["output_samples"] = rx[ch].output().size();
    r[ch == 0 ? "left" : "right"] = c;
  }
  r["equal_lengths"] = rx[0].output().size() == rx[1].output().size();
  r["best_lag_samples"] = lag;
  write_json(dir / "wiresim.json", r);
  ctx.log("left dropped " + std::to_string(dropped[0].size()) + ", right dropped " +
          std::to_string(dropped[1].size()));
  ctx.out << r.dump(2) << '\n';
  return kExitOk;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  Common common;
  std::string weights;
  int packets = 200;
  int uncached_packets = 10;
};

Json stats_json(const pipeline::BenchStats& s) {
  Json j;
  j["packets"] = s.packets;
  j["mean_ms"] = s.mean_ms;
  j["median_ms"] = s.median_ms;
  j["p95_ms"] = s.p95_ms;
  j["max_ms"] = s.max_ms;
  j["tcn_flops"] = s.tcn_flops;
  j["unet_flops"] = s.unet_flops;
  j["total_flops"] = s.total_flops;
  j["realtime"] = s.realtime;
  return j;
}

int cmd_bench(const BenchArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  const uint64_t seed = resolve_seed(a.common.seed);
  if (!a.weights.empty()) require_file(a.weights, "weights file");
  const fs::path dir = prepare_out(a.common);
  const auto engines =
      a.weights.empty()
          ? std::make_shared<const pipeline::Engines>(random_init(pipeline::tensor_specs(cfg.pipeline), seed),
                                                      cfg.pipeline)
          : load_engines(a.weights, cfg.pipeline);

  ctx.log("timing cached");
  const auto cached = pipeline::bench_packet(engines, a.packets, tcn::Mode::kCached, seed);
  ctx.log("timing uncached");
  const auto uncached = pipeline::bench_packet(engines, a.uncached_packets, tcn::Mode::kUncached, seed);
  const double budget_ms = 1000.0 * engines->config().window() / engines->config().sample_rate;

  Json r;
  r["weights"] = a.weights.empty() ? "random" : a.weights;
  r["packet_ms"] = budget_ms;
  r["cached"] = stats_json(cached);
  r["uncached"] = stats_json(uncached);
  r["analytic_flops"] = flops_json(engines->config());
  r["cached_faster"] = cached.median_ms < uncached.median_ms;
  r["realtime"] = cached.realtime;
  pipeline::LatencyBudget b;
  b.inference_ms = cached.p95_ms;
  r["latency_with_measured_inference"] = latency_json(b);
  write_json(dir / "bench.json", r);

  auto& o = ctx.out;
  o << std::fixed << std::setprecision(3);
  o << "mode      packets  median_ms  p95_ms   max_ms   flops/packet\n";
  for (const auto& [name, s] : {std::pair{"cached", cached}, std::pair{"uncached", uncached}})
    o << std::left << std::setw(10) << name << std::right << std::setw(7) << s.packets << std::setw(11)
      << s.median_ms << std::setw(9) << s.p95_ms << std::setw(9) << s.max_ms << "  " << s.total_flops << '\n';
  o << "real-time (p95 < " << budget_ms << " ms): " << (cached.realtime ? "yes" : "no") << '\n';
  o.unsetf(std::ios::floatfield);
  return kExitOk;
}

// ---- evaluate ---------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string bundles, weights;
  bool no_oracle = false;
};

std::vector<fs::path> find_bundles(const fs::path& root) {
  if (!fs::is_directory(root)) throw UsageError("bundle directory not found: " + root.string());
  if (fs::exists(root / "mixture.wav")) return {root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "mixture.wav")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError("no bundles under " + root.string());
  return out;
}

struct EvalRow {
  std::string name;
  uint64_t seed = 0;
  double input = NAN, ibm = NAN, irm = NAN, net = NAN, net_chunked = NAN;
};

Json number_or_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

int cmd_evaluate(const EvalArgs& a, const Context& ctx) {
  const Config cfg = config_for(a.common);
  const auto paths = find_bundles(a.bundles);
  std::shared_ptr<const pipeline::Engines> engines;
  if (!a.weights.empty()) engines = load_engines(a.weights, cfg.pipeline);
  const fs::path dir = prepare_out(a.common);

  std::vector<EvalRow> rows(paths.size());
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(a.common.jobs)
  for (long i = 0; i < static_cast<long>(paths.size()); ++i) {
    try {
      const auto b = mixgen::read_bundle(paths[static_cast<std::size_t>(i)]);
      EvalRow& r = rows[static_cast<std::size_t>(i)];
      r.name = paths[static_cast<std::size_t>(i)].filename().string();
      r.seed = b.meta.seed;
      const auto& ref = b.ground_truth.channels[0];
      const auto& mix = b.mixture.channels[0];
      r.input = metrics::si_sdr(ref, mix);
      if (!a.no_oracle && b.stems.size() > 1) {
        r.ibm = metrics::si_sdr(ref, mixgen::oracle_estimator(metrics::OracleMaskKind::kIbm)(b)) - r.input;
        r.irm = metrics::si_sdr(ref, mixgen::oracle_estimator(metrics::OracleMaskKind::kIrm)(b)) - r.input;
      }
      if (engines) {
        const auto y = pipeline::process_file(b.mixture, *engines).channels[0];
        r.net = metrics::si_sdr(ref, y) - r.input;
        if (ref.size() >= static_cast<std::size_t>(kSampleRate))
          r.net_chunked = metrics::chunked_output_sdr(ref, y).aggregate;
      }
    } catch (const std::exception& e) {
#pragma omp critical
      error = paths[static_cast<std::size_t>(i)].string() + ": " + e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);

  {
    std::ofstream f(dir / "evaluate.csv");
    f << "bundle,seed,input_si_sdr_db,ibm_si_sdri_db,irm_si_sdri_db,network_si_sdri_db,network_chunked_sdr_db\n";
    f << std::setprecision(10);
    auto cell = [&](double v) -> std::ostream& {
      if (!std::isnan(v)) f << v;
      return f;
    };
    for (const auto& r : rows) {
      f << r.name << ',' << r.seed << ',';
      cell(r.input) << ',';
      cell(r.ibm) << ',';
      cell(r.irm) << ',';
      cell(r.net) << ',';
      cell(r.net_chunked) << '\n';
    }
  }
  auto mean_of = [&](double EvalRow::*field) {
    double s = 0;
    int n = 0;
    for (const auto& r : rows)
      if (!std::isnan(r.*field)) s += r.*field, ++n;
    return n ? s / n : NAN;
  };
  Json per = Json::array();
  for (const auto& r : rows)
    per.push_back({{"bundle", r.name},
                   {"seed", r.seed},
                   {"input_si_sdr_db", number_or_null(r.input)},
                   {"ibm_si_sdri_db", number_or_null(r.ibm)},
                   {"irm_si_sdri_db", number_or_null(r.irm)},
                   {"network_si_sdri_db", number_or_null(r.net)},
                   {"network_chunked_sdr_db", number_or_null(r.net_chunked)}});
  Json j;
  j["reference_channel"] = "left";
  j["bundles"] = rows.size();
  j["mean"] = {{"input_si_sdr_db", number_or_null(mean_of(&EvalRow::input))},
               {"ibm_si_sdri_db", number_or_null(mean_of(&EvalRow::ibm))},
               {"irm_si_sdri_db", number_or_null(mean_of(&EvalRow::irm))},
               {"network_si_sdri_db", number_or_null(mean_of(&EvalRow::net))},
               {"network_chunked_sdr_db", number_or_null(mean_of(&EvalRow::net_chunked))}};
  j["per_bundle"] = per;
  write_json(dir / "evaluate.json", j);
  ctx.out << j["mean"].dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"clearstream: binaural speech enhancement toolkit"};
  app.require_subcommand(1);

  EnhanceArgs enhance;
  auto* s_enh = app.add_subcommand("enhance", "Enhance a stereo WAV with CB-Net weights");
  add_common(s_enh, enhance.common, false);
  s_enh->add_option("input", enhance.input, "Stereo WAV at 15625 or 31250 Hz")->required();
  s_enh->add_option("--weights", enhance.weights, "CBW1 weights file")->required();
  s_enh->add_flag("--oracle-batch", enhance.oracle, "Also run the offline oracle and compare");

  InitArgs init;
  auto* s_init = app.add_subcommand("init-weights", "Write deterministic random weights");
  add_common(s_init, init.common, false);
  s_init->add_flag("--zero-bias", init.zero_bias, "Zero every bias tensor");

  GenmixArgs gen;
  auto* s_gen = app.add_subcommand("genmix", "Generate synthetic mixture bundles");
  add_common(s_gen, gen.common, true);
  s_gen->add_option("--count", gen.count, "Number of bundles")->check(CLI::Range(1, 100000));
  s_gen->add_flag("--tones", gen.tones, "Use the built-in synthetic corpus");
  s_gen->add_option("--speech", gen.speech, "Directory of speech WAVs");
  s_gen->add_option("--noise", gen.noise, "Directory of noise WAVs");

  SweepArgs sw;
  auto* s_sweep = app.add_subcommand("sweep", "Oracle-mask geometry sweep to CSV");
  add_common(s_sweep, sw.common, true);
  s_sweep->add_option("--kind", sw.kind, "angle, rt60 or spacing")
      ->check(CLI::IsMember({"angle", "rt60", "spacing"}));
  s_sweep->add_option("--grid", sw.grid, "Comma-separated values")->delimiter(',');
  s_sweep->add_option("--trials", sw.trials, "Mixtures per grid value")->check(CLI::Range(1, 10000));
  s_sweep->add_option("--mask", sw.mask, "ibm or irm")->check(CLI::IsMember({"ibm", "irm"}));
  s_sweep->add_flag("--tones", sw.tones, "Use the built-in synthetic corpus");
  s_sweep->add_option("--speech", sw.speech, "Directory of speech WAVs");
  s_sweep->add_option("--noise", sw.noise, "Directory of noise WAVs");

  SyncArgs sy;
  auto* s_sync = app.add_subcommand("syncsim", "Two-earbud clock synchronization simulation");
  add_common(s_sync, sy.common, false);
  s_sync->add_option("--ppm", sy.ppm, "Primary,secondary oscillator error")
      ->delimiter(',')
      ->expected(2);
  s_sync->add_option("--sync", sy.sync, "on or off")->check(CLI::IsMember({"on", "off"}));
  s_sync->add_option("--duration", sy.duration, "Seconds")->check(CLI::PositiveNumber);
  s_sync->add_option("--beacon-loss", sy.beacon_loss, "Beacon loss probability")->check(CLI::Range(0.0, 1.0));
  s_sync->add_option("--jitter", sy.jitter, "Beacon delay jitter, us")->check(CLI::NonNegativeNumber);
  s_sync->add_option("--report-interval", sy.interval, "Trace spacing, s")->check(CLI::PositiveNumber);

  WireArgs wi;
  auto* s_wire = app.add_subcommand("wiresim", "Packet loss and reassembly simulation");
  add_common(s_wire, wi.common, false);
  s_wire->add_option("--drop", wi.drop, "Per-packet loss probability");
  s_wire->add_option("--packets", wi.packets, "Packets per channel")->check(CLI::Range(1, 1 << 20));
  s_wire->add_flag("--dump", wi.dump, "Write delivered frames as a hex dump");
  s_wire->add_option("--replay", wi.replay, "Reassemble a hex dump instead of simulating");

  BenchArgs be;
  auto* s_bench = app.add_subcommand("bench", "Per-packet timing, cached vs uncached");
  add_common(s_bench, be.common, false);
  s_bench->add_option("--weights", be.weights, "CBW1 weights file (random when omitted)");
  s_bench->add_option("--packets", be.packets, "Timed cached packets")->check(CLI::Range(1, 1000000));
  s_bench->add_option("--uncached-packets", be.uncached_packets, "Timed uncached packets")
      ->check(CLI::Range(1, 1000000));

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("evaluate", "Score mixture bundles");
  add_common(s_eval, ev.common, true);
  s_eval->add_option("--bundles", ev.bundles, "Bundle directory or parent of bundles")->required();
  s_eval->add_option("--weights", ev.weights, "Also score CB-Net with these weights");
  s_eval->add_flag("--no-oracle", ev.no_oracle, "Skip the IBM/IRM baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto ctx = [&](const Common& c) { return Context{out, err, c.verbose}; };
    if (s_enh->parsed()) return cmd_enhance(enhance, ctx(enhance.common));
    if (s_init->parsed()) return cmd_init_weights(init, ctx(init.common));
    if (s_gen->parsed()) return cmd_genmix(gen, ctx(gen.common));
    if (s_sweep->parsed()) return cmd_sweep(sw, ctx(sw.common));
    if (s_sync->parsed()) return cmd_syncsim(sy, ctx(sy.common));
    if (s_wire->parsed()) return cmd_wiresim(wi, ctx(wi.common));
    if (s_bench->parsed()) return cmd_bench(be, ctx(be.common));
    if (s_eval->parsed()) return cmd_evaluate(ev, ctx(ev.common));
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace clearstream::cli

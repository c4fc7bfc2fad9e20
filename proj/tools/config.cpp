// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace clearstream::cli {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw UsageError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw UsageError("config: unknown key '" + section + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    dst.reset();
  else
    dst = j.at(key).get<T>();
}

void read_tcn(const json& j, tcn::TcnConfig& c) {
  check_keys(j, "pipeline.tcn",
             {"enc_kernel", "window", "latent_channels", "conv_kernel", "lookahead", "dilations"});
  read(j, "enc_kernel", c.enc_kernel);
  read(j, "window", c.window);
  read(j, "latent_channels", c.latent_channels);
  read(j, "conv_kernel", c.conv_kernel);
  read(j, "lookahead", c.lookahead);
  read(j, "dilations", c.dilations);
}

void read_unet(const json& j, unet::UNetConfig& c) {
  check_keys(j, "pipeline.unet", {"mel_bins", "time_bins", "depth", "base_channels", "threshold"});
  read(j, "mel_bins", c.mel_bins);
  read(j, "time_bins", c.time_bins);
  read(j, "depth", c.depth);
  read(j, "base_channels", c.base_channels);
  read(j, "threshold", c.threshold);
}

void read_mix(const json& j, mixgen::MixConfig& c) {
  check_keys(j, "mix",
             {"duration_s", "mic_spacing", "dims", "rt60", "azimuth_deg", "distance", "max_order",
              "interferer", "background", "background_db", "si_sdr_lo", "si_sdr_hi"});
  read(j, "duration_s", c.duration_s);
  read(j, "mic_spacing", c.mic_spacing);
  read(j, "dims", c.dims);
  read(j, "rt60", c.rt60);
  read(j, "azimuth_deg", c.azimuth_deg);
  read(j, "distance", c.distance);
  read(j, "max_order", c.max_order);
  read(j, "interferer", c.interferer);
  read(j, "background", c.background);
  read(j, "background_db", c.background_db);
  read(j, "si_sdr_lo", c.si_sdr_lo);
  read(j, "si_sdr_hi", c.si_sdr_hi);
}

void read_sync(const json& j, syncsim::SimConfig& c) {
  check_keys(j, "syncsim",
             {"primary_ppm", "secondary_ppm", "duration_s", "sync", "beacon_hz", "beacon_loss",
              "prop_delay_us", "jitter_us", "report_interval_s"});
  read(j, "primary_ppm", c.primary_ppm);
  read(j, "secondary_ppm", c.secondary_ppm);
  read(j, "duration_s", c.duration_s);
  read(j, "sync", c.sync);
  read(j, "beacon_hz", c.beacon_hz);
  read(j, "beacon_loss", c.beacon_loss);
  read(j, "prop_delay_us", c.prop_delay_us);
  read(j, "jitter_us", c.jitter_us);
  read(j, "report_interval_s", c.report_interval_s);
}

}  // namespace

Config parse_config(const std::string& json_text) {
  Config c;
  try {
    const json j = json::parse(json_text);
    check_keys(j, "", {"pipeline", "mix", "syncsim"});
    if (j.contains("pipeline")) {
      const auto& p = j.at("pipeline");
      check_keys(p, "pipeline", {"tcn", "unet"});
      if (p.contains("tcn")) read_tcn(p.at("tcn"), c.pipeline.tcn);
      if (p.contains("unet")) read_unet(p.at("unet"), c.pipeline.unet);
    }
    if (j.contains("mix")) read_mix(j.at("mix"), c.mix);
    if (j.contains("syncsim")) read_sync(j.at("syncsim"), c.sync);
    c.pipeline.validate();
    c.mix.validate();
    c.sync.validate();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

uint64_t resolve_seed(std::optional<uint64_t> flag) {
  if (flag) return *flag;
  const char* env = std::getenv("CLEARSTREAM_SEED");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size() || std::string(env).front() == '-') throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("CLEARSTREAM_SEED is not an unsigned integer: ") + env);
  }
}

}  // namespace clearstream::cli

// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "clearstream/mixgen.hpp"
#include "clearstream/pipeline.hpp"
#include "clearstream/syncsim.hpp"

namespace clearstream::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, bad config files, missing inputs. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a config file can set. Sections and keys mirror the library
/// structs; see docs/config.md.
struct Config {
  pipeline::PipelineConfig pipeline;
  mixgen::MixConfig mix;
  syncsim::SimConfig sync;
};

/// Throws UsageError on unknown keys, wrong types or values the library
/// rejects.
Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);

/// --seed if given, else CLEARSTREAM_SEED, else 1.
uint64_t resolve_seed(std::optional<uint64_t> flag);

/// Runs one command line. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clearstream::cli

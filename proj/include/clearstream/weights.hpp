// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clearstream {

/// One named tensor, row-major.
struct TensorRecord {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  bool operator==(const TensorRecord&) const = default;
};

/// What an architecture expects to find in a bundle.
struct TensorSpec {
  std::string name;
  std::vector<uint32_t> dims;
  uint32_t fan_in = 1;
};

class WeightError : public std::runtime_error {
 public:
  enum class Kind {
    kBadMagic,
    kBadVersion,
    kTruncated,
    kDimOverflow,
    kDuplicateName,
    kMissingTensor,
    kShapeMismatch,
    kIo,
  };
  WeightError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Immutable-after-construction parameter set. Records are kept sorted by
/// name, which fixes the on-disk order.
class WeightBundle {
 public:
  static constexpr uint32_t kFormatVersion = 1;

  void insert(TensorRecord record);  // throws kDuplicateName
  const TensorRecord* find(const std::string& name) const;
  /// Throws kMissingTensor / kShapeMismatch.
  const TensorRecord& require(const std::string& name,
                              std::span<const uint32_t> dims) const;
  /// Checks every spec is present with matching dims.
  void check(std::span<const TensorSpec> specs) const;

  const std::map<std::string, TensorRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  uint32_t format_version() const { return kFormatVersion; }

  /// FNV-1a over names and dims; identifies the architecture the bundle fits.
  uint64_t config_digest() const;

  bool operator==(const WeightBundle&) const = default;

 private:
  std::map<std::string, TensorRecord> records_;
};

uint64_t config_digest(std::span<const TensorSpec> specs);

/// Uniform in [-k, k] with k = 1/sqrt(fan_in). Each tensor draws from its own
/// stream seeded by (seed, name), so bundles are reproducible per tensor.
WeightBundle random_init(std::span<const TensorSpec> specs, uint64_t seed);

/// Writes the CBW1 format; returns the byte count.
std::size_t save_weights(const WeightBundle& bundle, std::ostream& out);
std::vector<uint8_t> encode_weights(const WeightBundle& bundle);

WeightBundle load_weights(std::istream& in);
WeightBundle decode_weights(std::span<const uint8_t> bytes);

WeightBundle load_weights_file(const std::string& path);
void save_weights_file(const WeightBundle& bundle, const std::string& path);

}  // namespace clearstream

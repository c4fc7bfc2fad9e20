// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>

#include "clearstream/rng.hpp"

namespace clearstream {

namespace {

constexpr char kMagic[4] = {'C', 'B', 'W', '1'};
constexpr uint64_t kMaxElements = uint64_t{1} << 31;

std::string dims_str(std::span<const uint32_t> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void fnv_mix(uint64_t& h, const void* p, std::size_t n) {
  const auto* b = static_cast<const uint8_t*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001B3ull;
  }
}

void fnv_mix_tensor(uint64_t& h, const std::string& name, std::span<const uint32_t> dims) {
  fnv_mix(h, name.data(), name.size());
  uint8_t sep = 0;
  fnv_mix(h, &sep, 1);
  for (uint32_t d : dims) fnv_mix(h, &d, sizeof d);
  fnv_mix(h, &sep, 1);
}

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back(v >> 8);
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> b) : bytes_(b) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw WeightError(WeightError::Kind::kTruncated,
                        std::string("CBW1 stream truncated in ") + what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t TensorRecord::element_count() const {
  std::size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

void WeightBundle::insert(TensorRecord record) {
  if (record.element_count() != record.data.size())
    throw WeightError(WeightError::Kind::kShapeMismatch,
                      "tensor " + record.name + ": data length does not match dims");
  std::string key = record.name;
  auto [it, inserted] = records_.emplace(std::move(key), std::move(record));
  if (!inserted)
    throw WeightError(WeightError::Kind::kDuplicateName, "duplicate tensor " + it->first);
}

const TensorRecord* WeightBundle::find(const std::string& name) const {
  auto it = records_.find(name);
  return it == records_.end() ? nullptr : &it->second;
}

const TensorRecord& WeightBundle::require(const std::string& name,
                                          std::span<const uint32_t> dims) const {
  const TensorRecord* r = find(name);
  if (!r) throw WeightError(WeightError::Kind::kMissingTensor, "missing tensor " + name);
  if (!std::equal(r->dims.begin(), r->dims.end(), dims.begin(), dims.end()))
    throw WeightError(WeightError::Kind::kShapeMismatch,
                      "tensor " + name + " has dims " + dims_str(r->dims) + ", expected " +
                          dims_str(dims));
  return *r;
}

void WeightBundle::check(std::span<const TensorSpec> specs) const {
  for (const auto& s : specs) require(s.name, s.dims);
}

uint64_t WeightBundle::config_digest() const {
  uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& [name, rec] : records_) fnv_mix_tensor(h, name, rec.dims);
  return h;
}

uint64_t config_digest(std::span<const TensorSpec> specs) {
  std::map<std::string, const TensorSpec*> sorted;
  for (const auto& s : specs) sorted[s.name] = &s;
  uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& [name, s] : sorted) fnv_mix_tensor(h, name, s->dims);
  return h;
}

WeightBundle random_init(std::span<const TensorSpec> specs, uint64_t seed) {
  WeightBundle bundle;
  for (const auto& s : specs) {
    TensorRecord r{s.name, s.dims, {}};
    r.data.resize(r.element_count());
    const double k = 1.0 / std::sqrt(static_cast<double>(std::max<uint32_t>(s.fan_in, 1)));
    Rng rng(derive_seed(seed, s.name));
    for (float& v : r.data) {
      float x = static_cast<float>(rng.uniform(-k, k));
      // Rounding to float may step just past k.
      v = std::clamp(x, static_cast<float>(-k), static_cast<float>(k));
      if (std::abs(v) > k) v = std::nextafter(v, 0.0f);
    }
    bundle.insert(std::move(r));
  }
  return bundle;
}

std::vector<uint8_t> encode_weights(const WeightBundle& bundle) {
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, WeightBundle::kFormatVersion);
  put_u32(out, static_cast<uint32_t>(bundle.size()));
  for (const auto& [name, rec] : bundle.records()) {
    if (name.size() > 0xFFFF)
      throw WeightError(WeightError::Kind::kIo, "tensor name too long: " + name);
    if (rec.dims.size() > 0xFF)
      throw WeightError(WeightError::Kind::kDimOverflow, "too many dims in " + name);
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u8(out, static_cast<uint8_t>(rec.dims.size()));
    for (uint32_t d : rec.dims) put_u32(out, d);
    for (float v : rec.data) put_u32(out, std::bit_cast<uint32_t>(v));
  }
  return out;
}

std::size_t save_weights(const WeightBundle& bundle, std::ostream& out) {
  auto bytes = encode_weights(bundle);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightError(WeightError::Kind::kIo, "write failed");
  return bytes.size();
}

WeightBundle decode_weights(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw WeightError(WeightError::Kind::kBadMagic, "not a CBW1 stream");
  uint32_t version = r.u32("version");
  if (version != WeightBundle::kFormatVersion)
    throw WeightError(WeightError::Kind::kBadVersion,
                      "unsupported CBW1 version " + std::to_string(version));
  uint32_t count = r.u32("record count");

  WeightBundle bundle;
  for (uint32_t i = 0; i < count; ++i) {
    TensorRecord rec;
    uint16_t name_len = r.u16("name length");
    auto name = r.take(name_len, "name");
    rec.name.assign(name.begin(), name.end());
    uint8_t ndim = r.u8("ndim");
    uint64_t elements = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      uint32_t extent = r.u32("dims");
      if (extent == 0)
        throw WeightError(WeightError::Kind::kDimOverflow, "zero extent in " + rec.name);
      elements *= extent;
      if (elements > kMaxElements)
        throw WeightError(WeightError::Kind::kDimOverflow, "tensor too large: " + rec.name);
      rec.dims.push_back(extent);
    }
    auto data = r.take(static_cast<std::size_t>(elements) * 4, "tensor data");
    rec.data.resize(static_cast<std::size_t>(elements));
    for (std::size_t k = 0; k < rec.data.size(); ++k) {
      uint32_t bits = static_cast<uint32_t>(data[4 * k]) |
                      (static_cast<uint32_t>(data[4 * k + 1]) << 8) |
                      (static_cast<uint32_t>(data[4 * k + 2]) << 16) |
                      (static_cast<uint32_t>(data[4 * k + 3]) << 24);
      rec.data[k] = std::bit_cast<float>(bits);
    }
    bundle.insert(std::move(rec));
  }
  return bundle;
}

WeightBundle load_weights(std::istream& in) {
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw WeightError(WeightError::Kind::kIo, "read failed");
  return decode_weights(bytes);
}

WeightBundle load_weights_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightError(WeightError::Kind::kIo, "cannot open " + path);
  return load_weights(in);
}

void save_weights_file(const WeightBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightError(WeightError::Kind::kIo, "cannot open " + path + " for writing");
  save_weights(bundle, out);
}

}  // namespace clearstream

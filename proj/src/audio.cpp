// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace clearstream {

WaveBuffer WaveBuffer::mono(std::vector<double> samples, int rate) {
  WaveBuffer w;
  w.sample_rate = rate;
  w.channels.push_back(std::move(samples));
  return w;
}

WaveBuffer WaveBuffer::stereo(std::vector<double> left, std::vector<double> right,
                              int rate) {
  WaveBuffer w;
  w.sample_rate = rate;
  w.channels.push_back(std::move(left));
  w.channels.push_back(std::move(right));
  return w;
}

void WaveBuffer::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  for (const auto& ch : channels) {
    if (ch.size() != channels[0].size())
      throw std::invalid_argument("channels differ in length");
    for (double v : ch)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample");
  }
}

int16_t to_pcm16(double x) {
  double s = std::round(x * 32768.0);
  s = std::clamp(s, -32768.0, 32767.0);
  return static_cast<int16_t>(s);
}

double from_pcm16(int16_t s) { return static_cast<double>(s) / 32768.0; }

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t get_u16(std::span<const uint8_t> b, std::size_t off) {
  return static_cast<uint16_t>(b[off] | (b[off + 1] << 8));
}

uint32_t get_u32(std::span<const uint8_t> b, std::size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const uint8_t> b, std::size_t off, const char* tag) {
  return std::memcmp(b.data() + off, tag, 4) == 0;
}

}  // namespace

WaveBuffer parse_wav(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw WavError("not a RIFF/WAVE stream");

  uint16_t format = 0, num_channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const uint8_t> data;
  bool have_data = false;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    uint32_t chunk_size = get_u32(bytes, off + 4);
    std::size_t body = off + 8;
    if (chunk_size > bytes.size() - body) {
      // Some writers leave a bogus size on the trailing data chunk.
      if (tag_is(bytes, off, "data")) chunk_size = static_cast<uint32_t>(bytes.size() - body);
      else throw WavError("truncated chunk");
    }
    if (tag_is(bytes, off, "fmt ")) {
      if (chunk_size < 16) throw WavError("short fmt chunk");
      format = get_u16(bytes, body);
      num_channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      bits = get_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 26) throw WavError("short extensible fmt chunk");
        format = get_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, off, "data")) {
      data = bytes.subspan(body, chunk_size);
      have_data = true;
    }
    off = body + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt) throw WavError("missing fmt chunk");
  if (!have_data) throw WavError("missing data chunk");
  if (num_channels == 0) throw WavError("zero channels");
  if (rate == 0) throw WavError("zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    throw WavError("unsupported sample format (need 16-bit PCM or 32-bit float)");

  const std::size_t frame_bytes = static_cast<std::size_t>(num_channels) * (bits / 8);
  const std::size_t frames = data.size() / frame_bytes;

  WaveBuffer w;
  w.sample_rate = static_cast<int>(rate);
  w.channels.assign(num_channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < num_channels; ++c) {
      std::size_t p = i * frame_bytes + c * (bits / 8);
      if (pcm16) {
        w.channels[c][i] = from_pcm16(static_cast<int16_t>(get_u16(data, p)));
      } else {
        w.channels[c][i] = static_cast<double>(std::bit_cast<float>(get_u32(data, p)));
      }
    }
  }
  return w;
}

WaveBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

std::vector<uint8_t> encode_wav(const WaveBuffer& wave, WavSampleFormat format) {
  wave.validate();
  const uint16_t channels = static_cast<uint16_t>(wave.num_channels());
  const uint16_t bits = format == WavSampleFormat::kPcm16 ? 16 : 32;
  const uint32_t frames = static_cast<uint32_t>(wave.length());
  const uint32_t data_bytes = frames * channels * (bits / 8);

  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavSampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<uint32_t>(wave.sample_rate) * channels * (bits / 8));
  put_u16(out, static_cast<uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (uint32_t i = 0; i < frames; ++i) {
    for (uint16_t c = 0; c < channels; ++c) {
      double v = wave.channels[c][i];
      if (format == WavSampleFormat::kPcm16) {
        put_u16(out, static_cast<uint16_t>(to_pcm16(v)));
      } else {
        put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const WaveBuffer& wave,
               WavSampleFormat format) {
  auto bytes = encode_wav(wave, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError("write failed: " + path.string());
}

}  // namespace clearstream

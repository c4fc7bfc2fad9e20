// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "clearstream/audio.hpp"
#include "support.hpp"

using namespace clearstream;

namespace {

void put16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}

void put32(std::vector<uint8_t>& b, uint32_t v) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<uint8_t>(v >> (8 * k)));
}

void tag(std::vector<uint8_t>& b, const char* t) { b.insert(b.end(), t, t + 4); }

// Hand-assembled RIFF file with an extra chunk before "data".
std::vector<uint8_t> handmade(uint16_t format, uint16_t channels, uint32_t rate, uint16_t bits,
                              const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> b;
  tag(b, "RIFF");
  put32(b, 0);
  tag(b, "WAVE");
  tag(b, "fmt ");
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, rate);
  put32(b, rate * channels * bits / 8);
  put16(b, static_cast<uint16_t>(channels * bits / 8));
  put16(b, bits);
  tag(b, "LIST");
  put32(b, 3);
  b.insert(b.end(), {'a', 'b', 'c', 0});  // odd size, padded
  tag(b, "data");
  put32(b, static_cast<uint32_t>(payload.size()));
  b.insert(b.end(), payload.begin(), payload.end());
  const uint32_t riff = static_cast<uint32_t>(b.size() - 8);
  std::memcpy(b.data() + 4, &riff, 4);
  return b;
}

}  // namespace

TEST_CASE("pcm16 conversion saturates") {
  CHECK(to_pcm16(0.0) == 0);
  CHECK(to_pcm16(0.5) == 16384);
  CHECK(to_pcm16(-1.0) == -32768);
  CHECK(to_pcm16(1.0) == 32767);
  CHECK(to_pcm16(7.0) == 32767);
  CHECK(to_pcm16(-7.0) == -32768);
  CHECK(from_pcm16(-32768) == -1.0);
  for (int s = -32768; s <= 32767; s += 17) REQUIRE(to_pcm16(from_pcm16(static_cast<int16_t>(s))) == s);
}

TEST_CASE("wave buffer validation") {
  CHECK_NOTHROW(WaveBuffer::stereo({0.1, 0.2}, {0.3, 0.4}).validate());
  CHECK_THROWS_AS(WaveBuffer::stereo({0.1, 0.2}, {0.3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WaveBuffer::mono({0.1, NAN}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WaveBuffer::mono({0.1}, 0).validate(), std::invalid_argument);
  CHECK(WaveBuffer::stereo({1, 2, 3}, {4, 5, 6}).length() == 3);
}

TEST_CASE("encode layout") {
  const auto b = encode_wav(WaveBuffer::mono({0.5, -0.5}, 15625), WavSampleFormat::kPcm16);
  REQUIRE(b.size() == 44 + 4);
  CHECK(std::memcmp(b.data(), "RIFF", 4) == 0);
  CHECK(std::memcmp(b.data() + 8, "WAVEfmt ", 8) == 0);
  CHECK(b[20] == 1);                      // PCM
  CHECK((b[24] | b[25] << 8) == 15625);   // rate
  CHECK(b[34] == 16);                     // bits
  CHECK(std::memcmp(b.data() + 36, "data", 4) == 0);
  CHECK(b[44] == 0x00);
  CHECK(b[45] == 0x40);
  CHECK(b[46] == 0x00);
  CHECK(b[47] == 0xC0);
  const auto f = encode_wav(WaveBuffer::mono({0.5}), WavSampleFormat::kFloat32);
  CHECK(f[20] == 3);
  CHECK(f[34] == 32);
}

TEST_CASE("round trips") {
  const auto l = testing::noise(1001, 1, 0.9), r = testing::noise(1001, 2, 0.9);
  const auto stereo = WaveBuffer::stereo(l, r, kCaptureRate);

  const auto f = parse_wav(encode_wav(stereo, WavSampleFormat::kFloat32));
  REQUIRE(f.num_channels() == 2);
  CHECK(f.sample_rate == kCaptureRate);
  for (std::size_t i = 0; i < l.size(); ++i) {
    REQUIRE(f.channels[0][i] == static_cast<double>(static_cast<float>(l[i])));
    REQUIRE(f.channels[1][i] == static_cast<double>(static_cast<float>(r[i])));
  }

  const auto p = parse_wav(encode_wav(stereo, WavSampleFormat::kPcm16));
  for (std::size_t i = 0; i < l.size(); ++i) REQUIRE(std::abs(p.channels[0][i] - l[i]) <= 0.5 / 32768 + 1e-15);
  // Already-quantized audio survives exactly.
  CHECK(parse_wav(encode_wav(p, WavSampleFormat::kPcm16)).channels == p.channels);

  const auto path = std::filesystem::temp_directory_path() / "clearstream_audio_rt.wav";
  write_wav(path, WaveBuffer::mono({0.25, -0.25, 0.0}), WavSampleFormat::kFloat32);
  const auto m = read_wav(path);
  CHECK(m.num_channels() == 1);
  CHECK(m.channels[0] == std::vector<double>{0.25, -0.25, 0.0});
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_wav("/nonexistent/x.wav"), WavError);
}

TEST_CASE("parser skips unknown chunks") {
  std::vector<uint8_t> payload;
  put16(payload, 0x4000);
  put16(payload, 0xC000);
  put16(payload, 0x0001);
  put16(payload, 0xFFFF);
  const auto w = parse_wav(handmade(1, 2, 15625, 16, payload));
  REQUIRE(w.num_channels() == 2);
  REQUIRE(w.length() == 2);
  CHECK(w.channels[0] == std::vector<double>{0.5, 1.0 / 32768});
  CHECK(w.channels[1] == std::vector<double>{-0.5, -1.0 / 32768});
}

TEST_CASE("parser rejects malformed files") {
  std::vector<uint8_t> payload(8, 0);
  auto ok = handmade(1, 1, 15625, 16, payload);
  CHECK_NOTHROW(parse_wav(ok));

  auto not_riff = ok;
  not_riff[0] = 'X';
  CHECK_THROWS_AS(parse_wav(not_riff), WavError);
  CHECK_THROWS_AS(parse_wav(handmade(1, 1, 15625, 24, payload)), WavError);  // 24-bit
  CHECK_THROWS_AS(parse_wav(handmade(3, 1, 15625, 64, payload)), WavError);  // double
  CHECK_THROWS_AS(parse_wav(handmade(1, 0, 15625, 16, payload)), WavError);
  CHECK_THROWS_AS(parse_wav(handmade(1, 1, 0, 16, payload)), WavError);
  CHECK_THROWS_AS(parse_wav(std::span(ok).first(30)), WavError);
  // A trailing data chunk shorter than its size field keeps the whole frames.
  auto short_data = ok;
  short_data.resize(short_data.size() - 3);
  CHECK(parse_wav(short_data).length() == 2);
  CHECK_THROWS_AS(parse_wav(std::vector<uint8_t>{}), WavError);
}

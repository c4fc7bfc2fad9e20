// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "clearstream/wire.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "clearstream/rng.hpp"

namespace clearstream::wire {

std::array<uint8_t, kPacketBytes> encode_packet(const AudioPacket& p) {
  std::array<uint8_t, kPacketBytes> b{};
  b[0] = static_cast<uint8_t>(p.seq & 0xFF);
  b[1] = static_cast<uint8_t>(p.seq >> 8);
  for (std::size_t i = 0; i < kSamplesPerPacket; ++i) {
    const auto u = static_cast<uint16_t>(p.samples[i]);
    b[2 + 2 * i] = static_cast<uint8_t>(u & 0xFF);
    b[3 + 2 * i] = static_cast<uint8_t>(u >> 8);
  }
  return b;
}

std::array<uint8_t, kPacketBytes> encode_packet(uint16_t seq, std::span<const int16_t> samples) {
  if (samples.size() != kSamplesPerPacket)
    throw WireError("packet payload must hold 90 samples, got " + std::to_string(samples.size()));
  AudioPacket p;
  p.seq = seq;
  std::copy(samples.begin(), samples.end(), p.samples.begin());
  return encode_packet(p);
}

AudioPacket decode_packet(std::span<const uint8_t> bytes) {
  if (bytes.size() != kPacketBytes)
    throw WireError("frame must be 182 bytes, got " + std::to_string(bytes.size()));
  AudioPacket p;
  p.seq = static_cast<uint16_t>(bytes[0] | (bytes[1] << 8));
  for (std::size_t i = 0; i < kSamplesPerPacket; ++i)
    p.samples[i] = static_cast<int16_t>(static_cast<uint16_t>(bytes[2 + 2 * i] | (bytes[3 + 2 * i] << 8)));
  return p;
}

int seq_delta(uint16_t a, uint16_t b) {
  return static_cast<int16_t>(static_cast<uint16_t>(a - b));
}

std::vector<AudioPacket> packetize(std::span<const int16_t> pcm, uint16_t first_seq) {
  std::vector<AudioPacket> out;
  for (std::size_t at = 0; at < pcm.size(); at += kSamplesPerPacket) {
    AudioPacket p;
    p.seq = static_cast<uint16_t>(first_seq + out.size());
    const std::size_t n = std::min(kSamplesPerPacket, pcm.size() - at);
    std::copy_n(pcm.begin() + static_cast<long>(at), n, p.samples.begin());
    out.push_back(p);
  }
  return out;
}

std::vector<int16_t> StreamReassembler::push(const AudioPacket& p) {
  const int delta = seq_delta(p.seq, static_cast<uint16_t>(next_));
  if (delta < 0) {
    ++duplicates_;
    return {};
  }
  std::vector<int16_t> fresh(static_cast<std::size_t>(delta) * kSamplesPerPacket, 0);
  fresh.insert(fresh.end(), p.samples.begin(), p.samples.end());
  concealed_ += static_cast<uint64_t>(delta);
  next_ += static_cast<uint64_t>(delta) + 1;
  out_.insert(out_.end(), fresh.begin(), fresh.end());
  return fresh;
}

std::vector<int16_t> StreamReassembler::pad_to(uint64_t packets) {
  if (packets <= next_) return {};
  std::vector<int16_t> fresh((packets - next_) * kSamplesPerPacket, 0);
  concealed_ += packets - next_;
  next_ = packets;
  out_.insert(out_.end(), fresh.begin(), fresh.end());
  return fresh;
}

LossResult simulate_loss(std::span<const AudioPacket> packets, double p, uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("drop probability must be in [0, 1]");
  Rng rng(seed);
  LossResult r;
  for (const auto& pk : packets) {
    if (rng.bernoulli(p))
      r.dropped.push_back(pk.seq);
    else
      r.delivered.push_back(pk);
  }
  return r;
}

void write_hex_dump(std::ostream& out, std::span<const DumpRecord> records) {
  static constexpr char kHex[] = "0123456789abcdef";
  for (const auto& r : records) {
    const auto bytes = encode_packet(r.packet);
    std::string line(1, r.channel);
    line += ' ';
    for (uint8_t b : bytes) {
      line += kHex[b >> 4];
      line += kHex[b & 0xF];
    }
    out << line << '\n';
  }
}

std::vector<DumpRecord> read_hex_dump(std::istream& in) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<DumpRecord> out;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw WireError("hex dump line " + std::to_string(no) + ": " + why);
    };
    if (line.size() != 2 + 2 * kPacketBytes || line[1] != ' ') fail("malformed frame");
    if (line[0] != 'L' && line[0] != 'R') fail("channel must be L or R");
    std::array<uint8_t, kPacketBytes> bytes{};
    for (std::size_t i = 0; i < kPacketBytes; ++i) {
      const int hi = nibble(line[2 + 2 * i]), lo = nibble(line[3 + 2 * i]);
      if (hi < 0 || lo < 0) fail("bad hex digit");
      bytes[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    out.push_back({line[0], decode_packet(bytes)});
  }
  return out;
}

}  // namespace clearstream::wire

// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

// Earbud-to-host audio frames: u16 sequence number then 90 PCM samples, all
// little-endian, 182 bytes. The host keeps one reassembler per channel; a
// packet with sequence s always lands at sample offset 90 * s, so lost
// packets become zeros and the two channels stay aligned.
namespace clearstream::wire {

inline constexpr std::size_t kSamplesPerPacket = 90;
inline constexpr std::size_t kPacketBytes = 2 + 2 * kSamplesPerPacket;

struct AudioPacket {
  uint16_t seq = 0;
  std::array<int16_t, kSamplesPerPacket> samples{};

  bool operator==(const AudioPacket&) const = default;
};

class WireError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::array<uint8_t, kPacketBytes> encode_packet(const AudioPacket& p);
/// Throws WireError unless samples holds exactly 90 values.
std::array<uint8_t, kPacketBytes> encode_packet(uint16_t seq, std::span<const int16_t> samples);
/// Throws WireError unless bytes holds exactly 182 bytes.
AudioPacket decode_packet(std::span<const uint8_t> bytes);

/// Signed distance from b to a modulo 2^16, in [-2^15, 2^15).
int seq_delta(uint16_t a, uint16_t b);

/// Splits PCM into packets, zero-padding the last one.
std::vector<AudioPacket> packetize(std::span<const int16_t> pcm, uint16_t first_seq = 0);

class StreamReassembler {
 public:
  /// Appends the packet at its sequence offset and returns the samples that
  /// became available (zeros for skipped packets, then the payload).
  /// Packets older than the next expected one are ignored and counted.
  std::vector<int16_t> push(const AudioPacket& p);

  /// Conceals trailing losses so the stream covers `packets` packets.
  std::vector<int16_t> pad_to(uint64_t packets);

  uint64_t packets_covered() const { return next_; }
  uint64_t emitted_samples() const { return next_ * kSamplesPerPacket; }
  uint64_t duplicates() const { return duplicates_; }
  uint64_t concealed() const { return concealed_; }
  const std::vector<int16_t>& output() const { return out_; }

 private:
  uint64_t next_ = 0;  // unwrapped index of the next expected packet
  uint64_t duplicates_ = 0;
  uint64_t concealed_ = 0;
  std::vector<int16_t> out_;
};

struct LossResult {
  std::vector<AudioPacket> delivered;
  std::vector<uint16_t> dropped;  // sequence numbers
};

/// Drops each packet independently with probability p.
LossResult simulate_loss(std::span<const AudioPacket> packets, double p, uint64_t seed);

// Replay files: one frame per line, "<L|R> <364 hex digits>"; lines starting
// with '#' and blank lines are skipped.
struct DumpRecord {
  char channel = 'L';
  AudioPacket packet;

  bool operator==(const DumpRecord&) const = default;
};

void write_hex_dump(std::ostream& out, std::span<const DumpRecord> records);
/// Throws WireError naming the offending line.
std::vector<DumpRecord> read_hex_dump(std::istream& in);

}  // namespace clearstream::wire

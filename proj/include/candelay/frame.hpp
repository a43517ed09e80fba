#pragma once

// Bit-accurate CAN 2.0A data frame serialization: field layout, CRC-15,
// stuff bit handling, and rising-edge enumeration inside the measurement
// window.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "candelay/errors.hpp"

namespace candelay {

inline constexpr uint16_t kMaxBaseId = 0x7FF;  // 11-bit identifiers only
inline constexpr int kMaxDlc = 8;
inline constexpr uint16_t kCrc15Poly = 0x4599;  // x^15+x^14+x^10+x^8+x^7+x^4+x^3+1
inline constexpr int kCrcBits = 15;
inline constexpr int kIntermissionBits = 3;
inline constexpr int kDefaultWindowBits = 34;
inline constexpr size_t kWholeStream = SIZE_MAX;

// Logical CAN data frame before bit-level encoding. Base frame format only.
struct FrameSpec {
  uint16_t arbitration_id = 0;
  bool rtr = false;  // always false; remote frames are not supported
  uint8_t dlc = 0;
  std::vector<uint8_t> data;

  void validate() const;  // throws DataError
};

// Bus-level bit sequence; 0 = dominant, 1 = recessive.
struct BitStream {
  std::vector<uint8_t> bits;
  bool stuffed = false;

  size_t size() const { return bits.size(); }
  uint8_t operator[](size_t i) const { return bits[i]; }
  bool operator==(const BitStream&) const = default;
};

// CRC-15 over an unstuffed bit sequence, zero initial remainder.
uint16_t crc15(std::span<const uint8_t> bits);

// Unstuffed full frame: SOF, ID(11), RTR, IDE, r0, DLC(4), data, CRC-15,
// CRC delimiter, ACK slot (recessive as transmitted), ACK delimiter,
// EOF(7). Length 44 + 8*dlc bits.
BitStream serialize(const FrameSpec& frame);

// On-wire message length before stuffing with the 3-bit intermission
// counted: 47 for DLC=0, 111 for DLC=8.
size_t message_bits_with_intermission(const FrameSpec& frame);

// Leading bits subject to stuffing (SOF through the end of the CRC
// sequence) for an unstuffed full frame of the given length.
size_t stuff_region_bits(size_t unstuffed_size);

// Inserts a complement bit after every run of five identical bits whose
// fifth bit lies within the first region_bits original bits. Inserted
// stuff bits count toward subsequent runs. kWholeStream stuffs everything.
BitStream stuff(const BitStream& unstuffed, size_t region_bits = kWholeStream);

// Inverse of stuff() with the same region accounting. Throws DataError on
// a missing or non-complementary stuff bit.
BitStream destuff(const BitStream& stuffed, size_t region_bits = kWholeStream);

// serialize + stuff with the frame's own stuff region.
BitStream serialize_stuffed(const FrameSpec& frame);

// Bit indices k in [1, window_bits] where bit[k-1] is dominant and bit[k]
// recessive, i.e. rising instants inside the window. Throws DataError when
// the stream is shorter than the window.
std::vector<int> rising_edges(const BitStream& stuffed, int window_bits = kDefaultWindowBits);

}  // namespace candelay

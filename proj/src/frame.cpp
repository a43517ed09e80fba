#include "candelay/frame.hpp"

#include <string>

namespace candelay {

namespace {

void append_msb_first(std::vector<uint8_t>& bits, uint32_t value, int width) {
  for (int i = width - 1; i >= 0; --i) {
    bits.push_back(static_cast<uint8_t>((value >> i) & 1u));
  }
}

}  // namespace

void FrameSpec::validate() const {
  if (arbitration_id > kMaxBaseId) {
    throw DataError("arbitration id " + std::to_string(arbitration_id) +
                    " does not fit in 11 bits");
  }
  if (rtr) {
    throw DataError("remote frames are not supported");
  }
  if (dlc > kMaxDlc) {
    throw DataError("dlc " + std::to_string(dlc) + " out of range [0, 8]");
  }
  if (data.size() != dlc) {
    throw DataError("data length " + std::to_string(data.size()) +
                    " does not match dlc " + std::to_string(dlc));
  }
}

uint16_t crc15(std::span<const uint8_t> bits) {
  uint16_t crc = 0;
  for (uint8_t bit : bits) {
    const uint16_t crcnxt = static_cast<uint16_t>(bit ^ ((crc >> 14) & 1u));
    crc = static_cast<uint16_t>((crc << 1) & 0x7FFF);
    if (crcnxt) {
      crc ^= kCrc15Poly;
    }
  }
  return crc;
}

BitStream serialize(const FrameSpec& frame) {
  frame.validate();
  BitStream out;
  out.bits.reserve(44 + 8 * static_cast<size_t>(frame.dlc));
  out.bits.push_back(0);  // SOF
  append_msb_first(out.bits, frame.arbitration_id, 11);
  out.bits.push_back(0);  // RTR, dominant for data frames
  out.bits.push_back(0);  // IDE, dominant in base format
  out.bits.push_back(0);  // r0
  append_msb_first(out.bits, frame.dlc, 4);
  for (uint8_t byte : frame.data) {
    append_msb_first(out.bits, byte, 8);
  }
  const uint16_t crc = crc15(out.bits);
  append_msb_first(out.bits, crc, kCrcBits);
  out.bits.push_back(1);  // CRC delimiter
  out.bits.push_back(1);  // ACK slot, recessive as the sender transmits it
  out.bits.push_back(1);  // ACK delimiter
  for (int i = 0; i < 7; ++i) {
    out.bits.push_back(1);  // EOF
  }
  out.stuffed = false;
  return out;
}

size_t message_bits_with_intermission(const FrameSpec& frame) {
  frame.validate();
  return 44 + 8 * static_cast<size_t>(frame.dlc) + kIntermissionBits;
}

size_t stuff_region_bits(size_t unstuffed_size) {
  // CRC delimiter + ACK slot + ACK delimiter + EOF are never stuffed.
  constexpr size_t kUnstuffedTail = 10;
  if (unstuffed_size < kUnstuffedTail) {
    throw DataError("stream too short to carry a frame tail");
  }
  return unstuffed_size - kUnstuffedTail;
}

BitStream stuff(const BitStream& unstuffed, size_t region_bits) {
  if (unstuffed.stuffed) {
    throw DataError("stream is already stuffed");
  }
  BitStream out;
  out.bits.reserve(unstuffed.size() + unstuffed.size() / 5 + 1);
  uint8_t run_value = 2;  // neither 0 nor 1
  size_t run_length = 0;
  size_t consumed = 0;
  for (uint8_t bit : unstuffed.bits) {
    out.bits.push_back(bit);
    ++consumed;
    if (consumed > region_bits) {
      continue;
    }
    if (bit == run_value) {
      ++run_length;
    } else {
      run_value = bit;
      run_length = 1;
    }
    if (run_length == 5) {
      const uint8_t stuff_bit = static_cast<uint8_t>(1 - bit);
      out.bits.push_back(stuff_bit);
      run_value = stuff_bit;
      run_length = 1;
    }
  }
  out.stuffed = true;
  return out;
}

BitStream destuff(const BitStream& stuffed, size_t region_bits) {
  if (!stuffed.stuffed) {
    throw DataError("stream is not stuffed");
  }
  BitStream out;
  out.bits.reserve(stuffed.size());
  uint8_t run_value = 2;
  size_t run_length = 0;
  size_t emitted = 0;
  for (size_t i = 0; i < stuffed.size(); ++i) {
    const uint8_t bit = stuffed[i];
    out.bits.push_back(bit);
    ++emitted;
    if (emitted > region_bits) {
      continue;
    }
    if (bit == run_value) {
      ++run_length;
    } else {
      run_value = bit;
      run_length = 1;
    }
    if (run_length == 5) {
      if (i + 1 >= stuffed.size()) {
        throw DataError("stuffed stream ends inside a five-bit run");
      }
      const uint8_t stuff_bit = stuffed[i + 1];
      if (stuff_bit != 1 - bit) {
        throw DataError("stuff bit at position " + std::to_string(i + 1) +
                        " is not the run complement");
      }
      ++i;  // drop the stuff bit
      run_value = stuff_bit;
      run_length = 1;
    }
  }
  out.stuffed = false;
  return out;
}

BitStream serialize_stuffed(const FrameSpec& frame) {
  const BitStream unstuffed = serialize(frame);
  return stuff(unstuffed, stuff_region_bits(unstuffed.size()));
}

std::vector<int> rising_edges(const BitStream& stuffed, int window_bits) {
  if (window_bits < 1 || static_cast<size_t>(window_bits) > stuffed.size()) {
    throw DataError("window of " + std::to_string(window_bits) +
                    " bits exceeds stream length " + std::to_string(stuffed.size()));
  }
  std::vector<int> indices;
  const size_t last = std::min<size_t>(window_bits, stuffed.size() - 1);
  for (size_t k = 1; k <= last; ++k) {
    if (stuffed[k - 1] == 0 && stuffed[k] == 1) {
      indices.push_back(static_cast<int>(k));
    }
  }
  return indices;
}

}  // namespace candelay

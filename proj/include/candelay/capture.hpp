#pragma once

// Timer-capture front-end emulation: SOF latching, windowed rising-edge
// capture, the 32-bit record codec and delay-time reconstruction.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "candelay/physim.hpp"

namespace candelay {

inline constexpr int kCounterBits = 21;
inline constexpr uint32_t kCounterModulus = 1u << kCounterBits;
inline constexpr uint32_t kCounterMask = kCounterModulus - 1;

// One 32-bit capture word: 11-bit arbitration id in the high bits, 21-bit
// counter value in the low bits.
struct CaptureRecord {
  uint16_t arbitration_id;
  uint32_t counter;
};

uint32_t encode_record(uint16_t arbitration_id, uint32_t counter);  // DataError on range
CaptureRecord decode_record(uint32_t word);

// All counter captures belonging to one frame.
struct MessageCapture {
  uint16_t arbitration_id = 0;
  uint32_t sof_counter = 0;                 // latched at the SOF falling edge
  std::vector<uint32_t> edge_counters;      // one per in-window rising edge
  std::optional<std::string> true_sender;   // ground truth, simulation only
};

// Latches the free-running counter (floor(t / tick)) at the SOF falling
// edge, then captures it at every rising edge until window_bits bit times
// later; edges at or after the boundary are discarded. start_time_ns
// positions the trace on the counter's timeline.
MessageCapture acquire(const EdgeTrace& trace, const BusConfig& config,
                       int64_t start_time_ns = 0);

struct DelaySample {
  int32_t elapsed_bits;
  double delay_ns;
};

// Wrap-corrected nanoseconds between SOF and a captured edge.
int64_t elapsed_ns(const MessageCapture& capture, size_t edge_index,
                   int64_t tick_ns = 20);

// Offset of an observed edge from its ideal bit boundary. The quarter-bit
// addend recovers the elapsed bit count before the boundary is subtracted;
// at 500 kbps this is floor((t + 500) / 2000).
DelaySample delay_of(int64_t elapsed_time_ns, int64_t bit_time_ns = 2000);

// delay_of over every captured edge; the per-message sample the feature
// statistics are computed from.
std::vector<double> message_delays(const MessageCapture& capture,
                                   int64_t bit_time_ns = 2000, int64_t tick_ns = 20);

}  // namespace candelay

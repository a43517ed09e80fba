#include "candelay/capture.hpp"

#include <cmath>
#include <string>

namespace candelay {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

}  // namespace

uint32_t encode_record(uint16_t arbitration_id, uint32_t counter) {
  if (arbitration_id > kMaxBaseId) {
    throw DataError("record id " + std::to_string(arbitration_id) + " exceeds 11 bits");
  }
  if (counter > kCounterMask) {
    throw DataError("record counter " + std::to_string(counter) + " exceeds 21 bits");
  }
  return (static_cast<uint32_t>(arbitration_id) << kCounterBits) | counter;
}

CaptureRecord decode_record(uint32_t word) {
  return CaptureRecord{static_cast<uint16_t>(word >> kCounterBits), word & kCounterMask};
}

MessageCapture acquire(const EdgeTrace& trace, const BusConfig& config,
                       int64_t start_time_ns) {
  if (trace.edges.empty() || trace.edges.front().dir != EdgeDir::Falling) {
    throw DataError("trace must begin with the SOF falling edge");
  }
  const int64_t tick = config.counter_tick_ns;
  const double window_ns = static_cast<double>(config.window_bits) * config.bit_time_ns();

  const auto tick_of = [&](double t_ns) {
    return static_cast<int64_t>(
        std::floor((static_cast<double>(start_time_ns) + t_ns) / static_cast<double>(tick)));
  };

  const int64_t sof_tick = tick_of(trace.edges.front().time_ns);
  MessageCapture capture;
  capture.arbitration_id = trace.frame.arbitration_id;
  capture.sof_counter = static_cast<uint32_t>(sof_tick) & kCounterMask;
  capture.true_sender = trace.sender;

  for (const Edge& edge : trace.edges) {
    if (edge.dir != EdgeDir::Rising) {
      continue;
    }
    const int64_t edge_tick = tick_of(edge.time_ns);
    const double elapsed = static_cast<double>((edge_tick - sof_tick) * tick);
    if (elapsed >= window_ns) {
      break;  // measurement ends window_bits after SOF
    }
    capture.edge_counters.push_back(static_cast<uint32_t>(edge_tick) & kCounterMask);
  }
  if (capture.edge_counters.empty()) {
    throw DataError("no rising edge captured inside the window");
  }
  return capture;
}

int64_t elapsed_ns(const MessageCapture& capture, size_t edge_index, int64_t tick_ns) {
  if (edge_index >= capture.edge_counters.size()) {
    throw DataError("edge index " + std::to_string(edge_index) + " out of range");
  }
  // Single-wrap correction; the window is far shorter than the counter period.
  const uint32_t delta =
      (capture.edge_counters[edge_index] - capture.sof_counter) & kCounterMask;
  return static_cast<int64_t>(delta) * tick_ns;
}

DelaySample delay_of(int64_t elapsed_time_ns, int64_t bit_time_ns) {
  const int64_t bits = floor_div(elapsed_time_ns + bit_time_ns / 4, bit_time_ns);
  const int64_t ideal = bits * bit_time_ns;
  return DelaySample{static_cast<int32_t>(bits),
                     static_cast<double>(elapsed_time_ns - ideal)};
}

std::vector<double> message_delays(const MessageCapture& capture, int64_t bit_time_ns,
                                   int64_t tick_ns) {
  if (capture.edge_counters.empty()) {
    throw DataError("capture holds no edges");
  }
  std::vector<double> delays;
  delays.reserve(capture.edge_counters.size());
  for (size_t i = 0; i < capture.edge_counters.size(); ++i) {
    delays.push_back(delay_of(elapsed_ns(capture, i, tick_ns), bit_time_ns).delay_ns);
  }
  return delays;
}

}  // namespace candelay

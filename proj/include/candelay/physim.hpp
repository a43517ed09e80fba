#pragma once

// Monitor-point edge-time synthesis: per-ECU propagation delays, crystal
// clock deviation and per-edge jitter applied to a stuffed bit stream.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "candelay/frame.hpp"

namespace candelay {

// Physical fingerprint of one ECU as seen from the monitor point. The
// monitor's own receive path is folded into the two delays; only their
// difference is observable.
struct EcuProfile {
  std::string label;
  double fall_delay_ns = 0.0;    // sender Tx fall -> monitor Rx fall
  double rise_delay_ns = 0.0;    // sender Tx rise -> monitor Rx rise
  double jitter_sigma_ns = 0.0;  // per-edge Gaussian noise
  double clock_ppm = 0.0;        // crystal frequency deviation

  void validate() const;  // throws ConfigError
};

struct BusConfig {
  int64_t bitrate_bps = 500000;
  int64_t counter_tick_ns = 20;
  int window_bits = kDefaultWindowBits;
  std::vector<EcuProfile> ecus;
  std::map<uint16_t, std::string> id_assignment;

  double bit_time_ns() const { return 1e9 / static_cast<double>(bitrate_bps); }
  const EcuProfile* find_ecu(const std::string& label) const;
  // Legitimate sender of an id; throws ConfigError when unassigned.
  const EcuProfile& sender_of(uint16_t arbitration_id) const;
  void validate() const;
};

enum class EdgeDir { Falling, Rising };

struct Edge {
  double time_ns;  // relative to the sender's true SOF instant
  EdgeDir dir;
};

// Bus-level edge sequence for one frame as observed at the monitor point.
struct EdgeTrace {
  FrameSpec frame;
  std::string sender;
  std::vector<Edge> edges;
};

struct ClockError {
  double delta_f_hz;
  double t_e_ns;
};

// Frequency deviation of a crystal with the given tolerance and the
// resulting per-bit period error.
ClockError clock_error(double f_bit_hz, double f_tol_ppm);

// Emits every edge of the stuffed stream. The sender's k-th bit boundary
// falls at k / (f_bit + delta_f); falling edges are delayed by fall_delay,
// rising edges by rise_delay, each with independent Gaussian noise.
EdgeTrace emit_waveform(const EcuProfile& profile, const FrameSpec& frame,
                        const BitStream& stuffed, double bit_time_ns,
                        uint64_t rng_seed);

// per_id_count frames per (id, sender) assignment with randomized DLC and
// payload bytes. Deterministic under the seed.
std::vector<EdgeTrace> schedule_traffic(const BusConfig& config, int per_id_count,
                                        uint64_t rng_seed);

}  // namespace candelay

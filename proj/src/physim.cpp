#include "candelay/physim.hpp"

#include <cmath>
#include <set>
#include <string>

#include "candelay/rng.hpp"

namespace candelay {

void EcuProfile::validate() const {
  if (label.empty()) {
    throw ConfigError("ECU profile without a label");
  }
  const bool finite = std::isfinite(fall_delay_ns) && std::isfinite(rise_delay_ns) &&
                      std::isfinite(jitter_sigma_ns) && std::isfinite(clock_ppm);
  if (!finite) {
    throw ConfigError("ECU " + label + ": non-finite profile value");
  }
  if (fall_delay_ns < 0.0 || rise_delay_ns < 0.0 || jitter_sigma_ns < 0.0) {
    throw ConfigError("ECU " + label + ": delays and jitter must be non-negative");
  }
  if (std::abs(clock_ppm) > 100.0) {
    throw ConfigError("ECU " + label + ": clock deviation outside +-100 ppm");
  }
}

const EcuProfile* BusConfig::find_ecu(const std::string& label) const {
  for (const EcuProfile& ecu : ecus) {
    if (ecu.label == label) {
      return &ecu;
    }
  }
  return nullptr;
}

const EcuProfile& BusConfig::sender_of(uint16_t arbitration_id) const {
  const auto it = id_assignment.find(arbitration_id);
  if (it == id_assignment.end()) {
    throw ConfigError("arbitration id " + std::to_string(arbitration_id) +
                      " has no assigned sender");
  }
  const EcuProfile* ecu = find_ecu(it->second);
  if (ecu == nullptr) {
    throw ConfigError("arbitration id " + std::to_string(arbitration_id) +
                      " is assigned to unknown ECU " + it->second);
  }
  return *ecu;
}

void BusConfig::validate() const {
  if (bitrate_bps <= 0) {
    throw ConfigError("bitrate must be positive");
  }
  if (counter_tick_ns <= 0) {
    throw ConfigError("counter tick must be positive");
  }
  if (window_bits < 1) {
    throw ConfigError("window must cover at least one bit");
  }
  std::set<std::string> labels;
  for (const EcuProfile& ecu : ecus) {
    ecu.validate();
    if (!labels.insert(ecu.label).second) {
      throw ConfigError("duplicate ECU label " + ecu.label);
    }
  }
  for (const auto& [id, label] : id_assignment) {
    if (id > kMaxBaseId) {
      throw ConfigError("assigned id " + std::to_string(id) + " does not fit in 11 bits");
    }
    if (labels.count(label) == 0) {
      throw ConfigError("id " + std::to_string(id) + " assigned to unknown ECU " + label);
    }
  }
}

ClockError clock_error(double f_bit_hz, double f_tol_ppm) {
  const double delta_f = f_bit_hz * f_tol_ppm * 1e-6;
  const double t_e_s = 1.0 / (f_bit_hz + delta_f) - 1.0 / f_bit_hz;
  return ClockError{delta_f, t_e_s * 1e9};
}

EdgeTrace emit_waveform(const EcuProfile& profile, const FrameSpec& frame,
                        const BitStream& stuffed, double bit_time_ns,
                        uint64_t rng_seed) {
  if (stuffed.size() == 0 || stuffed[0] != 0) {
    throw DataError("stream must begin with a dominant SOF");
  }
  const double f_bit = 1e9 / bit_time_ns;
  const ClockError err = clock_error(f_bit, profile.clock_ppm);
  const double period_ns = 1e9 / (f_bit + err.delta_f_hz);

  Rng rng(rng_seed);
  EdgeTrace trace;
  trace.frame = frame;
  trace.sender = profile.label;
  uint8_t prev = 1;  // bus idles recessive
  for (size_t k = 0; k < stuffed.size(); ++k) {
    const uint8_t bit = stuffed[k];
    if (bit == prev) {
      continue;
    }
    const double boundary = static_cast<double>(k) * period_ns;
    const EdgeDir dir = bit == 0 ? EdgeDir::Falling : EdgeDir::Rising;
    const double delay = dir == EdgeDir::Falling ? profile.fall_delay_ns : profile.rise_delay_ns;
    trace.edges.push_back(Edge{boundary + delay + rng.gaussian(profile.jitter_sigma_ns), dir});
    prev = bit;
  }
  for (size_t i = 1; i < trace.edges.size(); ++i) {
    if (trace.edges[i].time_ns <= trace.edges[i - 1].time_ns) {
      throw DataError("edge times out of order; jitter exceeds the bit time");
    }
  }
  return trace;
}

std::vector<EdgeTrace> schedule_traffic(const BusConfig& config, int per_id_count,
                                        uint64_t rng_seed) {
  config.validate();
  if (per_id_count < 1) {
    throw ConfigError("per-id message count must be at least 1");
  }
  Rng rng(rng_seed);
  std::vector<EdgeTrace> traces;
  traces.reserve(config.id_assignment.size() * static_cast<size_t>(per_id_count));
  const double bit_ns = config.bit_time_ns();
  for (const auto& [id, label] : config.id_assignment) {
    const EcuProfile& sender = config.sender_of(id);
    for (int n = 0; n < per_id_count; ++n) {
      FrameSpec frame;
      frame.arbitration_id = id;
      frame.dlc = static_cast<uint8_t>(rng.below(kMaxDlc + 1));
      frame.data.resize(frame.dlc);
      for (uint8_t& byte : frame.data) {
        byte = rng.byte();
      }
      const BitStream stuffed = serialize_stuffed(frame);
      traces.push_back(emit_waveform(sender, frame, stuffed, bit_ns, rng.next_u64()));
    }
  }
  return traces;
}

}  // namespace candelay

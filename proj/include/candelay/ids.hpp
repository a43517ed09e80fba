#pragma once

// Intrusion detection on top of the classifier: compare the predicted
// sender of each message against the ECU registered for its arbitration id.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "candelay/capture.hpp"
#include "candelay/classify.hpp"
#include "candelay/errors.hpp"
#include "candelay/physim.hpp"

namespace candelay {

// arbitration id -> legitimate sender label
using SenderRegistry = std::map<uint16_t, std::string>;

SenderRegistry registry_from_config(const BusConfig& config);

enum class VerdictKind { Normal, Attack };

// What to do with a message whose arbitration id has no registered sender.
enum class UnregisteredIdPolicy { Warn, FlagAttack };

struct Verdict {
  VerdictKind kind = VerdictKind::Normal;
  std::string predicted;   // classifier output
  std::string registered;  // expected sender for the id
};

// Classifies the message's delay features (projected onto the model's
// feature set) and flags a mismatch against the registry. Unregistered ids
// raise ConfigError.
Verdict judge(const KnnModel& model, const SenderRegistry& registry,
              const MessageCapture& capture, int64_t bit_time_ns = 2000,
              int64_t tick_ns = 20);

// Same, but an unregistered id resolves by policy (registered stays empty:
// Warn passes the message, FlagAttack raises an alarm).
Verdict judge(const KnnModel& model, const SenderRegistry& registry,
              const MessageCapture& capture, UnregisteredIdPolicy policy,
              int64_t bit_time_ns = 2000, int64_t tick_ns = 20);

struct LabeledMessage {
  MessageCapture capture;
  bool is_attack = false;
};

struct ScenarioParams {
  uint16_t spoofed_id = 0;
  int attack_count = 1000;
  int normal_count = 1000;
  uint64_t seed = 0;
};

// Attack traffic for the spoofed id comes from another ECU already on the
// bus; normal traffic comes from the registered sender. Messages are
// shuffled together.
std::vector<LabeledMessage> scenario_compromised(const BusConfig& config,
                                                 const std::string& attacker_label,
                                                 const ScenarioParams& params);

// Attack traffic comes from an ECU that is absent from the training fleet.
std::vector<LabeledMessage> scenario_unmonitored(const BusConfig& config,
                                                 const EcuProfile& foreign,
                                                 const ScenarioParams& params);

struct DetectionReport {
  uint64_t attacks_flagged = 0;  // true positives
  uint64_t attacks_passed = 0;   // false negatives
  uint64_t normals_flagged = 0;  // false positives
  uint64_t normals_passed = 0;   // true negatives

  double tpr() const;
  double tnr() const;
  double fpr() const;
  double fnr() const;
};

DetectionReport tally(const std::vector<Verdict>& verdicts,
                      const std::vector<bool>& ground_truth);

// Flat key/value serialization plus a human-readable two-by-two table.
std::string report_kv(const DetectionReport& report);
DetectionReport parse_report_kv(std::string_view text);
std::string render_report_table(const DetectionReport& report);

void save_report(const DetectionReport& report, const std::filesystem::path& path);
DetectionReport load_report(const std::filesystem::path& path);

}  // namespace candelay

#include "candelay/ids.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "candelay/frame.hpp"
#include "candelay/io.hpp"
#include "candelay/rng.hpp"

namespace candelay {

SenderRegistry registry_from_config(const BusConfig& config) {
  return SenderRegistry(config.id_assignment.begin(), config.id_assignment.end());
}

namespace {

std::string classify_capture(const KnnModel& model, const MessageCapture& capture,
                             int64_t bit_time_ns, int64_t tick_ns) {
  const std::vector<double> delays = message_delays(capture, bit_time_ns, tick_ns);
  const FeatureVector fv = extract(delays);
  return predict(model, project(fv, model.features)).label;
}

}  // namespace

Verdict judge(const KnnModel& model, const SenderRegistry& registry,
              const MessageCapture& capture, int64_t bit_time_ns, int64_t tick_ns) {
  const auto it = registry.find(capture.arbitration_id);
  if (it == registry.end()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%03x", capture.arbitration_id);
    throw ConfigError(std::string("unregistered arbitration id ") + buf);
  }
  Verdict v;
  v.predicted = classify_capture(model, capture, bit_time_ns, tick_ns);
  v.registered = it->second;
  v.kind = v.predicted == v.registered ? VerdictKind::Normal : VerdictKind::Attack;
  return v;
}

Verdict judge(const KnnModel& model, const SenderRegistry& registry,
              const MessageCapture& capture, UnregisteredIdPolicy policy,
              int64_t bit_time_ns, int64_t tick_ns) {
  if (registry.contains(capture.arbitration_id))
    return judge(model, registry, capture, bit_time_ns, tick_ns);
  Verdict v;
  v.predicted = classify_capture(model, capture, bit_time_ns, tick_ns);
  v.kind = policy == UnregisteredIdPolicy::FlagAttack ? VerdictKind::Attack
                                                      : VerdictKind::Normal;
  return v;
}

namespace {

FrameSpec random_frame(uint16_t id, Rng& rng) {
  FrameSpec frame;
  frame.arbitration_id = id;
  frame.dlc = static_cast<uint8_t>(rng.below(kMaxDlc + 1));
  frame.data.resize(frame.dlc);
  for (auto& b : frame.data) b = rng.byte();
  return frame;
}

std::vector<LabeledMessage> build_scenario(const BusConfig& config,
                                           const EcuProfile& attacker,
                                           const EcuProfile& legit,
                                           const ScenarioParams& params) {
  if (params.attack_count < 0 || params.normal_count < 0 ||
      params.attack_count + params.normal_count < 1)
    throw ConfigError("scenario: message counts must be non-negative and not all zero");

  Rng rng(params.seed);

  std::vector<int> is_attack;
  is_attack.insert(is_attack.end(), static_cast<size_t>(params.attack_count), 1);
  is_attack.insert(is_attack.end(), static_cast<size_t>(params.normal_count), 0);
  rng.shuffle(is_attack);

  const double bit_ns = config.bit_time_ns();
  std::vector<LabeledMessage> out;
  out.reserve(is_attack.size());
  double t = 0.0;
  for (int attack : is_attack) {
    const EcuProfile& sender = attack ? attacker : legit;
    const FrameSpec frame = random_frame(params.spoofed_id, rng);
    const BitStream stuffed = serialize_stuffed(frame);
    const EdgeTrace trace = emit_waveform(sender, frame, stuffed, bit_ns, rng.next_u64());

    LabeledMessage msg;
    msg.capture = acquire(trace, config, static_cast<int64_t>(t));
    msg.capture.true_sender = sender.label;
    msg.is_attack = attack != 0;
    out.push_back(std::move(msg));

    const double frame_ns = static_cast<double>(stuffed.size() + kIntermissionBits) * bit_ns;
    const double gap_ns = static_cast<double>(10 + rng.below(64)) * bit_ns;
    t += frame_ns + gap_ns;
  }
  return out;
}

}  // namespace

std::vector<LabeledMessage> scenario_compromised(const BusConfig& config,
                                                 const std::string& attacker_label,
                                                 const ScenarioParams& params) {
  config.validate();
  const EcuProfile& legit = config.sender_of(params.spoofed_id);
  const EcuProfile* attacker = config.find_ecu(attacker_label);
  if (!attacker) throw ConfigError("scenario: unknown attacker '" + attacker_label + "'");
  if (attacker->label == legit.label)
    throw ConfigError("scenario: attacker '" + attacker_label +
                      "' already owns the spoofed id");
  return build_scenario(config, *attacker, legit, params);
}

std::vector<LabeledMessage> scenario_unmonitored(const BusConfig& config,
                                                 const EcuProfile& foreign,
                                                 const ScenarioParams& params) {
  config.validate();
  foreign.validate();
  for (const EcuProfile& ecu : config.ecus)
    if (ecu.label == foreign.label)
      throw ConfigError("scenario: foreign ECU label '" + foreign.label +
                        "' collides with the fleet");
  return build_scenario(config, foreign, config.sender_of(params.spoofed_id), params);
}

namespace {

double rate(uint64_t num, uint64_t denom) {
  return denom == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(denom);
}

}  // namespace

double DetectionReport::tpr() const {
  return rate(attacks_flagged, attacks_flagged + attacks_passed);
}
double DetectionReport::tnr() const {
  return rate(normals_passed, normals_flagged + normals_passed);
}
double DetectionReport::fpr() const {
  return rate(normals_flagged, normals_flagged + normals_passed);
}
double DetectionReport::fnr() const {
  return rate(attacks_passed, attacks_flagged + attacks_passed);
}

DetectionReport tally(const std::vector<Verdict>& verdicts,
                      const std::vector<bool>& ground_truth) {
  if (verdicts.size() != ground_truth.size())
    throw DataError("tally: verdict/ground-truth length mismatch");
  DetectionReport r;
  for (size_t i = 0; i < verdicts.size(); ++i) {
    const bool flagged = verdicts[i].kind == VerdictKind::Attack;
    if (ground_truth[i])
      ++(flagged ? r.attacks_flagged : r.attacks_passed);
    else
      ++(flagged ? r.normals_flagged : r.normals_passed);
  }
  return r;
}

std::string report_kv(const DetectionReport& report) {
  std::string out;
  out += "attacks_flagged " + std::to_string(report.attacks_flagged) + "\n";
  out += "attacks_passed " + std::to_string(report.attacks_passed) + "\n";
  out += "normals_flagged " + std::to_string(report.normals_flagged) + "\n";
  out += "normals_passed " + std::to_string(report.normals_passed) + "\n";
  out += "tpr " + format_double(report.tpr()) + "\n";
  out += "tnr " + format_double(report.tnr()) + "\n";
  out += "fpr " + format_double(report.fpr()) + "\n";
  out += "fnr " + format_double(report.fnr()) + "\n";
  return out;
}

DetectionReport parse_report_kv(std::string_view text) {
  DetectionReport r;
  bool have_af = false, have_ap = false, have_nf = false, have_np = false;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key, value;
    if (!(fields >> key >> value)) throw DataError("report: bad line '" + line + "'");
    if (key == "attacks_flagged") {
      r.attacks_flagged = parse_u64(value);
      have_af = true;
    } else if (key == "attacks_passed") {
      r.attacks_passed = parse_u64(value);
      have_ap = true;
    } else if (key == "normals_flagged") {
      r.normals_flagged = parse_u64(value);
      have_nf = true;
    } else if (key == "normals_passed") {
      r.normals_passed = parse_u64(value);
      have_np = true;
    } else if (key == "tpr" || key == "tnr" || key == "fpr" || key == "fnr") {
      parse_double(value);  // derived; recomputed from the counts
    } else {
      throw DataError("report: unknown key '" + key + "'");
    }
  }
  if (!(have_af && have_ap && have_nf && have_np))
    throw DataError("report: missing counts");
  return r;
}

std::string render_report_table(const DetectionReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %16s %16s\n", "", "flagged attack", "passed normal");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %16llu %16llu\n", "actual attack",
                static_cast<unsigned long long>(report.attacks_flagged),
                static_cast<unsigned long long>(report.attacks_passed));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %16llu %16llu\n", "actual normal",
                static_cast<unsigned long long>(report.normals_flagged),
                static_cast<unsigned long long>(report.normals_passed));
  out += buf;
  std::snprintf(buf, sizeof buf, "\ntpr=%.6f tnr=%.6f fpr=%.6f fnr=%.6f\n", report.tpr(),
                report.tnr(), report.fpr(), report.fnr());
  out += buf;
  return out;
}

void save_report(const DetectionReport& report, const std::filesystem::path& path) {
  atomic_write(path, report_kv(report));
}

DetectionReport load_report(const std::filesystem::path& path) {
  return parse_report_kv(read_file(path));
}

}  // namespace candelay

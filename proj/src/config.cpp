#include "candelay/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "candelay/io.hpp"

namespace candelay {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.contains(item.key())) bad("unknown key '" + item.key() + "' in " + where);
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& where) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) bad(std::string(key) + " in " + where + " must be a number");
  return v->get<double>();
}

int64_t get_integer(const json& obj, const char* key, int64_t fallback,
                    const std::string& where) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) bad(std::string(key) + " in " + where + " must be an integer");
  return v->get<int64_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json* v = find(obj, key);
  if (!v || !v->is_string()) bad(std::string(key) + " in " + where + " must be a string");
  return v->get<std::string>();
}

uint16_t parse_id_text(const std::string& text) {
  std::string_view sv = text;
  int base = 10;
  if (sv.starts_with("0x") || sv.starts_with("0X")) {
    sv.remove_prefix(2);
    base = 16;
  }
  uint64_t v = 0;
  const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v, base);
  if (res.ec != std::errc{} || res.ptr != sv.data() + sv.size() || sv.empty() ||
      v > kMaxBaseId)
    bad("bad arbitration id '" + text + "'");
  return static_cast<uint16_t>(v);
}

uint16_t parse_id_value(const json& v, const std::string& where) {
  if (v.is_string()) return parse_id_text(v.get<std::string>());
  if (v.is_number_unsigned() || v.is_number_integer()) {
    const int64_t n = v.get<int64_t>();
    if (n < 0 || n > kMaxBaseId) bad("arbitration id out of range in " + where);
    return static_cast<uint16_t>(n);
  }
  bad("arbitration id in " + where + " must be a string or integer");
}

EcuProfile parse_ecu(const json& obj, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  check_keys(obj,
             {"label", "fall_delay_ns", "rise_delay_ns", "jitter_sigma_ns", "clock_ppm"},
             where);
  EcuProfile ecu;
  ecu.label = get_string(obj, "label", where);
  ecu.fall_delay_ns = get_number(obj, "fall_delay_ns", 0.0, where);
  ecu.rise_delay_ns = get_number(obj, "rise_delay_ns", 0.0, where);
  ecu.jitter_sigma_ns = get_number(obj, "jitter_sigma_ns", 0.0, where);
  ecu.clock_ppm = get_number(obj, "clock_ppm", 0.0, where);
  return ecu;
}

json ecu_to_json(const EcuProfile& ecu) {
  return json{{"clock_ppm", ecu.clock_ppm},
              {"fall_delay_ns", ecu.fall_delay_ns},
              {"jitter_sigma_ns", ecu.jitter_sigma_ns},
              {"label", ecu.label},
              {"rise_delay_ns", ecu.rise_delay_ns}};
}

std::string id_key(uint16_t id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%03x", id);
  return buf;
}

bool valid_label(const std::string& label) {
  if (label.empty() || label == "?") return false;
  return std::all_of(label.begin(), label.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("top level must be an object");
  check_keys(doc, {"bus", "pipeline", "scenario"}, "top level");

  ExperimentConfig cfg;

  const json* bus = find(doc, "bus");
  if (!bus || !bus->is_object()) bad("missing bus section");
  check_keys(*bus, {"bitrate_bps", "counter_tick_ns", "window_bits", "ecus", "id_assignment"},
             "bus");
  cfg.bus.bitrate_bps = get_integer(*bus, "bitrate_bps", cfg.bus.bitrate_bps, "bus");
  cfg.bus.counter_tick_ns =
      get_integer(*bus, "counter_tick_ns", cfg.bus.counter_tick_ns, "bus");
  cfg.bus.window_bits =
      static_cast<int>(get_integer(*bus, "window_bits", cfg.bus.window_bits, "bus"));

  const json* ecus = find(*bus, "ecus");
  if (!ecus || !ecus->is_array() || ecus->empty()) bad("bus.ecus must be a non-empty array");
  for (size_t i = 0; i < ecus->size(); ++i)
    cfg.bus.ecus.push_back(parse_ecu((*ecus)[i], "bus.ecus[" + std::to_string(i) + "]"));

  const json* ids = find(*bus, "id_assignment");
  if (!ids || !ids->is_object() || ids->empty())
    bad("bus.id_assignment must be a non-empty object");
  for (const auto& item : ids->items()) {
    const uint16_t id = parse_id_text(item.key());
    if (!item.value().is_string()) bad("id_assignment values must be ECU labels");
    if (!cfg.bus.id_assignment.emplace(id, item.value().get<std::string>()).second)
      bad("duplicate arbitration id " + id_key(id));
  }

  if (const json* pipe = find(doc, "pipeline")) {
    if (!pipe->is_object()) bad("pipeline must be an object");
    check_keys(*pipe,
               {"features", "knn_k", "cv_folds", "relieff_k", "relieff_iterations",
                "messages_per_id", "seed", "unregistered_policy"},
               "pipeline");
    if (const json* feats = find(*pipe, "features")) {
      if (!feats->is_array() || feats->empty())
        bad("pipeline.features must be a non-empty array");
      cfg.pipeline.features.clear();
      for (const json& item : *feats) {
        if (!item.is_string()) bad("pipeline.features entries must be strings");
        const auto f = feature_from_name(item.get<std::string>());
        if (!f) bad("unknown feature '" + item.get<std::string>() + "'");
        if (std::find(cfg.pipeline.features.begin(), cfg.pipeline.features.end(), *f) !=
            cfg.pipeline.features.end())
          bad("duplicate feature '" + item.get<std::string>() + "'");
        cfg.pipeline.features.push_back(*f);
      }
    }
    cfg.pipeline.knn_k =
        static_cast<int>(get_integer(*pipe, "knn_k", cfg.pipeline.knn_k, "pipeline"));
    cfg.pipeline.cv_folds =
        static_cast<int>(get_integer(*pipe, "cv_folds", cfg.pipeline.cv_folds, "pipeline"));
    cfg.pipeline.relieff_k =
        static_cast<int>(get_integer(*pipe, "relieff_k", cfg.pipeline.relieff_k, "pipeline"));
    cfg.pipeline.relieff_iterations = static_cast<int>(
        get_integer(*pipe, "relieff_iterations", cfg.pipeline.relieff_iterations, "pipeline"));
    cfg.pipeline.messages_per_id = static_cast<int>(
        get_integer(*pipe, "messages_per_id", cfg.pipeline.messages_per_id, "pipeline"));
    const int64_t seed = get_integer(*pipe, "seed", static_cast<int64_t>(cfg.pipeline.seed),
                                     "pipeline");
    if (seed < 0) bad("pipeline.seed must be non-negative");
    cfg.pipeline.seed = static_cast<uint64_t>(seed);
    if (const json* policy = find(*pipe, "unregistered_policy")) {
      if (!policy->is_string()) bad("pipeline.unregistered_policy must be a string");
      const std::string name = policy->get<std::string>();
      if (name == "warn")
        cfg.pipeline.unregistered_policy = UnregisteredIdPolicy::Warn;
      else if (name == "flag_attack")
        cfg.pipeline.unregistered_policy = UnregisteredIdPolicy::FlagAttack;
      else
        bad("unregistered_policy must be 'warn' or 'flag_attack'");
    }
  }

  if (const json* scen = find(doc, "scenario")) {
    if (!scen->is_object()) bad("scenario must be an object");
    check_keys(*scen,
               {"kind", "attacker", "foreign_ecu", "spoofed_id", "attack_count",
                "normal_count"},
               "scenario");
    ScenarioSettings s;
    s.kind = get_string(*scen, "kind", "scenario");
    const json* spoofed = find(*scen, "spoofed_id");
    if (!spoofed) bad("scenario.spoofed_id is required");
    s.spoofed_id = parse_id_value(*spoofed, "scenario");
    s.attack_count =
        static_cast<int>(get_integer(*scen, "attack_count", s.attack_count, "scenario"));
    s.normal_count =
        static_cast<int>(get_integer(*scen, "normal_count", s.normal_count, "scenario"));
    if (const json* attacker = find(*scen, "attacker")) {
      if (!attacker->is_string()) bad("scenario.attacker must be a string");
      s.attacker = attacker->get<std::string>();
    }
    if (const json* foreign = find(*scen, "foreign_ecu"))
      s.foreign_ecu = parse_ecu(*foreign, "scenario.foreign_ecu");
    cfg.scenario = std::move(s);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

void ExperimentConfig::validate() const {
  bus.validate();
  for (const EcuProfile& ecu : bus.ecus)
    if (!valid_label(ecu.label))
      bad("ECU label '" + ecu.label + "' must match [A-Za-z0-9_.-]+ and not be '?'");

  if (pipeline.features.empty()) bad("pipeline.features must not be empty");
  if (pipeline.knn_k < 1 || pipeline.knn_k % 2 == 0) bad("pipeline.knn_k must be odd");
  if (pipeline.cv_folds < 2) bad("pipeline.cv_folds must be at least 2");
  if (pipeline.relieff_k < 1) bad("pipeline.relieff_k must be positive");
  if (pipeline.messages_per_id < 1) bad("pipeline.messages_per_id must be positive");

  if (scenario) {
    if (scenario->attack_count < 0 || scenario->normal_count < 0 ||
        scenario->attack_count + scenario->normal_count < 1)
      bad("scenario counts must be non-negative and not all zero");
    if (!bus.id_assignment.contains(scenario->spoofed_id))
      bad("scenario.spoofed_id " + id_key(scenario->spoofed_id) + " is not assigned");
    if (scenario->kind == "compromised") {
      if (scenario->attacker.empty()) bad("compromised scenario needs an attacker label");
      if (!bus.find_ecu(scenario->attacker))
        bad("scenario.attacker '" + scenario->attacker + "' is not in the fleet");
      if (scenario->foreign_ecu) bad("compromised scenario does not take foreign_ecu");
    } else if (scenario->kind == "unmonitored") {
      if (!scenario->foreign_ecu) bad("unmonitored scenario needs foreign_ecu");
      scenario->foreign_ecu->validate();
      if (!valid_label(scenario->foreign_ecu->label))
        bad("foreign ECU label '" + scenario->foreign_ecu->label + "' is invalid");
      if (bus.find_ecu(scenario->foreign_ecu->label))
        bad("foreign ECU label '" + scenario->foreign_ecu->label +
            "' collides with a fleet member");
      if (!scenario->attacker.empty())
        bad("unmonitored scenario does not take an attacker label");
    } else {
      bad("scenario.kind must be 'compromised' or 'unmonitored'");
    }
  }
}

std::string config_to_json(const ExperimentConfig& config) {
  json ecus = json::array();
  for (const EcuProfile& ecu : config.bus.ecus) ecus.push_back(ecu_to_json(ecu));
  json ids = json::object();
  for (const auto& [id, label] : config.bus.id_assignment) ids[id_key(id)] = label;

  json features = json::array();
  for (Feature f : config.pipeline.features) features.push_back(feature_name(f));

  json doc = {
      {"bus",
       {{"bitrate_bps", config.bus.bitrate_bps},
        {"counter_tick_ns", config.bus.counter_tick_ns},
        {"ecus", ecus},
        {"id_assignment", ids},
        {"window_bits", config.bus.window_bits}}},
      {"pipeline",
       {{"cv_folds", config.pipeline.cv_folds},
        {"features", features},
        {"knn_k", config.pipeline.knn_k},
        {"messages_per_id", config.pipeline.messages_per_id},
        {"relieff_iterations", config.pipeline.relieff_iterations},
        {"relieff_k", config.pipeline.relieff_k},
        {"seed", config.pipeline.seed},
        {"unregistered_policy",
         config.pipeline.unregistered_policy == UnregisteredIdPolicy::Warn
             ? "warn"
             : "flag_attack"}}},
  };
  if (config.scenario) {
    json scen = {
        {"attack_count", config.scenario->attack_count},
        {"kind", config.scenario->kind},
        {"normal_count", config.scenario->normal_count},
        {"spoofed_id", id_key(config.scenario->spoofed_id)},
    };
    if (!config.scenario->attacker.empty()) scen["attacker"] = config.scenario->attacker;
    if (config.scenario->foreign_ecu)
      scen["foreign_ecu"] = ecu_to_json(*config.scenario->foreign_ecu);
    doc["scenario"] = std::move(scen);
  }
  return doc.dump(2) + "\n";
}

}  // namespace candelay

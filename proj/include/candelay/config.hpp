#pragma once

// Experiment configuration: JSON in, validated structs out, plus the
// canonical re-serialization the run manifests digest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "candelay/errors.hpp"
#include "candelay/features.hpp"
#include "candelay/ids.hpp"
#include "candelay/physim.hpp"

namespace candelay {

struct PipelineSettings {
  std::vector<Feature> features = {Feature::Mean, Feature::Rms, Feature::Max};
  int knn_k = 5;
  int cv_folds = 5;
  int relieff_k = 10;
  int relieff_iterations = 0;
  int messages_per_id = 1000;
  uint64_t seed = 1;
  UnregisteredIdPolicy unregistered_policy = UnregisteredIdPolicy::Warn;
};

struct ScenarioSettings {
  std::string kind;  // "compromised" | "unmonitored"
  std::string attacker;            // compromised: fleet ECU label
  std::optional<EcuProfile> foreign_ecu;  // unmonitored: off-fleet profile
  uint16_t spoofed_id = 0;
  int attack_count = 1000;
  int normal_count = 1000;
};

struct ExperimentConfig {
  BusConfig bus;
  PipelineSettings pipeline;
  std::optional<ScenarioSettings> scenario;

  void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical JSON form (sorted keys, no incidental whitespace variance);
// equal configs produce equal bytes, which is what gets digested into the
// run manifest.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace candelay

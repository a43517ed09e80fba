#include "candelay/pipeline.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "candelay/capture.hpp"
#include "candelay/io.hpp"
#include "candelay/rng.hpp"

namespace candelay {

namespace {

std::string config_digest(const ExperimentConfig& config) {
  return digest_hex(fnv1a64(config_to_json(config)));
}

void write_stage_manifest(const std::string& command, uint64_t seed,
                          const std::string& cfg_digest,
                          const std::vector<std::filesystem::path>& outputs,
                          const std::filesystem::path& primary) {
  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = command;
  manifest.seed = seed;
  manifest.config_digest = cfg_digest;
  for (const auto& path : outputs)
    manifest.outputs.emplace_back(path.filename().string(), file_digest(path));
  write_manifest(manifest, manifest_path_for(primary));
}

int64_t bit_time_of(const BusConfig& bus) {
  return static_cast<int64_t>(std::llround(bus.bit_time_ns()));
}

std::vector<LabeledVector> to_labeled_vectors(const std::vector<FeatureRow>& rows,
                                              std::span<const Feature> features,
                                              const char* stage) {
  std::vector<LabeledVector> out;
  out.reserve(rows.size());
  for (const FeatureRow& row : rows) {
    if (row.label.empty())
      throw DataError(std::string(stage) + ": row " + std::to_string(row.message_index) +
                      " has no sender label");
    out.push_back(LabeledVector{project(row.features, features), row.label});
  }
  return out;
}

}  // namespace

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".manifest.json";
  return p;
}

size_t run_simulate(const ExperimentConfig& config, uint64_t seed,
                    const std::filesystem::path& out_log) {
  config.validate();
  Rng rng(seed);
  const std::vector<EdgeTrace> traces =
      schedule_traffic(config.bus, config.pipeline.messages_per_id, rng.next_u64());

  CaptureLog log;
  for (const EcuProfile& ecu : config.bus.ecus) log.labels.push_back(ecu.label);

  const double bit_ns = config.bus.bit_time_ns();
  double t = 0.0;
  for (const EdgeTrace& trace : traces) {
    log.messages.push_back(acquire(trace, config.bus, static_cast<int64_t>(t)));
    // Advance past the frame plus intermission and an idle gap so SOF
    // counter values spread over the whole 21-bit range.
    const size_t frame_bits = serialize_stuffed(trace.frame).size() + kIntermissionBits;
    t += static_cast<double>(frame_bits + 10 + rng.below(64)) * bit_ns;
  }

  write_capture_log(log, out_log);
  write_stage_manifest("simulate", seed, config_digest(config), {out_log}, out_log);
  return log.messages.size();
}

size_t run_extract(const ExperimentConfig& config, const std::filesystem::path& in_log,
                   const std::filesystem::path& out_csv) {
  config.validate();
  const CaptureLog log = read_capture_log(in_log);
  const int64_t bit_ns = bit_time_of(config.bus);
  const int64_t tick_ns = config.bus.counter_tick_ns;

  std::vector<FeatureRow> rows;
  rows.reserve(log.messages.size());
  for (size_t i = 0; i < log.messages.size(); ++i) {
    const MessageCapture& msg = log.messages[i];
    FeatureRow row;
    row.message_index = static_cast<uint32_t>(i);
    row.arbitration_id = msg.arbitration_id;
    row.label = msg.true_sender.value_or("");
    row.features = extract(message_delays(msg, bit_ns, tick_ns));
    rows.push_back(std::move(row));
  }

  write_feature_csv(rows, out_csv);
  write_stage_manifest("extract", config.pipeline.seed, config_digest(config), {out_csv},
                       out_csv);
  return rows.size();
}

FeatureWeights run_rank(const ExperimentConfig& config, uint64_t seed,
                        const std::filesystem::path& in_csv,
                        const std::filesystem::path& out_weights) {
  config.validate();
  const std::vector<FeatureRow> rows = read_feature_csv(in_csv);

  std::vector<LabeledFeatures> dataset;
  dataset.reserve(rows.size());
  for (const FeatureRow& row : rows) {
    if (row.label.empty())
      throw DataError("rank: row " + std::to_string(row.message_index) +
                      " has no sender label");
    dataset.push_back(LabeledFeatures{row.features, row.label});
  }

  ReliefFParams params;
  params.k_neighbors = config.pipeline.relieff_k;
  params.iterations = config.pipeline.relieff_iterations;
  params.seed = seed;
  const FeatureWeights weights = relief_f(dataset, params);

  atomic_write(out_weights, render_weights(weights));
  write_stage_manifest("rank", seed, config_digest(config), {out_weights}, out_weights);
  return weights;
}

std::string render_crossval_summary(const CrossValResult& result) {
  std::string out;
  out += "folds " + std::to_string(result.fold_accuracy.size()) + "\n";
  out += "mean_accuracy " + format_double(result.mean_accuracy) + "\n";
  out += "fold_accuracy";
  for (double acc : result.fold_accuracy) out += " " + format_double(acc);
  out += "\nclasses";
  for (const auto& label : result.pooled.labels) out += " " + label;
  out += "\n";
  for (size_t i = 0; i < result.pooled.labels.size(); ++i) {
    out += "confusion " + result.pooled.labels[i];
    for (uint64_t c : result.pooled.counts[i]) out += " " + std::to_string(c);
    out += "\n";
  }
  for (const auto& label : result.pooled.labels)
    out += "recall " + label + " " + format_double(result.pooled.recall(label)) + "\n";
  out += "pooled_accuracy " + format_double(result.pooled.accuracy()) + "\n";
  return out;
}

CrossValResult run_crossval(const ExperimentConfig& config, uint64_t seed,
                            const std::filesystem::path& in_csv,
                            const std::filesystem::path& out_summary,
                            const std::filesystem::path* model_out) {
  config.validate();
  const std::vector<FeatureRow> rows = read_feature_csv(in_csv);
  const std::vector<LabeledVector> data =
      to_labeled_vectors(rows, config.pipeline.features, "crossval");

  CrossValResult result = kfold_cv(data, config.pipeline.features, config.pipeline.knn_k,
                                   config.pipeline.cv_folds, seed);
  atomic_write(out_summary, render_crossval_summary(result));

  std::vector<std::filesystem::path> outputs = {out_summary};
  if (model_out) {
    save_model(train(data, config.pipeline.features, config.pipeline.knn_k), *model_out);
    outputs.push_back(*model_out);
  }
  write_stage_manifest("crossval", seed, config_digest(config), outputs, out_summary);
  return result;
}

DetectionReport run_detect(const ExperimentConfig& config, uint64_t seed,
                           const std::filesystem::path& model_path,
                           const std::filesystem::path& out_report) {
  config.validate();
  if (!config.scenario)
    throw ConfigError("detect: the config has no scenario section");
  const ScenarioSettings& scen = *config.scenario;

  ScenarioParams params;
  params.spoofed_id = scen.spoofed_id;
  params.attack_count = scen.attack_count;
  params.normal_count = scen.normal_count;
  params.seed = seed;

  std::vector<LabeledMessage> messages;
  if (scen.kind == "compromised")
    messages = scenario_compromised(config.bus, scen.attacker, params);
  else
    messages = scenario_unmonitored(config.bus, *scen.foreign_ecu, params);

  const KnnModel model = load_model(model_path);
  const SenderRegistry registry = registry_from_config(config.bus);
  const int64_t bit_ns = bit_time_of(config.bus);
  const int64_t tick_ns = config.bus.counter_tick_ns;

  std::vector<Verdict> verdicts;
  std::vector<bool> truth;
  verdicts.reserve(messages.size());
  truth.reserve(messages.size());
  for (const LabeledMessage& msg : messages) {
    verdicts.push_back(judge(model, registry, msg.capture,
                             config.pipeline.unregistered_policy, bit_ns, tick_ns));
    truth.push_back(msg.is_attack);
  }

  const DetectionReport report = tally(verdicts, truth);
  save_report(report, out_report);
  write_stage_manifest("detect", seed, config_digest(config), {out_report}, out_report);
  return report;
}

std::string run_report(const std::filesystem::path& in_report,
                       const std::filesystem::path* out_table) {
  const DetectionReport report = load_report(in_report);
  const std::string table = render_report_table(report);
  if (out_table) {
    atomic_write(*out_table, table);
    write_stage_manifest("report", 0, "", {*out_table}, *out_table);
  }
  return table;
}

}  // namespace candelay
